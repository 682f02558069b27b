//! JSON problem descriptions: dimension system, construction rows and an
//! optional incomplete-similarity block.
//!
//! ```json
//! {
//!   "dimensions": ["M", "L", "T"],
//!   "independent": {"rho": [1, -3, 0], "D": [0, 1, 0], "mu": [1, -1, -1]},
//!   "dependent": {"r": [0, 1, 0], "Ubar": [0, 1, -1]},
//!   "target": {"f": [0, 0, 0]},
//!   "pis": [{"name": "r/D", "beta": {"r": "1"}}, {"name": "Re", "beta": {"Ubar": "1"}}],
//!   "target_pi": {"name": "f", "beta_a": "1", "beta": {}},
//!   "incomplete": {"retained": 1, "xi_target": ["1/4"], "xi_matrix": [["3/4"]]}
//! }
//! ```
//!
//! Object key order is significant: it fixes the parameter order. Missing
//! `beta` entries default to zero. Exponents may be numbers or strings such
//! as `"3/4"`.

use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::dimensions::{build_construction, DimensionSystem, MddpConstruction, Parameter, TargetExponents};
use crate::error::{Error, Result};
use crate::groups::IncompleteSimilarity;
use crate::linalg::Matrix;
use crate::rational::Exponent;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    dimensions: Vec<String>,
    independent: Map<String, Value>,
    dependent: Map<String, Value>,
    target: Map<String, Value>,
    pis: Vec<RawPi>,
    target_pi: RawTargetPi,
    #[serde(default)]
    incomplete: Option<RawIncomplete>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPi {
    name: String,
    #[serde(default)]
    beta: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTargetPi {
    #[serde(default)]
    name: Option<String>,
    beta_a: Exponent,
    #[serde(default)]
    beta: Map<String, Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIncomplete {
    retained: usize,
    xi_target: Vec<Exponent>,
    #[serde(default)]
    xi_matrix: Vec<Vec<Exponent>>,
}

/// A parsed problem description.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: DimensionSystem,
    pub construction: MddpConstruction,
    pub incomplete: Option<IncompleteSimilarity>,
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    let raw: RawProblem =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

    let params = |map: &Map<String, Value>| -> Result<Vec<Parameter>> {
        map.iter()
            .map(|(name, dims)| Ok(Parameter::new(name.clone(), exponents(dims, name)?)))
            .collect()
    };
    let independent = params(&raw.independent)?;
    let dependent = params(&raw.dependent)?;
    let mut target = params(&raw.target)?;
    if target.len() != 1 {
        return Err(Error::Config(format!(
            "`target` must name exactly one parameter, got {}",
            target.len()
        )));
    }
    let system = DimensionSystem::new(raw.dimensions, independent, dependent, target.remove(0))?;

    let dep_names: Vec<&str> = system.dependent().iter().map(|p| p.name.as_str()).collect();
    let rows = raw
        .pis
        .iter()
        .map(|pi| Ok((pi.name.clone(), beta_row(&pi.beta, &dep_names, &pi.name)?)))
        .collect::<Result<Vec<_>>>()?;
    let target_name = raw
        .target_pi
        .name
        .clone()
        .unwrap_or_else(|| system.target().name.clone());
    let target_exponents = TargetExponents {
        beta: beta_row(&raw.target_pi.beta, &dep_names, &target_name)?,
        name: target_name,
        beta_a: raw.target_pi.beta_a.0,
    };
    let construction = build_construction(&system, &rows, &target_exponents)?;

    let incomplete = raw
        .incomplete
        .map(|inc| incomplete_spec(system.l(), inc))
        .transpose()?;

    Ok(Problem {
        system,
        construction,
        incomplete,
    })
}

fn incomplete_spec(l: usize, raw: RawIncomplete) -> Result<IncompleteSimilarity> {
    let rows: Vec<Vec<f64>> = raw
        .xi_matrix
        .iter()
        .map(|r| r.iter().map(|e| e.0).collect())
        .collect();
    if rows.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(Error::Config("`xi_matrix` rows have different lengths".into()));
    }
    let matrix = if rows.is_empty() {
        Matrix::zeros(0, l.saturating_sub(raw.retained))
    } else {
        Matrix::from_rows(&rows)
    };
    IncompleteSimilarity::new(l, raw.retained, matrix, raw.xi_target.iter().map(|e| e.0).collect())
}

fn exponents(value: &Value, context: &str) -> Result<Vec<f64>> {
    let list: Vec<Exponent> = serde_json::from_value(value.clone())
        .map_err(|e| Error::Config(format!("`{context}`: {e}")))?;
    Ok(list.into_iter().map(|e| e.0).collect())
}

fn beta_row(map: &Map<String, Value>, dependent: &[&str], context: &str) -> Result<Vec<f64>> {
    let mut row = vec![0.0; dependent.len()];
    for (name, value) in map {
        let idx = dependent.iter().position(|d| d == name).ok_or_else(|| {
            Error::Config(format!(
                "`{context}` uses `{name}`, which is not a dependent parameter"
            ))
        })?;
        let e: Exponent = serde_json::from_value(value.clone())
            .map_err(|e| Error::Config(format!("`{context}`: {e}")))?;
        row[idx] = e.0;
    }
    Ok(row)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROUGH: &str = r#"{
        "dimensions": ["M", "L", "T"],
        "independent": {"rho": [1, -3, 0], "D": [0, 1, 0], "mu": [1, -1, -1]},
        "dependent": {"r": [0, 1, 0], "Ubar": [0, 1, -1]},
        "target": {"f": [0, 0, 0]},
        "pis": [{"name": "r/D", "beta": {"r": "1"}}, {"name": "Re", "beta": {"Ubar": 1}}],
        "target_pi": {"beta_a": "1"},
        "incomplete": {"retained": 1, "xi_target": ["1/4"], "xi_matrix": [["3/4"]]}
    }"#;

    #[test]
    fn parses_rough_pipe_problem() {
        let p = parse_problem(ROUGH).unwrap();
        let names: Vec<&str> = p.system.dependent().iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["r", "Ubar"]);
        for (a, e) in p.construction.pis()[1].alpha.iter().zip([1.0, 1.0, -1.0]) {
            assert!((a - e).abs() < 1e-12);
        }
        assert_eq!(p.construction.target().name, "f");
        let inc = p.incomplete.unwrap();
        assert_eq!(inc.retained(), 1);
        assert_eq!(inc.xi_target(), [0.25]);
        assert_eq!(inc.xi_matrix()[(0, 0)], 0.75);
    }

    #[test]
    fn duplicate_rows_are_rejected() {
        let text = ROUGH.replace(r#"{"Ubar": 1}"#, r#"{"r": "1"}"#);
        assert!(matches!(
            parse_problem(&text),
            Err(Error::DependentRows { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn unknown_dependent_name_is_a_config_error() {
        let text = ROUGH.replace(r#"{"Ubar": 1}"#, r#"{"U": 1}"#);
        assert!(matches!(parse_problem(&text), Err(Error::Config(_))));
    }

    #[test]
    fn malformed_json_is_a_config_error() {
        assert!(matches!(parse_problem("{"), Err(Error::Config(_))));
    }
}
