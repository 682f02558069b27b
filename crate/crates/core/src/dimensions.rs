//! Dimension systems, multi-dependent-parameter dimensionless constructions
//! and numeric evaluation of the resulting dimensionless groups.
//!
//! Governing parameters split into `m` dimensionally independent parameters
//! `a_1..a_m` and `l` dependent ones `b_1..b_l`. Each dimensionless group is
//! `Π_j = b^β⁽ʲ⁾ · a^α⁽ʲ⁾`; the caller picks the `β` rows and the `α` rows
//! follow uniquely as `α = -Λ⁻¹ Γ β`, where the columns of `Λ` and `Γ` are the
//! dimension vectors of the independent and dependent parameters.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};

/// Tolerance on `‖Γβ + Λα‖∞` for a group to count as dimensionless.
pub const DIMENSIONLESS_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    /// Exponents over the base dimensions, in base-dimension order.
    pub dims: Vec<f64>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, dims: impl Into<Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            dims: dims.into(),
        }
    }
}

/// Base dimensions plus the dimension vectors of every governing parameter.
#[derive(Debug, Clone)]
pub struct DimensionSystem {
    base_dims: Vec<String>,
    independent: Vec<Parameter>,
    dependent: Vec<Parameter>,
    target: Parameter,
    lambda: Matrix,
    gamma: Matrix,
    lambda_lu: Lu,
}

impl DimensionSystem {
    pub fn new(
        base_dims: Vec<String>,
        independent: Vec<Parameter>,
        dependent: Vec<Parameter>,
        target: Parameter,
    ) -> Result<Self> {
        let m = base_dims.len();
        if independent.len() != m {
            return Err(Error::Config(format!(
                "{} base dimensions need exactly {m} independent parameters, got {}",
                m,
                independent.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in independent.iter().chain(&dependent).chain([&target]) {
            if p.dims.len() != m {
                return Err(Error::Config(format!(
                    "parameter `{}` has {} dimension exponents, expected {m}",
                    p.name,
                    p.dims.len()
                )));
            }
            if p.dims.iter().any(|d| !d.is_finite()) {
                return Err(Error::Config(format!("parameter `{}` has a non-finite dimension", p.name)));
            }
            if !seen.insert(p.name.as_str()) {
                return Err(Error::Config(format!("duplicate parameter name `{}`", p.name)));
            }
        }
        let lambda = column_matrix(m, &independent);
        let gamma = column_matrix(m, &dependent);
        let lambda_lu =
            Lu::factor(&lambda).map_err(|s| Error::SingularDimensionMatrix { ratio: s.ratio })?;
        Ok(Self {
            base_dims,
            independent,
            dependent,
            target,
            lambda,
            gamma,
            lambda_lu,
        })
    }

    pub fn base_dims(&self) -> &[String] {
        &self.base_dims
    }

    pub fn independent(&self) -> &[Parameter] {
        &self.independent
    }

    pub fn dependent(&self) -> &[Parameter] {
        &self.dependent
    }

    pub fn target(&self) -> &Parameter {
        &self.target
    }

    /// Number of independent parameters (`m`).
    pub fn m(&self) -> usize {
        self.independent.len()
    }

    /// Number of dependent parameters (`l`).
    pub fn l(&self) -> usize {
        self.dependent.len()
    }

    /// `m × m`, column `k` is the dimension vector of `a_k`.
    pub fn lambda(&self) -> &Matrix {
        &self.lambda
    }

    /// `m × l`, column `i` is the dimension vector of `b_i`.
    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }

    pub(crate) fn lambda_lu(&self) -> &Lu {
        &self.lambda_lu
    }

    /// Every parameter name: independent, then dependent, then the target.
    pub fn parameter_names(&self) -> impl Iterator<Item = &str> {
        self.independent
            .iter()
            .chain(&self.dependent)
            .chain([&self.target])
            .map(|p| p.name.as_str())
    }

    /// The unique `α` making `b^β a^α` dimensionless: `α = -Λ⁻¹ Γ β`.
    pub fn dependent_alpha(&self, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.l() {
            return Err(Error::Config(format!(
                "exponent row has {} entries, expected {}",
                beta.len(),
                self.l()
            )));
        }
        let dims = self.gamma.mul_vec(beta);
        Ok(self.lambda_lu.solve(&dims).into_iter().map(|x| -x).collect())
    }

    /// `α` for the target group `a^βa · b^β · a^α`.
    pub fn target_alpha(&self, beta_a: f64, beta: &[f64]) -> Result<Vec<f64>> {
        if beta.len() != self.l() {
            return Err(Error::Config(format!(
                "target exponent row has {} entries, expected {}",
                beta.len(),
                self.l()
            )));
        }
        let mut dims = self.gamma.mul_vec(beta);
        for (d, t) in dims.iter_mut().zip(&self.target.dims) {
            *d += beta_a * t;
        }
        Ok(self.lambda_lu.solve(&dims).into_iter().map(|x| -x).collect())
    }

    /// Net dimension vector of `a^βa b^β a^α`.
    pub fn net_dimension(&self, beta_a: f64, beta: &[f64], alpha: &[f64]) -> Vec<f64> {
        let mut out = self.gamma.mul_vec(beta);
        for (o, (x, t)) in out
            .iter_mut()
            .zip(self.lambda.mul_vec(alpha).iter().zip(&self.target.dims))
        {
            *o += x + beta_a * t;
        }
        out
    }
}

fn column_matrix(m: usize, params: &[Parameter]) -> Matrix {
    let mut out = Matrix::zeros(m, params.len());
    for (j, p) in params.iter().enumerate() {
        for (i, d) in p.dims.iter().enumerate() {
            out[(i, j)] = *d;
        }
    }
    out
}

/// One dimensionless argument `Π_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiDefinition {
    pub name: String,
    /// Exponents of `b_1..b_l`.
    pub beta: Vec<f64>,
    /// Exponents of `a_1..a_m`.
    pub alpha: Vec<f64>,
}

/// The dimensionless quantity of interest `Π = a^βa b^β a^α`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPi {
    pub name: String,
    pub beta_a: f64,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Exponents chosen by the user for the target group.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetExponents {
    pub name: String,
    pub beta_a: f64,
    pub beta: Vec<f64>,
}

/// A validated MDDP construction: `l` independent dimensionless arguments
/// and one target group over a [`DimensionSystem`].
#[derive(Debug, Clone)]
pub struct MddpConstruction {
    system: DimensionSystem,
    pis: Vec<PiDefinition>,
    target: TargetPi,
}

/// Builds a construction from user-chosen `β` rows, filling in `α`.
pub fn build_construction(
    system: &DimensionSystem,
    beta_rows: &[(String, Vec<f64>)],
    target: &TargetExponents,
) -> Result<MddpConstruction> {
    let l = system.l();
    if beta_rows.len() != l {
        return Err(Error::Config(format!(
            "{l} dependent parameters need exactly {l} dimensionless groups, got {}",
            beta_rows.len()
        )));
    }
    if target.beta_a == 0.0 {
        return Err(Error::ZeroTargetExponent);
    }
    let rows: Vec<&[f64]> = beta_rows.iter().map(|(_, b)| b.as_slice()).collect();
    if rows.iter().any(|r| r.len() != l) {
        return Err(Error::Config(format!("every exponent row needs {l} entries")));
    }
    let beta_matrix = Matrix::from_rows(&rows);
    let rank = beta_matrix.rank();
    if rank < l {
        return Err(Error::DependentRows { rank, expected: l });
    }
    let mut pis = Vec::with_capacity(l);
    for (name, beta) in beta_rows {
        let alpha = system.dependent_alpha(beta)?;
        pis.push(PiDefinition {
            name: name.clone(),
            beta: beta.clone(),
            alpha,
        });
    }
    let target = TargetPi {
        name: target.name.clone(),
        beta_a: target.beta_a,
        beta: target.beta.clone(),
        alpha: system.target_alpha(target.beta_a, &target.beta)?,
    };
    let construction = MddpConstruction {
        system: system.clone(),
        pis,
        target,
    };
    let residual = construction.dimension_residual();
    if residual >= DIMENSIONLESS_TOLERANCE {
        return Err(Error::Config(format!(
            "construction is not dimensionless to {DIMENSIONLESS_TOLERANCE:e} (residual {residual:e})"
        )));
    }
    Ok(construction)
}

impl MddpConstruction {
    pub fn system(&self) -> &DimensionSystem {
        &self.system
    }

    pub fn pis(&self) -> &[PiDefinition] {
        &self.pis
    }

    pub fn target(&self) -> &TargetPi {
        &self.target
    }

    /// `l × l`, row `j` is `β⁽ʲ⁾`.
    pub fn beta_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.pis.iter().map(|p| p.beta.clone()).collect::<Vec<_>>())
    }

    /// `l × m`, row `j` is `α⁽ʲ⁾`.
    pub fn alpha_matrix(&self) -> Matrix {
        Matrix::from_rows(&self.pis.iter().map(|p| p.alpha.clone()).collect::<Vec<_>>())
    }

    /// Largest absolute net dimension exponent over all groups.
    pub fn dimension_residual(&self) -> f64 {
        let sys = &self.system;
        let mut worst: f64 = 0.0;
        for pi in &self.pis {
            for d in sys.net_dimension(0.0, &pi.beta, &pi.alpha) {
                worst = worst.max(d.abs());
            }
        }
        let t = &self.target;
        for d in sys.net_dimension(t.beta_a, &t.beta, &t.alpha) {
            worst = worst.max(d.abs());
        }
        worst
    }

    /// Names of `(Π, Π_1..Π_l)`.
    pub fn column_names(&self) -> Vec<String> {
        std::iter::once(self.target.name.clone())
            .chain(self.pis.iter().map(|p| p.name.clone()))
            .collect()
    }

    /// Evaluates `(Π, Π_1..Π_l)` on a sample.
    pub fn evaluate_pi(&self, sample: &ParameterSample) -> Result<Vec<f64>> {
        let logs = self.log_parameters(sample)?;
        Ok(self.log_pis(&logs).into_iter().map(f64::exp).collect())
    }

    /// `ln` of every parameter in [`DimensionSystem::parameter_names`] order.
    pub(crate) fn log_parameters(&self, sample: &ParameterSample) -> Result<Vec<f64>> {
        self.system
            .parameter_names()
            .map(|name| sample.get(name).map(f64::ln))
            .collect()
    }

    /// `ln(Π, Π_1..Π_l)` from parameter logarithms.
    pub(crate) fn log_pis(&self, log_params: &[f64]) -> Vec<f64> {
        let m = self.system.m();
        let l = self.system.l();
        let (log_a, rest) = log_params.split_at(m);
        let (log_b, log_target) = rest.split_at(l);
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let t = &self.target;
        let mut out = Vec::with_capacity(l + 1);
        out.push(t.beta_a * log_target[0] + dot(&t.beta, log_b) + dot(&t.alpha, log_a));
        for pi in &self.pis {
            out.push(dot(&pi.beta, log_b) + dot(&pi.alpha, log_a));
        }
        out
    }
}

/// Positive values for named parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSample {
    values: BTreeMap<String, f64>,
}

impl ParameterSample {
    pub fn new<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut values = BTreeMap::new();
        for (name, value) in pairs {
            let name = name.into();
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositiveParameter { name, value });
            }
            values.insert(name, value);
        }
        Ok(Self { values })
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingParameter(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub(crate) fn insert_unchecked(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rough_pipe() -> DimensionSystem {
        // M L T
        DimensionSystem::new(
            vec!["M".into(), "L".into(), "T".into()],
            vec![
                Parameter::new("rho", [1.0, -3.0, 0.0]),
                Parameter::new("D", [0.0, 1.0, 0.0]),
                Parameter::new("mu", [1.0, -1.0, -1.0]),
            ],
            vec![
                Parameter::new("Ubar", [0.0, 1.0, -1.0]),
                Parameter::new("r", [0.0, 1.0, 0.0]),
            ],
            Parameter::new("f", [0.0, 0.0, 0.0]),
        )
        .unwrap()
    }

    fn pressure_drop() -> DimensionSystem {
        DimensionSystem::new(
            vec!["M".into(), "L".into(), "T".into()],
            vec![
                Parameter::new("rho", [1.0, -3.0, 0.0]),
                Parameter::new("mu", [1.0, -1.0, -1.0]),
                Parameter::new("delta", [0.0, 1.0, 0.0]),
            ],
            vec![
                Parameter::new("y", [0.0, 1.0, 0.0]),
                Parameter::new("G", [1.0, -2.0, -2.0]),
            ],
            Parameter::new("U", [0.0, 1.0, -1.0]),
        )
        .unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn zero_beta_gives_zero_alpha() {
        assert_close(&rough_pipe().dependent_alpha(&[0.0, 0.0]).unwrap(), &[0.0; 3], 0.0);
    }

    #[test]
    fn wall_distance_exponents() {
        // y+ = y rho^1/2 delta^1/2 G^1/2 / mu
        let alpha = pressure_drop().dependent_alpha(&[1.0, 0.5]).unwrap();
        assert_close(&alpha, &[0.5, -1.0, 0.5], 1e-12);
    }

    #[test]
    fn singular_lambda_is_rejected() {
        let err = DimensionSystem::new(
            vec!["M".into(), "L".into()],
            vec![Parameter::new("a", [1.0, 1.0]), Parameter::new("b", [2.0, 2.0])],
            vec![],
            Parameter::new("t", [0.0, 0.0]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularDimensionMatrix { .. }));
    }

    #[test]
    fn rough_pipe_construction() {
        let sys = rough_pipe();
        let c = build_construction(
            &sys,
            &[("Re".into(), vec![1.0, 0.0]), ("r/D".into(), vec![0.0, 1.0])],
            &TargetExponents {
                name: "f".into(),
                beta_a: 1.0,
                beta: vec![0.0, 0.0],
            },
        )
        .unwrap();
        assert_close(&c.pis()[0].alpha, &[1.0, 1.0, -1.0], 1e-12);
        assert_close(&c.pis()[1].alpha, &[0.0, -1.0, 0.0], 1e-12);
        assert_close(&c.target().alpha, &[0.0; 3], 1e-12);
        assert!(c.dimension_residual() < 1e-12);

        let sample = ParameterSample::new([
            ("rho", 1200.0),
            ("D", 0.1),
            ("mu", 0.035),
            ("Ubar", 1.0),
            ("r", 0.001),
            ("f", 0.02),
        ])
        .unwrap();
        let pis = c.evaluate_pi(&sample).unwrap();
        assert!((pis[0] - 0.02).abs() < 1e-14);
        assert!((pis[1] - 1200.0 * 0.1 / 0.035).abs() < 1e-9);
        assert!((pis[2] - 0.01).abs() < 1e-14);
    }

    #[test]
    fn duplicate_rows_are_dependent() {
        let err = build_construction(
            &rough_pipe(),
            &[("A".into(), vec![1.0, 0.0]), ("B".into(), vec![1.0, 0.0])],
            &TargetExponents {
                name: "f".into(),
                beta_a: 1.0,
                beta: vec![0.0, 0.0],
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::DependentRows { rank: 1, expected: 2 }));
    }

    #[test]
    fn zero_target_exponent_is_rejected() {
        let err = build_construction(
            &rough_pipe(),
            &[("Re".into(), vec![1.0, 0.0]), ("r/D".into(), vec![0.0, 1.0])],
            &TargetExponents {
                name: "f".into(),
                beta_a: 0.0,
                beta: vec![0.0, 0.0],
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::ZeroTargetExponent));
    }

    #[test]
    fn friction_coordinates_match_explicit_formulas() {
        let sys = pressure_drop();
        let c = build_construction(
            &sys,
            &[
                ("y+".into(), vec![1.0, 0.5]),
                ("Re_tau".into(), vec![0.0, 0.5]),
            ],
            &TargetExponents {
                name: "u+".into(),
                beta_a: 1.0,
                beta: vec![0.0, -0.5],
            },
        )
        .unwrap();
        // Re_tau = G^1/2 rho^1/2 delta^3/2 / mu ; u+ = U rho^1/2 / (G^1/2 delta^1/2)
        assert_close(&c.pis()[1].alpha, &[0.5, -1.0, 1.5], 1e-12);
        assert_close(&c.target().alpha, &[0.5, 0.0, -0.5], 1e-12);

        let (rho, mu, delta, y, g, u) = (998.0_f64, 1e-3_f64, 0.02_f64, 0.003_f64, 4.5_f64, 0.7_f64);
        let sample = ParameterSample::new([
            ("rho", rho),
            ("mu", mu),
            ("delta", delta),
            ("y", y),
            ("G", g),
            ("U", u),
        ])
        .unwrap();
        let pis = c.evaluate_pi(&sample).unwrap();
        let u_plus = u * rho.sqrt() / (g.sqrt() * delta.sqrt());
        let y_plus = y * rho.sqrt() * delta.sqrt() * g.sqrt() / mu;
        let re_tau = g.sqrt() * rho.sqrt() * delta.powf(1.5) / mu;
        for (got, want) in pis.iter().zip([u_plus, y_plus, re_tau]) {
            assert!((got / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_ones_sample_gives_unit_groups() {
        let sys = rough_pipe();
        let c = build_construction(
            &sys,
            &[("Re".into(), vec![1.0, 0.0]), ("r/D".into(), vec![0.0, 1.0])],
            &TargetExponents {
                name: "f".into(),
                beta_a: 1.0,
                beta: vec![0.0, 0.0],
            },
        )
        .unwrap();
        let sample = ParameterSample::new(sys.parameter_names().map(|n| (n.to_string(), 1.0))).unwrap();
        assert_eq!(c.evaluate_pi(&sample).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn sample_rejects_non_positive_values() {
        let err = ParameterSample::new([("f", 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveParameter { .. }));
        assert!(ParameterSample::new([("f", -1.0)]).is_err());
        assert!(ParameterSample::new([("f", f64::NAN)]).is_err());
    }

    #[test]
    fn missing_parameter_is_reported() {
        let sys = rough_pipe();
        let c = build_construction(
            &sys,
            &[("Re".into(), vec![1.0, 0.0]), ("r/D".into(), vec![0.0, 1.0])],
            &TargetExponents {
                name: "f".into(),
                beta_a: 1.0,
                beta: vec![0.0, 0.0],
            },
        )
        .unwrap();
        let sample = ParameterSample::new([("rho", 1.0)]).unwrap();
        assert!(matches!(c.evaluate_pi(&sample), Err(Error::MissingParameter(_))));
    }
}
