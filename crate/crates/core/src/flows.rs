//! Analytic pipe- and channel-flow models used as data sources: laminar
//! Newtonian profiles in pressure-drop coordinates, Herschel-Bulkley
//! profiles and friction factors, the Buckingham-Reiner bulk friction law,
//! and a loader for rough-pipe friction measurements.

use std::path::Path;

use crate::dataset::DimensionlessDataset;
use crate::error::{Error, Result};

/// Laminar velocity in wall units, `u⁺ = y⁺ - y⁺²/(2 Re_τ)`.
pub fn laminar_uplus(re_tau: f64, y_plus: f64) -> Result<f64> {
    if !(re_tau > 0.0 && y_plus > 0.0 && y_plus <= re_tau) {
        return Err(Error::OutOfDomain(format!(
            "laminar profile needs 0 < y+ <= Re_tau, got y+ = {y_plus}, Re_tau = {re_tau}"
        )));
    }
    Ok(y_plus - y_plus * y_plus / (2.0 * re_tau))
}

/// Plug radius ratio `φ = (He/Re_τ²)^{n/(2-n)}`.
pub fn hb_phi(n: f64, he: f64, re_tau: f64) -> f64 {
    (he / (re_tau * re_tau)).powf(n / (2.0 - n))
}

fn check_hb(n: f64, phi: f64) -> Result<()> {
    if !(n > 0.0 && n < 2.0) {
        return Err(Error::OutOfDomain(format!("behavior index must lie in (0, 2), got {n}")));
    }
    if !(0.0..1.0).contains(&phi) {
        return Err(Error::OutOfDomain(format!(
            "plug ratio must lie in [0, 1), got {phi}"
        )));
    }
    Ok(())
}

/// Herschel-Bulkley velocity in wall units at radius ratio `r̂`:
/// `u⁺ = Re_τ n/(2(n+1)) [(1-φ)^{(n+1)/n} - (r̂-φ)^{(n+1)/n}]` outside the
/// plug, and its value at `r̂ = φ` inside.
pub fn hb_uplus(n: f64, phi: f64, re_tau: f64, r_hat: f64) -> Result<f64> {
    check_hb(n, phi)?;
    if !(0.0..1.0).contains(&r_hat) {
        return Err(Error::OutOfDomain(format!("radius ratio must lie in [0, 1), got {r_hat}")));
    }
    let p = (n + 1.0) / n;
    let sheared = if r_hat > phi { (r_hat - phi).powf(p) } else { 0.0 };
    Ok(re_tau * n / (2.0 * (n + 1.0)) * ((1.0 - phi).powf(p) - sheared))
}

/// `J(φ, n) = (1-φ)^{(n+1)/n} [(1-φ)²/(3n+1) + 2φ(1-φ)/(2n+1) + φ²/(n+1)]`.
pub fn hb_j(phi: f64, n: f64) -> Result<f64> {
    check_hb(n, phi)?;
    let q = 1.0 - phi;
    Ok(q.powf((n + 1.0) / n)
        * (q * q / (3.0 * n + 1.0) + 2.0 * phi * q / (2.0 * n + 1.0) + phi * phi / (n + 1.0)))
}

/// Bulk velocity in wall units, `Ū⁺ = 2∫₀¹ r̂ u⁺ dr̂ = (n/2) Re_τ J(φ, n)`.
pub fn hb_mean_uplus(n: f64, phi: f64, re_tau: f64) -> Result<f64> {
    Ok(0.5 * n * re_tau * hb_j(phi, n)?)
}

/// Fanning friction factor `f = 8 / (n² J² Re_τ²)` with `φ` from `(n, He, Re_τ)`.
pub fn hb_friction(n: f64, he: f64, re_tau: f64) -> Result<f64> {
    let j = hb_j(hb_phi(n, he, re_tau), n)?;
    Ok(8.0 / (n * n * j * j) / (re_tau * re_tau))
}

/// Iteration budget of [`buckingham_reiner_friction`].
pub const BR_MAX_ITERATIONS: usize = 200;
/// Relative tolerance of [`buckingham_reiner_friction`].
pub const BR_TOLERANCE: f64 = 1e-12;

/// Right-hand side of `f = (16/Re)[1 + He/(6 Re) - He⁴/(3 f³ Re⁷)]`.
pub fn buckingham_reiner_rhs(f: f64, re_mr: f64, he: f64) -> f64 {
    // He⁴/(3 f³ Re⁷) · 16/Re = f φ⁴/3 with φ = 2He/(f Re²), which avoids overflow
    let phi = 2.0 * he / (f * re_mr * re_mr);
    16.0 / re_mr * (1.0 + he / (6.0 * re_mr)) - f * phi.powi(4) / 3.0
}

/// Solves the Buckingham-Reiner law for the Fanning friction factor.
///
/// Writing `φ = 2He/(f Re²)`, the residual is `g(f) = f(1 - 4φ/3 + φ⁴/3) - 16/Re`,
/// increasing for `φ < 1`. The root is bracketed by
/// `[max(16/Re, 2He/Re²), (16/Re)(1 + He/(6Re))]` and found by Newton steps
/// that fall back to bisection when they leave the bracket.
pub fn buckingham_reiner_friction(re_mr: f64, he: f64) -> Result<f64> {
    if !(re_mr > 0.0 && re_mr.is_finite() && he >= 0.0 && he.is_finite()) {
        return Err(Error::OutOfDomain(format!(
            "need Re_MR > 0 and He >= 0, got Re_MR = {re_mr}, He = {he}"
        )));
    }
    let laminar = 16.0 / re_mr;
    if he == 0.0 {
        return Ok(laminar);
    }
    let residual = |f: f64| f - buckingham_reiner_rhs(f, re_mr, he);
    let slope = |f: f64| 1.0 - (2.0 * he / (f * re_mr * re_mr)).powi(4);

    let mut lo = laminar.max(2.0 * he / (re_mr * re_mr));
    let mut hi = laminar * (1.0 + he / (6.0 * re_mr));
    let mut f = 0.5 * (lo + hi);
    for _ in 0..BR_MAX_ITERATIONS {
        let g = residual(f);
        if g.abs() <= 0.1 * BR_TOLERANCE * f {
            return Ok(f);
        }
        if g < 0.0 {
            lo = f;
        } else {
            hi = f;
        }
        let newton = f - g / slope(f);
        f = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    if residual(f).abs() <= BR_TOLERANCE * f {
        Ok(f)
    } else {
        Err(Error::NoConvergence {
            iterations: BR_MAX_ITERATIONS,
            lo,
            hi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// `count` points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, count: usize, spacing: Spacing) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = |i: usize| i as f64 / (count - 1) as f64;
    (0..count)
        .map(|i| match spacing {
            _ if i == 0 => lo,
            _ if i == count - 1 => hi,
            Spacing::Linear => lo + (hi - lo) * step(i),
            Spacing::Log => (lo.ln() + (hi.ln() - lo.ln()) * step(i)).exp(),
        })
        .collect()
}

fn check_range(name: &str, (lo, hi): (f64, f64), count: usize) -> Result<()> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Config(format!("{name} range must be positive and ordered")));
    }
    if count < 2 {
        return Err(Error::Config(format!("{name} needs at least 2 points")));
    }
    Ok(())
}

/// Grid for the laminar generator.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaminarGridSpec {
    pub re_tau_count: usize,
    pub re_tau_range: (f64, f64),
    /// Points per profile, log-spaced in `[y_plus_min_fraction·Re_τ, Re_τ]`.
    pub y_plus_count: usize,
    pub y_plus_min_fraction: f64,
    pub spacing: Spacing,
}

impl Default for LaminarGridSpec {
    fn default() -> Self {
        Self {
            re_tau_count: 100,
            re_tau_range: (10.0, 100.0),
            y_plus_count: 50,
            y_plus_min_fraction: 0.01,
            spacing: Spacing::Log,
        }
    }
}

/// Laminar profiles as columns `(u+, y+, Re_tau)`, one retained argument.
pub fn generate_laminar_dataset(spec: &LaminarGridSpec) -> Result<DimensionlessDataset> {
    check_range("Re_tau", spec.re_tau_range, spec.re_tau_count)?;
    check_range("y+", (spec.y_plus_min_fraction, 1.0), spec.y_plus_count)?;
    let mut rows = Vec::with_capacity(spec.re_tau_count * spec.y_plus_count);
    for re in grid(spec.re_tau_range.0, spec.re_tau_range.1, spec.re_tau_count, spec.spacing) {
        for y in grid(spec.y_plus_min_fraction * re, re, spec.y_plus_count, Spacing::Log) {
            rows.push(vec![laminar_uplus(re, y)?, y, re]);
        }
    }
    DimensionlessDataset::new(
        vec!["u+".into(), "y+".into(), "Re_tau".into()],
        rows,
        1,
    )
}

/// Grid for the Herschel-Bulkley generator.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, serde::Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct HbGridSpec {
    pub n_values: Vec<f64>,
    pub he_count: usize,
    pub he_range: (f64, f64),
    pub re_tau_count: usize,
    pub re_tau_range: (f64, f64),
    /// Radius ratios, uniform in `r_hat_range`.
    pub r_hat_count: usize,
    pub r_hat_range: (f64, f64),
    pub spacing: Spacing,
}

impl Default for HbGridSpec {
    fn default() -> Self {
        Self {
            n_values: vec![0.3, 0.5, 1.0],
            he_count: 100,
            he_range: (10.0, 100.0),
            re_tau_count: 100,
            re_tau_range: (10.0, 100.0),
            r_hat_count: 32,
            r_hat_range: (0.02, 0.98),
            spacing: Spacing::Log,
        }
    }
}

/// One generated Herschel-Bulkley dataset.
#[derive(Debug, Clone)]
pub struct HbDataset {
    pub n: f64,
    pub dataset: DimensionlessDataset,
    /// `(He, Re_τ)` grid points dropped because `φ >= 1`.
    pub skipped: usize,
}

/// Velocity profiles as columns `(u+, r_hat, He, Re_tau)`, two retained
/// arguments, one dataset per behavior index. Rows follow the grid order
/// `He`, then `Re_τ`, then `r̂`.
pub fn generate_hb_dataset(spec: &HbGridSpec) -> Result<Vec<HbDataset>> {
    check_range("He", spec.he_range, spec.he_count)?;
    check_range("Re_tau", spec.re_tau_range, spec.re_tau_count)?;
    let (r_lo, r_hi) = spec.r_hat_range;
    if !(r_lo > 0.0 && r_hi < 1.0 && r_lo <= r_hi) || spec.r_hat_count < 2 {
        return Err(Error::Config(
            "radius ratios must lie in (0, 1) with at least 2 points".into(),
        ));
    }
    if spec.n_values.is_empty() {
        return Err(Error::Config("no behavior indices given".into()));
    }
    let he_grid = grid(spec.he_range.0, spec.he_range.1, spec.he_count, spec.spacing);
    let re_grid = grid(spec.re_tau_range.0, spec.re_tau_range.1, spec.re_tau_count, spec.spacing);
    let r_grid = grid(r_lo, r_hi, spec.r_hat_count, Spacing::Linear);

    spec.n_values
        .iter()
        .map(|&n| {
            if !(n > 0.0 && n < 2.0) {
                return Err(Error::Config(format!("behavior index must lie in (0, 2), got {n}")));
            }
            let mut rows = Vec::new();
            let mut skipped = 0;
            for &he in &he_grid {
                for &re in &re_grid {
                    let phi = hb_phi(n, he, re);
                    if phi >= 1.0 {
                        skipped += 1;
                        continue;
                    }
                    for &r in &r_grid {
                        rows.push(vec![hb_uplus(n, phi, re, r)?, r, he, re]);
                    }
                }
            }
            if rows.is_empty() {
                return Err(Error::EmptyDataset { rejected: skipped });
            }
            let dataset = DimensionlessDataset::new(
                vec!["u+".into(), "r_hat".into(), "He".into(), "Re_tau".into()],
                rows,
                2,
            )?;
            Ok(HbDataset { n, dataset, skipped })
        })
        .collect()
}

/// Reads rough-pipe friction data with columns `f,r_over_D,Re` (any order;
/// extra columns are ignored). The result has columns `(f, r_over_D, Re)`
/// with one retained argument.
pub fn load_rough_pipe_csv(path: &Path) -> Result<DimensionlessDataset> {
    read_rough_pipe(std::fs::File::open(path)?)
}

pub fn read_rough_pipe<R: std::io::Read>(reader: R) -> Result<DimensionlessDataset> {
    let (columns, rows) = crate::dataset::read_table(reader)?;
    let names = ["f", "r_over_D", "Re"];
    let idx = names
        .iter()
        .map(|want| {
            columns.iter().position(|c| c == want).ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column `{want}`"),
            })
        })
        .collect::<Result<Vec<usize>>>()?;
    let rows = rows
        .into_iter()
        .map(|r| idx.iter().map(|&i| r[i]).collect())
        .collect();
    DimensionlessDataset::new(names.iter().map(|s| s.to_string()).collect(), rows, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laminar_examples() {
        assert_eq!(laminar_uplus(50.0, 10.0).unwrap(), 9.0);
        assert_eq!(laminar_uplus(30.0, 30.0).unwrap(), 15.0);
        assert!(laminar_uplus(10.0, 0.0).is_err());
        assert!(laminar_uplus(10.0, 11.0).is_err());
        for omega in [0.01, 0.3, 0.77, 1.0] {
            let a = laminar_uplus(10.0, 10.0 * omega).unwrap() / 10.0;
            let b = laminar_uplus(100.0, 100.0 * omega).unwrap() / 100.0;
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_examples() {
        for n in [0.3, 0.5, 1.0, 1.5] {
            assert_eq!(hb_phi(n, 49.0, 7.0), 1.0);
        }
        assert!((hb_phi(1.0, 25.0, 10.0) - 0.25).abs() < 1e-15);
        assert!((hb_phi(0.5, 1.0, 10.0) - 0.01f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((hb_phi(0.5, 1.0, 10.0) - 0.2154).abs() < 1e-4);
    }

    #[test]
    fn plug_region_is_flat_and_continuous() {
        let (n, phi, re) = (0.5, 0.4, 30.0);
        let plug = hb_uplus(n, phi, re, 0.0).unwrap();
        for r in [0.02, 0.1, 0.25, 0.4] {
            assert!((hb_uplus(n, phi, re, r).unwrap() - plug).abs() <= 1e-14 * plug);
        }
        let just_outside = hb_uplus(n, phi, re, phi + 1e-12).unwrap();
        assert!((just_outside - plug).abs() < 1e-9 * plug);
        assert!(hb_uplus(n, phi, re, 1.0).is_err());
        assert!(hb_uplus(n, 1.0, re, 0.5).is_err());
    }

    #[test]
    fn newtonian_profile_is_parabolic() {
        for r in [0.0, 0.3, 0.9] {
            let u = hb_uplus(1.0, 0.0, 40.0, r).unwrap();
            assert!((u - 10.0 * (1.0 - r * r)).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_depends_on_he_through_ratio_only() {
        // He/Re_τ² = 0.04 in both cases
        for n in [0.3, 0.5, 1.0] {
            let a = hb_uplus(n, hb_phi(n, 4.0, 10.0), 10.0, 0.6).unwrap() / 10.0;
            let b = hb_uplus(n, hb_phi(n, 400.0, 100.0), 100.0, 0.6).unwrap() / 100.0;
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn j_and_friction_examples() {
        assert_eq!(hb_j(0.0, 1.0).unwrap(), 0.25);
        assert!((hb_friction(1.0, 0.0, 20.0).unwrap() * 400.0 - 128.0).abs() < 1e-12);
        assert!(hb_j(1.0, 0.5).is_err());
        // fixed He/Re_τ²: f Re_τ² is constant
        let a = hb_friction(0.5, 20.0, 10.0).unwrap() * 100.0;
        let b = hb_friction(0.5, 2000.0, 100.0).unwrap() * 1e4;
        assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn buckingham_reiner_examples() {
        assert_eq!(buckingham_reiner_friction(100.0, 0.0).unwrap(), 0.16);
        let f = buckingham_reiner_friction(100.0, 1000.0).unwrap();
        assert!(f >= 0.16 && f <= 0.16 * (1.0 + 1000.0 / 600.0));
        assert!((f - buckingham_reiner_rhs(f, 100.0, 1000.0)).abs() < 1e-12 * f);
        assert!(buckingham_reiner_friction(-1.0, 1.0).is_err());
    }

    #[test]
    fn buckingham_reiner_residual_over_wide_range() {
        for re in [1.0, 10.0, 300.0, 2000.0, 1e5] {
            for he in [1e-3, 1.0, 1e2, 1e4, 1e6, 1e8] {
                let f = buckingham_reiner_friction(re, he).unwrap();
                let rhs = buckingham_reiner_rhs(f, re, he);
                assert!((f - rhs).abs() < 1e-12 * f, "Re {re} He {he}: {f} vs {rhs}");
            }
        }
    }

    #[test]
    fn laminar_generator_shape() {
        let ds = generate_laminar_dataset(&LaminarGridSpec::default()).unwrap();
        assert_eq!(ds.len(), 5000);
        assert_eq!(ds.retained(), 1);
        assert_eq!(ds.rejected(), 0);
    }

    #[test]
    fn hb_generator_skips_stopped_flow() {
        let spec = HbGridSpec {
            n_values: vec![0.5],
            he_count: 5,
            re_tau_count: 5,
            r_hat_count: 4,
            ..HbGridSpec::default()
        };
        let out = generate_hb_dataset(&spec).unwrap();
        // He = 100, Re_τ = 10 gives φ = 1
        assert_eq!(out[0].skipped, 1);
        assert_eq!(out[0].dataset.len(), (25 - 1) * 4);

        let stopped = HbGridSpec {
            he_range: (1e4, 1e5),
            ..spec
        };
        assert!(matches!(
            generate_hb_dataset(&stopped),
            Err(Error::EmptyDataset { rejected: 25 })
        ));
    }

    #[test]
    fn centerline_rows_are_valid() {
        let spec = HbGridSpec {
            n_values: vec![0.5],
            he_count: 2,
            re_tau_count: 2,
            r_hat_range: (1e-6, 0.98),
            ..HbGridSpec::default()
        };
        let ds = &generate_hb_dataset(&spec).unwrap()[0].dataset;
        assert!((0..ds.len()).all(|r| ds.row(r).iter().all(|v| *v > 0.0)));
    }

    #[test]
    fn rough_pipe_loader() {
        let text = "# synthetic\nRe,f,r_over_D\n1000,0.01,0.033\n2000,0,0.033\n3000,0.008,0.001\n";
        let ds = read_rough_pipe(text.as_bytes()).unwrap();
        assert_eq!(ds.columns(), ["f", "r_over_D", "Re"]);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.rejected(), 1);
        assert_eq!(ds.row(1), [0.008, 0.001, 3000.0]);
        assert!(matches!(
            read_rough_pipe("f,Re\n1,2\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
    }
}
