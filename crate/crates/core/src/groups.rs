//! Buckingham similarity groups and renormalization groups of an MDDP
//! construction.
//!
//! A Buckingham group rescales each independent parameter `a_k` by an
//! arbitrary positive constant `A_k` and the remaining parameters by powers
//! of those constants so that every `Π` is unchanged. For a construction with
//! `β` matrix `B` and `α` matrix `α`, the exponent table `Δ` (row `i` holds the
//! powers applied to `b_i`) solves `B Δ = -α`, and is equal to `Γᵀ Λ⁻ᵀ`
//! whatever construction is chosen.
//!
//! A renormalization group comes from an incomplete-similarity relation
//! `Π = Π_{n+1}^{-ξ_{n+1}}…Π_l^{-ξ_l} Φ(Π'_1, …, Π'_n)` with
//! `Π'_j = Π_j Π_{n+1}^{ξ_{n+1}^{(j)}}…Π_l^{ξ_l^{(j)}}`. It keeps the
//! independent parameters fixed, scales `b_{n+1}..b_l` by free constants
//! `B_{n+1}..B_l`, and scales `b_1..b_n` and `a` so that every `Π'_j` and
//! `Π · ∏ Π_k^{ξ_k}` stay invariant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::dimensions::{MddpConstruction, ParameterSample};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::rational::snap_string;

/// Default seed for [`verify_invariance`].
pub const DEFAULT_INVARIANCE_SEED: u64 = 20_240_917;
/// Range (both ends) of the log-uniform draws used by [`verify_invariance`].
pub const INVARIANCE_SAMPLE_RANGE: (f64, f64) = (1e-2, 1e2);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Buckingham,
    Renormalization,
}

impl GroupKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GroupKind::Buckingham => "buckingham",
            GroupKind::Renormalization => "renormalization",
        }
    }
}

/// Power-law action of a group: for each parameter, the exponent of every
/// free constant in its scale factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    kind: GroupKind,
    constants: Vec<String>,
    entries: Vec<(String, Vec<f64>)>,
}

impl ScalingTable {
    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn entries(&self) -> &[(String, Vec<f64>)] {
        &self.entries
    }

    /// Exponents applied to `param`, one per constant.
    pub fn exponents(&self, param: &str) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|(n, _)| n == param)
            .map(|(_, e)| e.as_slice())
    }

    pub fn set_exponent(&mut self, param: &str, constant: usize, value: f64) -> Result<()> {
        let entry = self
            .entries
            .iter_mut()
            .find(|(n, _)| n == param)
            .ok_or_else(|| Error::MissingParameter(param.to_string()))?;
        let slot = entry
            .1
            .get_mut(constant)
            .ok_or_else(|| Error::Config(format!("no constant #{constant}")))?;
        *slot = value;
        Ok(())
    }

    /// JSON form: `{"type", "constants", "exponents", "snapped"}`.
    pub fn to_json(&self) -> Value {
        let mut exponents = Map::new();
        let mut snapped = Map::new();
        for (name, exps) in &self.entries {
            let mut e = Map::new();
            let mut s = Map::new();
            for (c, x) in self.constants.iter().zip(exps) {
                // normalise -0.0 so output is stable
                let x = if *x == 0.0 { 0.0 } else { *x };
                e.insert(c.clone(), json!(x));
                s.insert(c.clone(), snap_string(x).map_or(Value::Null, Value::String));
            }
            exponents.insert(name.clone(), Value::Object(e));
            snapped.insert(name.clone(), Value::Object(s));
        }
        json!({
            "type": self.kind.as_str(),
            "constants": self.constants,
            "exponents": exponents,
            "snapped": snapped,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BuckinghamGroup {
    /// `l × m`: entry `(i, k)` is the exponent of `A_k` applied to `b_i`.
    pub delta_matrix: Matrix,
    /// Exponent of each `A_k` applied to the target `a`.
    pub delta_target: Vec<f64>,
    table: ScalingTable,
}

impl BuckinghamGroup {
    pub fn table(&self) -> &ScalingTable {
        &self.table
    }
}

/// Solves `B Δ = -α` for the construction's Buckingham group.
pub fn buckingham_group(construction: &MddpConstruction) -> Result<BuckinghamGroup> {
    let target = construction.target();
    if target.beta_a == 0.0 {
        return Err(Error::ZeroTargetExponent);
    }
    let lu = Lu::factor(&construction.beta_matrix()).map_err(|_| Error::SingularBeta)?;
    let delta_matrix = lu.solve_matrix(&construction.alpha_matrix().scale(-1.0));
    let m = construction.system().m();
    let delta_target = (0..m)
        .map(|k| {
            let coupled: f64 = target
                .beta
                .iter()
                .enumerate()
                .map(|(i, b)| delta_matrix[(i, k)] * b)
                .sum();
            -(target.alpha[k] + coupled) / target.beta_a
        })
        .collect::<Vec<_>>();
    let table = buckingham_table(construction, &delta_matrix, &delta_target);
    Ok(BuckinghamGroup {
        delta_matrix,
        delta_target,
        table,
    })
}

fn buckingham_table(c: &MddpConstruction, delta: &Matrix, delta_target: &[f64]) -> ScalingTable {
    let sys = c.system();
    let m = sys.m();
    let constants = sys.independent().iter().map(|p| format!("A_{}", p.name)).collect();
    let mut entries = Vec::with_capacity(m + sys.l() + 1);
    for (k, p) in sys.independent().iter().enumerate() {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        entries.push((p.name.clone(), e));
    }
    for (i, p) in sys.dependent().iter().enumerate() {
        entries.push((p.name.clone(), delta.row(i).to_vec()));
    }
    entries.push((sys.target().name.clone(), delta_target.to_vec()));
    ScalingTable {
        kind: GroupKind::Buckingham,
        constants,
        entries,
    }
}

/// `Γᵀ Λ⁻ᵀ`, the construction-independent Buckingham exponent table.
pub fn buckingham_group_closed_form(system: &crate::dimensions::DimensionSystem) -> Matrix {
    // (Λ⁻¹ Γ)ᵀ
    system.lambda_lu().solve_matrix(system.gamma()).transpose()
}

/// Exponents of an incomplete-similarity relation. The first `retained`
/// arguments stay inside `Φ`; the remaining `l - retained` are scaling
/// variables.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteSimilarity {
    retained: usize,
    /// `n × (l - n)`: entry `(j, c)` is `ξ_{n+1+c}^{(j+1)}`.
    xi_matrix: Matrix,
    /// `ξ_{n+1}..ξ_l`.
    xi_target: Vec<f64>,
}

impl IncompleteSimilarity {
    pub fn new(l: usize, retained: usize, xi_matrix: Matrix, xi_target: Vec<f64>) -> Result<Self> {
        if retained >= l {
            return Err(Error::Config(format!(
                "number of retained arguments must be below {l}, got {retained}"
            )));
        }
        let scaling = l - retained;
        if xi_target.len() != scaling {
            return Err(Error::Config(format!(
                "expected {scaling} prefactor exponents, got {}",
                xi_target.len()
            )));
        }
        if xi_matrix.rows() != retained || (retained > 0 && xi_matrix.cols() != scaling) {
            return Err(Error::Config(format!(
                "argument exponent matrix must be {retained} x {scaling}, got {} x {}",
                xi_matrix.rows(),
                xi_matrix.cols()
            )));
        }
        let xi_matrix = if retained == 0 {
            Matrix::zeros(0, scaling)
        } else {
            xi_matrix
        };
        Ok(Self {
            retained,
            xi_matrix,
            xi_target,
        })
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn scaling(&self) -> usize {
        self.xi_target.len()
    }

    pub fn xi_matrix(&self) -> &Matrix {
        &self.xi_matrix
    }

    pub fn xi_target(&self) -> &[f64] {
        &self.xi_target
    }

    /// `ln Π'_1..ln Π'_n` followed by `ln(Π ∏ Π_k^{ξ_k})` from `ln(Π, Π_1..Π_l)`.
    pub fn log_invariants(&self, log_pis: &[f64]) -> Vec<f64> {
        let n = self.retained;
        let scaling_logs = &log_pis[1 + n..];
        let mut out = Vec::with_capacity(n + 1);
        for j in 0..n {
            let shift: f64 = self
                .xi_matrix
                .row(j)
                .iter()
                .zip(scaling_logs)
                .map(|(x, l)| x * l)
                .sum();
            out.push(log_pis[1 + j] + shift);
        }
        let shift: f64 = self.xi_target.iter().zip(scaling_logs).map(|(x, l)| x * l).sum();
        out.push(log_pis[0] + shift);
        out
    }
}

#[derive(Debug, Clone)]
pub struct RenormalizationGroup {
    /// `n × (l - n)`: entry `(i, c)` is the exponent of `B_{n+1+c}` applied to `b_{i+1}`.
    pub mu_matrix: Matrix,
    /// Exponent of each `B` applied to the target `a`.
    pub mu_target: Vec<f64>,
    table: ScalingTable,
}

impl RenormalizationGroup {
    pub fn table(&self) -> &ScalingTable {
        &self.table
    }
}

/// Solves `A' μ = B'` for the renormalization group induced by `spec`.
pub fn renormalization_group(
    construction: &MddpConstruction,
    spec: &IncompleteSimilarity,
) -> Result<RenormalizationGroup> {
    let l = construction.system().l();
    let n = spec.retained();
    if n + spec.scaling() != l {
        return Err(Error::Config(format!(
            "incomplete-similarity spec covers {} arguments, construction has {l}",
            n + spec.scaling()
        )));
    }
    let target = construction.target();
    if target.beta_a == 0.0 {
        return Err(Error::ZeroTargetExponent);
    }
    let beta = construction.beta_matrix();
    let s = l - n;

    // Row j of β shifted by the scaling rows weighted with the argument exponents.
    let shifted = |j: usize, col: usize| -> f64 {
        beta[(j, col)]
            + (0..s)
                .map(|c| spec.xi_matrix()[(j, c)] * beta[(n + c, col)])
                .sum::<f64>()
    };
    let mut a_prime = Matrix::zeros(n, n);
    let mut b_prime = Matrix::zeros(n, s);
    for j in 0..n {
        for i in 0..n {
            a_prime[(j, i)] = shifted(j, i);
        }
        for c in 0..s {
            b_prime[(j, c)] = -shifted(j, n + c);
        }
    }
    let mu_matrix = if n == 0 {
        Matrix::zeros(0, s)
    } else {
        let lu = Lu::factor(&a_prime).map_err(|_| Error::SingularRenormMatrix {
            rank: a_prime.rank(),
            size: n,
            matrix: a_prime.to_rows(),
        })?;
        lu.solve_matrix(&b_prime)
    };

    // Target row shifted the same way, with the prefactor exponents.
    let target_shifted = |col: usize| -> f64 {
        target.beta[col]
            + (0..s)
                .map(|c| spec.xi_target()[c] * beta[(n + c, col)])
                .sum::<f64>()
    };
    let mu_target = (0..s)
        .map(|c| {
            let inner: f64 = (0..n).map(|i| target_shifted(i) * mu_matrix[(i, c)]).sum();
            -(inner + target_shifted(n + c)) / target.beta_a
        })
        .collect::<Vec<_>>();

    let table = renormalization_table(construction, n, &mu_matrix, &mu_target);
    Ok(RenormalizationGroup {
        mu_matrix,
        mu_target,
        table,
    })
}

fn renormalization_table(
    c: &MddpConstruction,
    n: usize,
    mu: &Matrix,
    mu_target: &[f64],
) -> ScalingTable {
    let sys = c.system();
    let s = sys.l() - n;
    let constants = sys.dependent()[n..]
        .iter()
        .map(|p| format!("B_{}", p.name))
        .collect();
    let mut entries = Vec::new();
    for p in sys.independent() {
        entries.push((p.name.clone(), vec![0.0; s]));
    }
    for (i, p) in sys.dependent().iter().enumerate() {
        let e = if i < n {
            mu.row(i).to_vec()
        } else {
            let mut e = vec![0.0; s];
            e[i - n] = 1.0;
            e
        };
        entries.push((p.name.clone(), e));
    }
    entries.push((sys.target().name.clone(), mu_target.to_vec()));
    ScalingTable {
        kind: GroupKind::Renormalization,
        constants,
        entries,
    }
}

/// Multiplies every parameter covered by the table by `∏ C_c^{e_c}`.
pub fn apply_group(
    table: &ScalingTable,
    constants: &[f64],
    sample: &ParameterSample,
) -> Result<ParameterSample> {
    if constants.len() != table.constants.len() {
        return Err(Error::Config(format!(
            "group has {} constants, got {}",
            table.constants.len(),
            constants.len()
        )));
    }
    for (index, &value) in constants.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveConstant { index, value });
        }
    }
    let log_c: Vec<f64> = constants.iter().map(|c| c.ln()).collect();
    let mut out = sample.clone();
    for (name, exps) in &table.entries {
        let v = sample.get(name)?;
        let log_factor: f64 = exps.iter().zip(&log_c).map(|(e, l)| e * l).sum();
        out.insert_unchecked(name, v * log_factor.exp());
    }
    Ok(out)
}

/// Largest relative change of the group's invariants over random samples
/// and random constants, both log-uniform in [`INVARIANCE_SAMPLE_RANGE`].
///
/// Without `spec` the invariants are `Π, Π_1..Π_l`; with it they are
/// `Π'_1..Π'_n` and `Π ∏ Π_k^{ξ_k}`. Each trial uses its own stream derived
/// from `seed`, so the result does not depend on thread scheduling.
pub fn verify_invariance(
    construction: &MddpConstruction,
    table: &ScalingTable,
    spec: Option<&IncompleteSimilarity>,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::Config("invariance check needs at least one trial".into()));
    }
    let names: Vec<String> = construction
        .system()
        .parameter_names()
        .map(str::to_string)
        .collect();
    let invariants = |sample: &ParameterSample| -> Result<Vec<f64>> {
        let logs = construction.log_pis(&construction.log_parameters(sample)?);
        Ok(match spec {
            Some(s) => s.log_invariants(&logs),
            None => logs,
        })
    };
    let deviations = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let sample = ParameterSample::new(
                names.iter().map(|n| (n.clone(), log_uniform(&mut rng))),
            )?;
            let constants: Vec<f64> = (0..table.constants.len())
                .map(|_| log_uniform(&mut rng))
                .collect();
            let moved = apply_group(table, &constants, &sample)?;
            let before = invariants(&sample)?;
            let after = invariants(&moved)?;
            Ok(before
                .iter()
                .zip(&after)
                .map(|(b, a)| (a - b).exp_m1().abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = INVARIANCE_SAMPLE_RANGE;
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}
