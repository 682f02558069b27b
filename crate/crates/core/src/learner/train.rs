//! Adam training of an [`ExponentModel`] on a dimensionless dataset.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::ExponentModel;
use crate::dataset::DimensionlessDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Rows per minibatch; the whole dataset when larger than it.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    /// Initial `ξ_k^{(j)}`, zero when absent.
    pub xi_matrix_init: Option<Vec<Vec<f64>>>,
    /// Initial `ξ_k`, zero when absent.
    pub xi_target_init: Option<Vec<f64>>,
    /// Feed `ln Π'` to the network instead of `Π'`.
    pub log_inputs: bool,
    /// Standardize network inputs with statistics frozen at initialization.
    pub standardize_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            hidden: vec![64, 64],
            xi_matrix_init: None,
            xi_target_init: None,
            log_inputs: false,
            standardize_inputs: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layers must have at least one unit".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub columns: Vec<String>,
    pub retained: usize,
    pub xi_matrix: Vec<Vec<f64>>,
    pub xi_target: Vec<f64>,
    /// Full-dataset loss before the first update.
    pub initial_loss: f64,
    /// Full-dataset loss after the last update.
    pub final_loss: f64,
    /// Row-weighted mean minibatch loss of each epoch.
    pub loss_history: Vec<f64>,
    pub seed: u64,
    pub config: TrainConfig,
}

impl FitResult {
    pub fn xi_matrix(&self) -> Matrix {
        if self.xi_matrix.is_empty() {
            Matrix::zeros(0, self.xi_target.len())
        } else {
            Matrix::from_rows(&self.xi_matrix)
        }
    }
}

/// A trained model together with its summary.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: ExponentModel,
    pub result: FitResult,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, cfg: &TrainConfig, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Builds the initial model: seeded weights, configured initial exponents,
/// and, if enabled, input statistics frozen on the initial network inputs.
pub fn initial_model(data: &DimensionlessDataset, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<ExponentModel> {
    let (n, s) = (data.retained(), data.scaling());
    let mut model = ExponentModel::new(n, s, &cfg.hidden, cfg.log_inputs, rng);
    let xi_matrix = match &cfg.xi_matrix_init {
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != s) {
                return Err(Error::Config(format!("xi_matrix_init must be {n} x {s}")));
            }
            if n == 0 {
                Matrix::zeros(0, s)
            } else {
                Matrix::from_rows(rows)
            }
        }
        None => Matrix::zeros(n, s),
    };
    let xi_target = match &cfg.xi_target_init {
        Some(v) if v.len() != s => {
            return Err(Error::Config(format!("xi_target_init must have {s} entries")))
        }
        Some(v) => v.clone(),
        None => vec![0.0; s],
    };
    model.set_exponents(&xi_matrix, &xi_target);
    if cfg.standardize_inputs {
        model.fit_stats(data)?;
    }
    Ok(model)
}

/// Runs Adam over shuffled minibatches. Single-threaded and deterministic
/// for a fixed seed.
pub fn train(data: &DimensionlessDataset, cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = initial_model(data, cfg, &mut rng)?;

    let all: Vec<usize> = (0..data.len()).collect();
    let initial_loss = model.loss(data, &all)?;
    let mut order = all.clone();
    let mut grad = vec![0.0; model.params().len()];
    let mut adam = Adam::new(grad.len());
    let batch = cfg.batch_size.min(data.len());
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for rows in order.chunks(batch) {
            let loss = match model.loss_and_gradient(data, rows, &mut grad) {
                Ok(l) if l.is_finite() => l,
                Ok(_) | Err(Error::NonFiniteActivation { .. }) | Err(Error::NonFiniteGradient) => {
                    return Err(Error::NonFiniteLoss { epoch })
                }
                Err(e) => return Err(e),
            };
            total += loss * rows.len() as f64;
            adam.step(cfg, model.params_mut(), &grad);
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        history.push(mean);
    }

    let final_loss = match model.loss(data, &all) {
        Ok(l) if l.is_finite() => l,
        _ => return Err(Error::NonFiniteLoss { epoch: cfg.epochs }),
    };
    let result = FitResult {
        columns: data.columns().to_vec(),
        retained: data.retained(),
        xi_matrix: model.xi_matrix().to_rows(),
        xi_target: model.xi_target(),
        initial_loss,
        final_loss,
        loss_history: history,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    Ok(Trained { model, result })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{generate_laminar_dataset, LaminarGridSpec};

    fn small() -> DimensionlessDataset {
        generate_laminar_dataset(&LaminarGridSpec {
            re_tau_count: 8,
            y_plus_count: 10,
            ..LaminarGridSpec::default()
        })
        .unwrap()
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 20,
            batch_size: 16,
            hidden: vec![8],
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn history_has_one_entry_per_epoch_and_loss_drops() {
        let t = train(&small(), &quick()).unwrap();
        assert_eq!(t.result.loss_history.len(), 20);
        assert!(t.result.final_loss < t.result.initial_loss);
    }

    #[test]
    fn same_seed_same_bits() {
        let a = train(&small(), &quick()).unwrap().result;
        let b = train(&small(), &quick()).unwrap().result;
        assert_eq!(a, b);
        let c = train(&small(), &TrainConfig { seed: 12, ..quick() }).unwrap().result;
        assert_ne!(a.xi_target, c.xi_target);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let d = small();
        for cfg in [
            TrainConfig { epochs: 0, ..quick() },
            TrainConfig { learning_rate: 0.0, ..quick() },
            TrainConfig { batch_size: 0, ..quick() },
            TrainConfig { xi_target_init: Some(vec![0.0, 1.0]), ..quick() },
        ] {
            assert!(matches!(train(&d, &cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let cfg = TrainConfig {
            learning_rate: 1e300,
            epochs: 50,
            ..quick()
        };
        match train(&small(), &cfg) {
            Err(Error::NonFiniteLoss { epoch }) => assert!(epoch < 50),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
