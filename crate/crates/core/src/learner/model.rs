//! Exponent model: learnable incomplete-similarity exponents in front of a
//! small dense network.
//!
//! For a row with logarithms `(ln Π, ln Π_1, …, ln Π_l)`, `n` retained
//! arguments and scaling variables `Π_{n+1}..Π_l`:
//!
//! ```text
//! z_j  = ln Π_j + Σ_k ξ_k^{(j)} ln Π_k          j = 1..n
//! x_j  = (exp(z_j) - mean_j) / std_j
//! ln Π ≈ -Σ_k ξ_k ln Π_k + net(x)
//! ```
//!
//! `mean` and `std` are 0 and 1 unless statistics were frozen with
//! [`ExponentModel::fit_stats`]. With `log_inputs` the network sees `z_j`
//! instead of `exp(z_j)`.
//! All parameters live in one flat vector: the `n × (l-n)` argument exponents
//! (row-major), the `l-n` prefactor exponents, then each layer's weights
//! (row-major, `out × in`) followed by its biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::DimensionlessDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
}

/// Per-argument standardization of network inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl InputStats {
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentModel {
    retained: usize,
    scaling: usize,
    /// Layer widths from input to output, `[n, hidden.., 1]`.
    widths: Vec<usize>,
    activation: Activation,
    log_inputs: bool,
    stats: InputStats,
    params: Vec<f64>,
}

/// Reusable per-row buffers.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    /// Network inputs followed by each layer's outputs.
    acts: Vec<Vec<f64>>,
    z: Vec<f64>,
    p: Vec<f64>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl ExponentModel {
    /// Zero exponents and weights drawn uniformly from `±1/√fan_in`; biases
    /// start at zero.
    pub fn new<R: Rng>(
        retained: usize,
        scaling: usize,
        hidden: &[usize],
        log_inputs: bool,
        rng: &mut R,
    ) -> Self {
        let mut widths = vec![retained];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let mut params = vec![0.0; retained * scaling + scaling];
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = 1.0 / (fan_in.max(1) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Self {
            retained,
            scaling,
            widths,
            activation: Activation::Tanh,
            log_inputs,
            stats: InputStats::identity(retained),
            params,
        }
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn scaling(&self) -> usize {
        self.scaling
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn log_inputs(&self) -> bool {
        self.log_inputs
    }

    pub fn stats(&self) -> &InputStats {
        &self.stats
    }

    pub fn set_stats(&mut self, stats: InputStats) {
        assert_eq!(stats.mean.len(), self.retained);
        self.stats = stats;
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn xi_matrix_slice(&self) -> &[f64] {
        &self.params[..self.retained * self.scaling]
    }

    fn xi_target_slice(&self) -> &[f64] {
        let start = self.retained * self.scaling;
        &self.params[start..start + self.scaling]
    }

    /// `ξ_k^{(j)}` as an `n × (l-n)` matrix.
    pub fn xi_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.retained, self.scaling);
        for j in 0..self.retained {
            for k in 0..self.scaling {
                m[(j, k)] = self.xi_matrix_slice()[j * self.scaling + k];
            }
        }
        m
    }

    /// `ξ_{n+1}..ξ_l`.
    pub fn xi_target(&self) -> Vec<f64> {
        self.xi_target_slice().to_vec()
    }

    pub fn set_exponents(&mut self, xi_matrix: &Matrix, xi_target: &[f64]) {
        assert_eq!((xi_matrix.rows(), xi_target.len()), (self.retained, self.scaling));
        for j in 0..self.retained {
            for k in 0..self.scaling {
                self.params[j * self.scaling + k] = xi_matrix[(j, k)];
            }
        }
        let start = self.retained * self.scaling;
        self.params[start..start + self.scaling].copy_from_slice(xi_target);
    }

    /// Freezes input standardization to the mean and population standard
    /// deviation of the current network inputs over `data`. Zero spread is
    /// replaced by one.
    pub fn fit_stats(&mut self, data: &DimensionlessDataset) -> Result<()> {
        let n = self.retained;
        self.stats = InputStats::identity(n);
        let mut scratch = self.scratch();
        let mut sum = vec![0.0; n];
        let mut sum_sq = vec![0.0; n];
        for r in 0..data.len() {
            self.arguments(data.log_row(r), r, &mut scratch)?;
            for j in 0..n {
                let x = scratch.acts[0][j];
                sum[j] += x;
                sum_sq[j] += x * x;
            }
        }
        let count = data.len() as f64;
        let mut stats = InputStats::identity(n);
        for j in 0..n {
            let mean = sum[j] / count;
            let var = (sum_sq[j] / count - mean * mean).max(0.0);
            stats.mean[j] = mean;
            stats.std[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        self.stats = stats;
        Ok(())
    }

    pub(crate) fn scratch(&self) -> Scratch {
        let widest = *self.widths.iter().max().unwrap();
        Scratch {
            acts: self.widths.iter().map(|&w| vec![0.0; w]).collect(),
            z: vec![0.0; self.retained],
            p: vec![0.0; self.retained],
            delta: Vec::with_capacity(widest),
            next_delta: Vec::with_capacity(widest),
        }
    }

    /// Fills `z`, `p` and the standardized network inputs.
    fn arguments(&self, logs: &[f64], row: usize, s: &mut Scratch) -> Result<()> {
        let n = self.retained;
        let scaling_logs = &logs[1 + n..];
        let xm = self.xi_matrix_slice();
        for j in 0..n {
            let shift: f64 = xm[j * self.scaling..(j + 1) * self.scaling]
                .iter()
                .zip(scaling_logs)
                .map(|(x, l)| x * l)
                .sum();
            let z = logs[1 + j] + shift;
            let p = if self.log_inputs { z } else { z.exp() };
            if !p.is_finite() {
                return Err(Error::NonFiniteActivation { row });
            }
            s.z[j] = z;
            s.p[j] = p;
            s.acts[0][j] = (p - self.stats.mean[j]) / self.stats.std[j];
        }
        Ok(())
    }

    /// `-Σ_k ξ_k ln Π_k`.
    fn log_prefactor(&self, logs: &[f64]) -> f64 {
        -self
            .xi_target_slice()
            .iter()
            .zip(&logs[1 + self.retained..])
            .map(|(x, l)| x * l)
            .sum::<f64>()
    }

    fn network(&self, s: &mut Scratch) -> f64 {
        let mut offset = self.retained * self.scaling + self.scaling;
        let layers = self.widths.len() - 1;
        for layer in 0..layers {
            let (fan_in, fan_out) = (self.widths[layer], self.widths[layer + 1]);
            let w = &self.params[offset..offset + fan_in * fan_out];
            let b = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let (before, after) = s.acts.split_at_mut(layer + 1);
            let input = &before[layer];
            let out = &mut after[0];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(input.iter()) {
                    acc += wi * xi;
                }
                out[o] = if layer + 1 < layers { acc.tanh() } else { acc };
            }
            offset += fan_in * fan_out + fan_out;
        }
        s.acts[layers][0]
    }

    pub(crate) fn predict(&self, logs: &[f64], row: usize, s: &mut Scratch) -> Result<f64> {
        self.arguments(logs, row, s)?;
        let y = self.log_prefactor(logs) + self.network(s);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFiniteActivation { row })
        }
    }

    /// Predicted `ln Π` for one row of logarithms.
    pub fn forward(&self, logs: &[f64]) -> Result<f64> {
        self.predict(logs, 0, &mut self.scratch())
    }

    /// Prediction with the network replaced by `net`, which receives the
    /// standardized inputs.
    pub fn forward_with<F: Fn(&[f64]) -> f64>(&self, logs: &[f64], net: F) -> Result<f64> {
        let mut s = self.scratch();
        self.arguments(logs, 0, &mut s)?;
        Ok(self.log_prefactor(logs) + net(&s.acts[0]))
    }

    /// Mean squared residual of `ln Π` over `rows`.
    pub fn loss(&self, data: &DimensionlessDataset, rows: &[usize]) -> Result<f64> {
        if rows.is_empty() {
            return Err(Error::Config("loss needs a non-empty batch".into()));
        }
        let mut s = self.scratch();
        let mut total = 0.0;
        for &r in rows {
            let logs = data.log_row(r);
            let res = self.predict(logs, r, &mut s)? - logs[0];
            total += res * res;
        }
        Ok(total / rows.len() as f64)
    }

    /// Loss over `rows` and its gradient, written into `grad`.
    pub fn loss_and_gradient(
        &self,
        data: &DimensionlessDataset,
        rows: &[usize],
        grad: &mut [f64],
    ) -> Result<f64> {
        if rows.is_empty() {
            return Err(Error::Config("loss needs a non-empty batch".into()));
        }
        assert_eq!(grad.len(), self.params.len());
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut s = self.scratch();
        let scale = 2.0 / rows.len() as f64;
        let mut total = 0.0;
        for &r in rows {
            let logs = data.log_row(r);
            let res = self.predict(logs, r, &mut s)? - logs[0];
            total += res * res;
            self.backward(logs, scale * res, &mut s, grad);
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        Ok(total / rows.len() as f64)
    }

    /// Adds `d(loss)/d(params)` for one row given `d(loss)/d(prediction)`.
    fn backward(&self, logs: &[f64], d_out: f64, s: &mut Scratch, grad: &mut [f64]) {
        let n = self.retained;
        let scaling_logs = &logs[1 + n..];
        let xt_start = n * self.scaling;
        for k in 0..self.scaling {
            grad[xt_start + k] -= d_out * scaling_logs[k];
        }

        // layer offsets
        let layers = self.widths.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = xt_start + self.scaling;
        for layer in 0..layers {
            offsets.push(offset);
            offset += self.widths[layer] * self.widths[layer + 1] + self.widths[layer + 1];
        }

        s.delta.clear();
        s.delta.push(d_out);
        for layer in (0..layers).rev() {
            let (fan_in, fan_out) = (self.widths[layer], self.widths[layer + 1]);
            let off = offsets[layer];
            let input = &s.acts[layer];
            for o in 0..fan_out {
                let d = s.delta[o];
                if d == 0.0 {
                    continue;
                }
                let gw = &mut grad[off + o * fan_in..off + (o + 1) * fan_in];
                for (g, x) in gw.iter_mut().zip(input) {
                    *g += d * x;
                }
                grad[off + fan_in * fan_out + o] += d;
            }
            s.next_delta.clear();
            s.next_delta.resize(fan_in, 0.0);
            let w = &self.params[off..off + fan_in * fan_out];
            for o in 0..fan_out {
                let d = s.delta[o];
                let row = &w[o * fan_in..(o + 1) * fan_in];
                for (nd, wi) in s.next_delta.iter_mut().zip(row) {
                    *nd += d * wi;
                }
            }
            if layer > 0 {
                // through tanh of the previous layer's output
                for (nd, a) in s.next_delta.iter_mut().zip(&s.acts[layer]) {
                    *nd *= 1.0 - a * a;
                }
            }
            std::mem::swap(&mut s.delta, &mut s.next_delta);
        }

        // s.delta now holds d(loss)/d(standardized input)
        for j in 0..n {
            let dp = s.delta[j] / self.stats.std[j];
            let dz = if self.log_inputs { dp } else { dp * s.p[j] };
            let row = &mut grad[j * self.scaling..(j + 1) * self.scaling];
            for (g, l) in row.iter_mut().zip(scaling_logs) {
                *g += dz * l;
            }
        }
    }
}
