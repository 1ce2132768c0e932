//! Single-hidden-layer perceptron with sigmoid units, trained by per-instance
//! SGD on binary cross-entropy.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, POSITIVE};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256StarStar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub weight_init_seed: u64,
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::params("input_dim must be positive"));
        }
        if self.hidden_units == 0 {
            return Err(Error::params("hidden_units must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::params(
                "learning_rate must be a finite non-negative number",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    pub config: MlpConfig,
    /// Row-major `hidden_units x (input_dim + 1)`; the last column is the bias.
    pub weights_ih: Vec<f64>,
    /// `hidden_units + 1` entries; the last is the bias.
    pub weights_ho: Vec<f64>,
    pub epochs_trained: usize,
    /// Affine map applied to raw features before the hidden layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_scaling: Option<InputScaling>,
}

/// Per-feature affine input map `(x - offset) * scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputScaling {
    /// Maps each feature's training range onto `[-1, 1]`; constant features
    /// map to 0.
    pub fn min_max(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = data.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for inst in data.instances() {
            for (j, &v) in inst.features.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let offset = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let scale = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| if h > l { 2.0 / (h - l) } else { 0.0 })
            .collect();
        Ok(Self { offset, scale })
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, &v), off), sc) in out.iter_mut().zip(x).zip(&self.offset).zip(&self.scale) {
            *o = (v - off) * sc;
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// Mean cross-entropy over the epoch, each term measured before its update.
    pub mean_loss: f64,
}

impl MlpNetwork {
    /// Uniform initialisation in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per layer.
    pub fn init(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Xoshiro256StarStar::seed_from_u64(config.weight_init_seed);
        let stride = config.input_dim + 1;
        let bound_ih = 1.0 / (config.input_dim as f64).sqrt();
        let bound_ho = 1.0 / (config.hidden_units as f64).sqrt();
        let weights_ih = (0..config.hidden_units * stride)
            .map(|_| rng.uniform(-bound_ih, bound_ih))
            .collect();
        let weights_ho = (0..=config.hidden_units)
            .map(|_| rng.uniform(-bound_ho, bound_ho))
            .collect();
        Ok(Self {
            config,
            weights_ih,
            weights_ho,
            epochs_trained: 0,
            input_scaling: None,
        })
    }

    /// A network with every weight set to zero.
    pub fn zeros(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            weights_ih: vec![0.0; config.hidden_units * (config.input_dim + 1)],
            weights_ho: vec![0.0; config.hidden_units + 1],
            config,
            epochs_trained: 0,
            input_scaling: None,
        })
    }

    pub fn with_input_scaling(mut self, scaling: Option<InputScaling>) -> Self {
        self.input_scaling = scaling;
        self
    }

    pub fn hidden_units(&self) -> usize {
        self.config.hidden_units
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn learning_rate(&self) -> f64 {
        self.config.learning_rate
    }

    fn check_dim(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                actual: features.len(),
            });
        }
        Ok(())
    }

    /// Applies the input scaling (if any) into `buf` and returns the
    /// network-facing input.
    fn network_input<'a>(&self, x: &'a [f64], buf: &'a mut Vec<f64>) -> &'a [f64] {
        match &self.input_scaling {
            None => x,
            Some(scaling) => {
                buf.resize(x.len(), 0.0);
                scaling.apply_into(x, buf);
                buf
            }
        }
    }

    fn hidden_activations(&self, x: &[f64], hidden: &mut [f64]) {
        let stride = self.config.input_dim + 1;
        for (h, row) in hidden.iter_mut().zip(self.weights_ih.chunks_exact(stride)) {
            let (w, bias) = row.split_at(self.config.input_dim);
            let z = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + bias[0];
            *h = sigmoid(z);
        }
    }

    fn output_logit(&self, hidden: &[f64]) -> f64 {
        let (w, bias) = self.weights_ho.split_at(self.config.hidden_units);
        w.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>() + bias[0]
    }

    /// Probability of the positive class.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        self.check_dim(features)?;
        let mut buf = Vec::new();
        let x = self.network_input(features, &mut buf);
        let mut hidden = vec![0.0; self.config.hidden_units];
        self.hidden_activations(x, &mut hidden);
        Ok(sigmoid(self.output_logit(&hidden)))
    }

    /// Class index at threshold 0.5; an output of exactly 0.5 is positive.
    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        Ok(usize::from(self.forward(features)? >= 0.5))
    }

    /// Cross-entropy of one instance.
    pub fn loss(&self, features: &[f64], label: usize) -> Result<f64> {
        self.check_dim(features)?;
        let mut buf = Vec::new();
        let x = self.network_input(features, &mut buf);
        let mut hidden = vec![0.0; self.config.hidden_units];
        self.hidden_activations(x, &mut hidden);
        let z = self.output_logit(&hidden);
        Ok(softplus(z) - if label == POSITIVE { z } else { 0.0 })
    }

    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.weights_ih.len() + self.weights_ho.len()
    }

    /// Parameters flattened as `weights_ih` followed by `weights_ho`.
    pub fn params(&self) -> Vec<f64> {
        self.weights_ih
            .iter()
            .chain(&self.weights_ho)
            .copied()
            .collect()
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let n_ih = self.weights_ih.len();
        if index < n_ih {
            self.weights_ih[index] = value;
        } else {
            self.weights_ho[index - n_ih] = value;
        }
    }

    /// Gradient of the single-instance loss, in [`params`](Self::params) order.
    pub fn gradient(&self, features: &[f64], label: usize) -> Result<Vec<f64>> {
        self.check_dim(features)?;
        let mut grad = vec![0.0; self.param_count()];
        let mut hidden = vec![0.0; self.config.hidden_units];
        let mut buf = Vec::new();
        let x = self.network_input(features, &mut buf);
        self.accumulate_gradient(x, label, &mut hidden, &mut grad, 1.0);
        Ok(grad)
    }

    /// Mean gradient over a batch of `(features, label)` pairs.
    pub fn batch_gradient(&self, batch: &[(&[f64], usize)]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.param_count()];
        let mut hidden = vec![0.0; self.config.hidden_units];
        let scale = 1.0 / batch.len().max(1) as f64;
        let mut buf = Vec::new();
        for (x, y) in batch {
            self.check_dim(x)?;
            let x = self.network_input(x, &mut buf);
            self.accumulate_gradient(x, *y, &mut hidden, &mut grad, scale);
        }
        Ok(grad)
    }

    /// Mean loss over a batch.
    pub fn batch_loss(&self, batch: &[(&[f64], usize)]) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in batch {
            total += self.loss(x, *y)?;
        }
        Ok(total / batch.len().max(1) as f64)
    }

    fn accumulate_gradient(
        &self,
        x: &[f64],
        y: usize,
        hidden: &mut [f64],
        grad: &mut [f64],
        scale: f64,
    ) {
        let d = self.config.input_dim;
        let stride = d + 1;
        let h_units = self.config.hidden_units;
        self.hidden_activations(x, hidden);
        let out = sigmoid(self.output_logit(hidden));
        // d(loss)/d(output logit) for sigmoid + cross-entropy.
        let delta = (out - y as f64) * scale;

        let (g_ih, g_ho) = grad.split_at_mut(h_units * stride);
        for j in 0..h_units {
            g_ho[j] += delta * hidden[j];
        }
        g_ho[h_units] += delta;
        for j in 0..h_units {
            let dh = delta * self.weights_ho[j] * hidden[j] * (1.0 - hidden[j]);
            let row = &mut g_ih[j * stride..(j + 1) * stride];
            for (g, xi) in row[..d].iter_mut().zip(x) {
                *g += dh * xi;
            }
            row[d] += dh;
        }
    }

    /// One pass of per-instance SGD in an order shuffled by `shuffle_seed`.
    pub fn train_epoch(&mut self, data: &Dataset, shuffle_seed: u64) -> Result<EpochStats> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.dim() != self.config.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.config.input_dim,
                actual: data.dim(),
            });
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        Xoshiro256StarStar::seed_from_u64(shuffle_seed).shuffle(&mut order);
        let mut hidden = vec![0.0; self.config.hidden_units];
        let mut scaled = vec![0.0; self.config.input_dim];
        let mut total = 0.0;
        for &i in &order {
            let inst = &data.instances()[i];
            let x = match &self.input_scaling {
                None => inst.features.as_slice(),
                Some(scaling) => {
                    scaling.apply_into(&inst.features, &mut scaled);
                    scaled.as_slice()
                }
            };
            total += sgd_step(
                &mut self.weights_ih,
                &mut self.weights_ho,
                &self.config,
                x,
                inst.label,
                &mut hidden,
            );
        }
        self.epochs_trained += 1;
        Ok(EpochStats {
            mean_loss: total / data.len() as f64,
        })
    }

    /// Misclassification rate at threshold 0.5.
    pub fn evaluate_error(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut wrong = 0usize;
        for inst in data.instances() {
            if self.predict(&inst.features)? != inst.label {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / data.len() as f64)
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<usize>> {
        data.instances()
            .iter()
            .map(|i| self.predict(&i.features))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.weights_ih
            .iter()
            .chain(&self.weights_ho)
            .all(|w| w.is_finite())
    }
}

/// In-place SGD step on one (already scaled) instance; returns the loss
/// before the update.
fn sgd_step(
    weights_ih: &mut [f64],
    weights_ho: &mut [f64],
    config: &MlpConfig,
    x: &[f64],
    y: usize,
    hidden: &mut [f64],
) -> f64 {
    let d = config.input_dim;
    let stride = d + 1;
    let h_units = config.hidden_units;
    let lr = config.learning_rate;
    for (h, row) in hidden.iter_mut().zip(weights_ih.chunks_exact(stride)) {
        let z = row[..d].iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + row[d];
        *h = sigmoid(z);
    }
    let z = weights_ho[..h_units]
        .iter()
        .zip(hidden.iter())
        .map(|(w, h)| w * h)
        .sum::<f64>()
        + weights_ho[h_units];
    let loss = softplus(z) - if y == POSITIVE { z } else { 0.0 };
    let delta = sigmoid(z) - y as f64;

    for j in 0..h_units {
        // Hidden delta uses the pre-update output weight.
        let dh = delta * weights_ho[j] * hidden[j] * (1.0 - hidden[j]);
        weights_ho[j] -= lr * delta * hidden[j];
        let row = &mut weights_ih[j * stride..(j + 1) * stride];
        for (w, xi) in row[..d].iter_mut().zip(x) {
            *w -= lr * dh * xi;
        }
        row[d] -= lr * dh;
    }
    weights_ho[h_units] -= lr * delta;
    loss
}
