use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::hashing::HashedVector;
use crate::error::{Error, Result};

/// Hyperparameters for logistic SGD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { learning_rate: 0.5, epochs: 5, l2: 1e-6, seed: 0 }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.epochs == 0 || !(self.l2 >= 0.0) {
            return Err(Error::config("learning rate must be positive, epochs nonzero, l2 nonnegative"));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Dense weights plus bias in hashed space.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        LinearModel { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn margin(&self, x: &HashedVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn predict(&self, x: &HashedVector) -> f64 {
        sigmoid(self.margin(x))
    }
}

/// Regularized log loss of one example; the bias is not penalized.
pub fn log_loss(model: &LinearModel, x: &HashedVector, y: bool, l2: f64) -> f64 {
    let z = model.margin(x);
    let y = if y { 1.0 } else { 0.0 };
    let reg: f64 = model.weights.iter().map(|w| w * w).sum::<f64>();
    softplus(z) - y * z + 0.5 * l2 * reg
}

/// Gradient of [`log_loss`] as (dense weight gradient, bias gradient).
pub fn log_loss_gradient(model: &LinearModel, x: &HashedVector, y: bool, l2: f64) -> (Vec<f64>, f64) {
    let err = model.predict(x) - if y { 1.0 } else { 0.0 };
    let mut g: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    for (i, v) in x.iter() {
        g[i] += err * v;
    }
    (g, err)
}

/// Plain SGD with step `lr / sqrt(t)`, `t` counting epochs from 1. The L2 shrink is applied lazily
/// through a global scale so each step only touches active features.
pub fn train_logistic(
    examples: &[(&HashedVector, bool)],
    dim: usize,
    cfg: &SgdConfig,
    mut on_epoch: Option<&mut dyn FnMut(usize, &LinearModel)>,
) -> Result<LinearModel> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::EmptyInput("logistic training examples".into()));
    }
    let mut v = vec![0.0; dim];
    let mut scale = 1.0f64;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = 0u64;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        t += 1;
        let eta = cfg.learning_rate / (t as f64).sqrt();
        for &k in &order {
            let (x, y) = examples[k];
            let z = scale * x.dot(&v) + bias;
            let err = sigmoid(z) - if y { 1.0 } else { 0.0 };
            scale *= 1.0 - eta * cfg.l2;
            for (i, xi) in x.iter() {
                v[i] -= eta * err * xi / scale;
            }
            bias -= eta * err;
            if scale < 1e-6 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        if let Some(cb) = on_epoch.as_deref_mut() {
            let snapshot = LinearModel { weights: v.iter().map(|w| w * scale).collect(), bias };
            cb(epoch, &snapshot);
        }
    }
    Ok(LinearModel { weights: v.into_iter().map(|w| w * scale).collect(), bias })
}
