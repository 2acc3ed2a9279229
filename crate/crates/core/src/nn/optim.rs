use serde::{Deserialize, Serialize};

use crate::autodiff::ParamVector;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Global-norm clip threshold; `f64::INFINITY` disables clipping.
    pub clip: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 1e-4, clip: 1.0 }
    }
}

/// Adam with decoupled weight decay and global-norm gradient clipping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub config: AdamWConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    /// Per-parameter weight-decay rates overriding `config.weight_decay`.
    #[serde(default)]
    pub decay: Option<Vec<f64>>,
}

impl AdamW {
    pub fn new(config: AdamWConfig, n: usize) -> Self {
        AdamW { config, m: vec![0.0; n], v: vec![0.0; n], step: 0, decay: None }
    }

    /// One update. Returns the gradient norm before clipping.
    pub fn step(&mut self, params: &mut ParamVector, grads: &[f64]) -> Result<f64> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::Dimension(format!(
                "gradient length {} vs {} parameters",
                grads.len(),
                params.len()
            )));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            let label = params.block_of(i).map(|b| b.label()).unwrap_or_else(|| format!("index {i}"));
            return Err(Error::NonFiniteGradient(label));
        }
        let c = &self.config;
        let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        let factor = if norm > c.clip { c.clip / norm } else { 1.0 };
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        if self.decay.as_ref().is_some_and(|d| d.len() != grads.len()) {
            return Err(Error::Dimension("weight-decay rates misaligned with parameters".into()));
        }
        let rates = self.decay.as_deref();
        for (i, (((p, g), m), v)) in params.values_mut().iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v).enumerate() {
            let decay = 1.0 - c.lr * rates.map_or(c.weight_decay, |r| r[i]);
            let g = g * factor;
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p = *p * decay - c.lr * mhat / (vhat.sqrt() + c.eps);
        }
        Ok(norm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::BlockRole;
    use ndarray::array;

    fn single(x: f64) -> ParamVector {
        let mut pv = ParamVector::new();
        pv.push("n", "l", BlockRole::Weight, array![[x]]);
        pv
    }

    #[test]
    fn degenerate_adam_is_sign_descent() {
        let mut pv = single(1.0);
        let cfg = AdamWConfig { lr: 0.1, beta1: 0.0, beta2: 0.0, weight_decay: 0.0, clip: f64::INFINITY, ..Default::default() };
        let mut opt = AdamW::new(cfg, 1);
        opt.step(&mut pv, &[1.0]).unwrap();
        assert!((pv.values()[0] - 0.9).abs() < 1e-8);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn zero_gradient_applies_exact_decay() {
        let mut pv = single(2.0);
        let cfg = AdamWConfig { lr: 0.01, weight_decay: 0.5, ..Default::default() };
        let mut opt = AdamW::new(cfg, 1);
        opt.step(&mut pv, &[0.0]).unwrap();
        assert_eq!(pv.values()[0], 2.0 * (1.0 - 0.01 * 0.5));
        let mut pv = single(2.0);
        let mut opt = AdamW::new(AdamWConfig { weight_decay: 0.0, ..Default::default() }, 1);
        opt.step(&mut pv, &[0.0]).unwrap();
        assert_eq!(pv.values()[0], 2.0);
    }

    #[test]
    fn clipping_scales_before_moments() {
        let mut pv = ParamVector::new();
        pv.push("n", "l", BlockRole::Weight, array![[0.0, 0.0]]);
        let cfg = AdamWConfig { beta1: 0.5, beta2: 0.5, ..Default::default() };
        let mut opt = AdamW::new(cfg, 2);
        let norm = opt.step(&mut pv, &[6.0, 8.0]).unwrap();
        assert_eq!(norm, 10.0);
        assert!((opt.m[0] - 0.5 * 0.6).abs() < 1e-15);
        assert!((opt.m[1] - 0.5 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let mut pv = single(1.0);
        let mut opt = AdamW::new(AdamWConfig::default(), 1);
        match opt.step(&mut pv, &[f64::NAN]) {
            Err(Error::NonFiniteGradient(label)) => assert_eq!(label, "n/l/weight"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
