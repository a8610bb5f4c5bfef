use serde::{Deserialize, Serialize};

use super::tensor::ParamTensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// The learning rate is multiplied by `decay_factor` every `decay_every` epochs.
    pub decay_every: u32,
    pub decay_factor: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_every: 40,
            decay_factor: 0.5,
        }
    }
}

impl AdamConfig {
    /// `lr * decay_factor^floor(epoch / decay_every)` for a zero-based epoch.
    pub fn effective_lr(&self, epoch: u32) -> f64 {
        let periods = if self.decay_every == 0 { 0 } else { epoch / self.decay_every };
        self.lr * self.decay_factor.powi(periods as i32)
    }
}

/// Bias-corrected Adam moments for a fixed list of tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&ParamTensor]) -> Self {
        AdamState {
            config,
            first_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            step_count: 0,
        }
    }

    /// One update at the learning rate scheduled for `epoch`.
    pub fn step(&mut self, params: Vec<&mut ParamTensor>, grads: Vec<&ParamTensor>, epoch: u32) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::Shape(format!(
                "adam: {} parameters, {} gradients, {} moment slots",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        for (p, g) in params.iter().zip(&grads) {
            if p.len() != g.len() {
                return Err(Error::Shape(format!("adam: gradient for {} has wrong length", p.name)));
            }
            if !g.is_finite() {
                return Err(Error::Numeric(format!("adam: gradient for {} is not finite", p.name)));
            }
        }
        self.step_count += 1;
        let AdamConfig { beta1, beta2, eps, .. } = self.config;
        let lr = self.config.effective_lr(epoch);
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let m = &mut self.first_moment[k];
            let v = &mut self.second_moment[k];
            for i in 0..p.values.len() {
                let gi = g.values[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p.values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Rescales gradients so their joint L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_global_norm(grads: Vec<&mut ParamTensor>, max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.squared_norm()).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = max_norm / norm;
        for g in grads {
            g.values.iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(value: f64) -> ParamTensor {
        ParamTensor::new("p", vec![1], vec![value]).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = ParamTensor::new("p", vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let g = ParamTensor::zeros("g", vec![3]);
        let mut st = AdamState::new(AdamConfig::default(), &[&p]);
        st.step(vec![&mut p], vec![&g], 0).unwrap();
        assert_eq!(p.values, vec![0.5, -1.0, 2.0]);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g = 1 and v_hat = g^2 = 1, so the step is lr / (1 + eps).
        let mut p = single(0.0);
        let g = single(1.0);
        let mut st = AdamState::new(AdamConfig::default(), &[&p]);
        st.step(vec![&mut p], vec![&g], 0).unwrap();
        assert!((p.values[0] + 5e-4).abs() < 1e-9);
    }

    #[test]
    fn learning_rate_halves_every_forty_epochs() {
        let cfg = AdamConfig::default();
        assert_eq!(cfg.effective_lr(39), 5e-4);
        assert_eq!(cfg.effective_lr(40), 2.5e-4);
        assert_eq!(cfg.effective_lr(80), 1.25e-4);
    }

    #[test]
    fn rejects_nan_gradient() {
        let mut p = single(0.0);
        let mut g = single(0.0);
        g.values[0] = f64::NAN;
        let mut st = AdamState::new(AdamConfig::default(), &[&p]);
        assert!(matches!(st.step(vec![&mut p], vec![&g], 0), Err(Error::Numeric(_))));
        assert_eq!(st.step_count, 0);
    }

    #[test]
    fn clipping_caps_norm() {
        let mut a = ParamTensor::new("a", vec![2], vec![3.0, 4.0]).unwrap();
        let norm = clip_global_norm(vec![&mut a], 1.0);
        assert_eq!(norm, 5.0);
        assert!((a.squared_norm().sqrt() - 1.0).abs() < 1e-12);
    }
}
