use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    L2,
    CrossEntropy,
}

#[derive(Debug, Clone, Copy)]
pub enum LossTarget<'a> {
    Values(&'a [f64]),
    Class(usize),
}

/// Task (feature regression) and motion (action classification) losses of
/// one evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub task: f64,
    pub motion: f64,
}

impl LossReport {
    pub fn total(&self) -> f64 {
        self.task + self.motion
    }

    pub fn is_finite(&self) -> bool {
        self.task.is_finite() && self.motion.is_finite()
    }
}

/// Sum of squared differences and its gradient w.r.t. `prediction`.
pub fn l2_loss(prediction: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if prediction.len() != target.len() {
        return Err(Error::Shape(format!(
            "l2: prediction has {} values, target {}",
            prediction.len(),
            target.len()
        )));
    }
    let mut loss = 0.0;
    let grad = prediction
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d
        })
        .collect();
    Ok((loss, grad))
}

/// `-log softmax(logits)[class]` and its gradient `softmax - onehot`.
pub fn cross_entropy_loss(logits: &[f64], class: usize) -> Result<(f64, Vec<f64>)> {
    if class >= logits.len() {
        return Err(Error::Shape(format!(
            "class index {class} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    let log_z = max + sum.ln();
    let mut grad: Vec<f64> = logits.iter().map(|l| (l - log_z).exp()).collect();
    grad[class] -= 1.0;
    Ok((log_z - logits[class], grad))
}

pub fn loss_eval(kind: LossKind, prediction: &[f64], target: LossTarget<'_>) -> Result<(f64, Vec<f64>)> {
    match (kind, target) {
        (LossKind::L2, LossTarget::Values(t)) => l2_loss(prediction, t),
        (LossKind::CrossEntropy, LossTarget::Class(c)) => cross_entropy_loss(prediction, c),
        (kind, _) => Err(Error::Shape(format!("{kind:?} loss given a mismatched target"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l2_of_identical_vectors_is_zero() {
        let x = [0.5, -1.25, 3.0];
        let (l, g) = l2_loss(&x, &x).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn l2_unit_difference() {
        assert_eq!(loss_eval(LossKind::L2, &[1.0], LossTarget::Values(&[0.0])).unwrap(), (1.0, vec![2.0]));
    }

    #[test]
    fn cross_entropy_uniform_logits() {
        let (l, g) = cross_entropy_loss(&[0.0, 0.0, 0.0], 1).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-15);
        assert!((l - 1.098612).abs() < 1e-6);
        assert!((g[1] + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_rejects_bad_class() {
        assert!(matches!(cross_entropy_loss(&[0.0; 3], 3), Err(Error::Shape(_))));
        assert!(loss_eval(LossKind::CrossEntropy, &[0.0], LossTarget::Values(&[0.0])).is_err());
    }

    #[test]
    fn cross_entropy_is_stable_for_large_logits() {
        let (l, g) = cross_entropy_loss(&[1000.0, -1000.0, 0.0], 0).unwrap();
        assert!(l.abs() < 1e-12);
        assert!(g.iter().all(|v| v.is_finite()));
    }
}
