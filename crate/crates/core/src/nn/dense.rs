use serde::{Deserialize, Serialize};

use super::tensor::{ParamTensor, Parameterized};
use super::{matvec_acc, matvec_backward};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Fully connected layer, `y = W x + b` with `W` stored row-major `[out, in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: ParamTensor,
    pub bias: ParamTensor,
}

impl Dense {
    pub fn new(name: &str, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        Dense {
            weight: ParamTensor::uniform(format!("{name}.weight"), vec![fan_out, fan_in], fan_in, rng),
            bias: ParamTensor::zeros(format!("{name}.bias"), vec![fan_out]),
        }
    }

    pub fn zeros(name: &str, fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: ParamTensor::zeros(format!("{name}.weight"), vec![fan_out, fan_in]),
            bias: ParamTensor::zeros(format!("{name}.bias"), vec![fan_out]),
        }
    }

    pub fn from_tensors(weight: ParamTensor, bias: ParamTensor) -> Result<Self> {
        if weight.shape.len() != 2 || bias.shape.len() != 1 || weight.shape[0] != bias.shape[0] {
            return Err(Error::Shape(format!(
                "dense layer {}: weight {:?} incompatible with bias {:?}",
                weight.name, weight.shape, bias.shape
            )));
        }
        Ok(Dense { weight, bias })
    }

    pub fn fan_in(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn fan_out(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.fan_in() {
            return Err(Error::Shape(format!(
                "{}: expected input of length {}, got {}",
                self.weight.name,
                self.fan_in(),
                x.len()
            )));
        }
        Ok(self.apply(x))
    }

    /// Unchecked forward pass for internal callers that own the shapes.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.bias.values.clone();
        matvec_acc(&self.weight.values, x, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grads` and returns `dL/dx`.
    pub fn backward(&self, x: &[f64], dy: &[f64], grads: &mut Dense) -> Vec<f64> {
        let mut dx = vec![0.0; x.len()];
        self.backward_into(x, dy, grads, Some(&mut dx));
        dx
    }

    pub fn backward_into(&self, x: &[f64], dy: &[f64], grads: &mut Dense, dx: Option<&mut [f64]>) {
        for (g, d) in grads.bias.values.iter_mut().zip(dy) {
            *g += d;
        }
        matvec_backward(&self.weight.values, x, dy, &mut grads.weight.values, dx);
    }
}

impl Parameterized for Dense {
    fn tensors(&self) -> Vec<&ParamTensor> {
        vec![&self.weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Dense stack with `tanh` between layers and a linear final layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept for the backward pass: `acts[0]` is the input and
/// `acts[l + 1]` the (post-activation) output of layer `l`.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub acts: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace holds at least the input")
    }
}

impl Mlp {
    /// `widths = [in, h1, ..., out]`.
    pub fn new(name: &str, widths: &[usize], rng: &mut Rng) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::new(&format!("{name}.{i}"), w[0], w[1], rng))
            .collect();
        Mlp { layers }
    }

    pub fn zeros(name: &str, widths: &[usize]) -> Self {
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Dense::zeros(&format!("{name}.{i}"), w[0], w[1]))
            .collect();
        Mlp { layers }
    }

    /// Builds a stack from alternating weight/bias tensors, checking that
    /// consecutive layers chain.
    pub fn from_tensors(tensors: Vec<ParamTensor>) -> Result<Self> {
        if tensors.is_empty() || tensors.len() % 2 != 0 {
            return Err(Error::Shape(format!(
                "an MLP needs weight/bias pairs, got {} tensors",
                tensors.len()
            )));
        }
        let mut layers = Vec::with_capacity(tensors.len() / 2);
        let mut it = tensors.into_iter();
        while let (Some(w), Some(b)) = (it.next(), it.next()) {
            let layer = Dense::from_tensors(w, b)?;
            if let Some(prev) = layers.last() {
                let prev: &Dense = prev;
                if prev.fan_out() != layer.fan_in() {
                    return Err(Error::Shape(format!(
                        "{} outputs {} values but {} expects {}",
                        prev.weight.name,
                        prev.fan_out(),
                        layer.weight.name,
                        layer.fan_in()
                    )));
                }
            }
            layers.push(layer);
        }
        Ok(Mlp { layers })
    }

    pub fn fan_in(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn fan_out(&self) -> usize {
        self.layers.last().map(Dense::fan_out).unwrap_or(0)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.fan_in() {
            return Err(Error::Shape(format!(
                "MLP expects input of length {}, got {}",
                self.fan_in(),
                x.len()
            )));
        }
        Ok(self.apply(x))
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.apply(&h);
            if i < last {
                h.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        h
    }

    pub fn trace(&self, x: &[f64]) -> MlpTrace {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut h = layer.apply(acts.last().unwrap());
            if i < last {
                h.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(h);
        }
        MlpTrace { acts }
    }

    /// Backpropagates `dy` through a recorded trace; returns `dL/dinput`.
    pub fn backward(&self, trace: &MlpTrace, dy: &[f64], grads: &mut Mlp) -> Vec<f64> {
        let last = self.layers.len() - 1;
        let mut delta = dy.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < last {
                // tanh'(z) = 1 - tanh(z)^2, with tanh(z) stored in acts[i + 1]
                for (d, a) in delta.iter_mut().zip(&trace.acts[i + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            delta = self.layers[i].backward(&trace.acts[i], &delta, &mut grads.layers[i]);
        }
        delta
    }
}

impl Parameterized for Mlp {
    fn tensors(&self) -> Vec<&ParamTensor> {
        self.layers.iter().flat_map(|l| l.tensors()).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn zero_stack_outputs_zero() {
        let mlp = Mlp::zeros("z", &[5, 4, 3]);
        assert_eq!(mlp.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn identity_linear_layer() {
        let w = ParamTensor::new("id.weight", vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = ParamTensor::zeros("id.bias", vec![2]);
        let mlp = Mlp::from_tensors(vec![w, b]).unwrap();
        assert_eq!(mlp.forward(&[0.3, -0.7]).unwrap(), vec![0.3, -0.7]);
    }

    #[test]
    fn two_two_one_matches_hand_computation() {
        let w0 = ParamTensor::new("a.0.weight", vec![2, 2], vec![0.1, -0.2, 0.3, 0.4]).unwrap();
        let b0 = ParamTensor::new("a.0.bias", vec![2], vec![0.05, -0.1]).unwrap();
        let w1 = ParamTensor::new("a.1.weight", vec![1, 2], vec![0.7, -0.5]).unwrap();
        let b1 = ParamTensor::new("a.1.bias", vec![1], vec![0.2]).unwrap();
        let mlp = Mlp::from_tensors(vec![w0, b0, w1, b1]).unwrap();
        let x = [0.6, -1.2];
        let h0 = (0.1f64 * 0.6 + -0.2 * -1.2 + 0.05).tanh();
        let h1 = (0.3f64 * 0.6 + 0.4 * -1.2 - 0.1).tanh();
        let expected = 0.7 * h0 - 0.5 * h1 + 0.2;
        let y = mlp.forward(&x).unwrap();
        assert!((y[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mlp = Mlp::zeros("z", &[3, 2]);
        assert!(matches!(mlp.forward(&[1.0]), Err(Error::Shape(_))));
        let w0 = ParamTensor::zeros("a.weight", vec![2, 3]);
        let b0 = ParamTensor::zeros("a.bias", vec![2]);
        let w1 = ParamTensor::zeros("b.weight", vec![1, 4]);
        let b1 = ParamTensor::zeros("b.bias", vec![1]);
        assert!(Mlp::from_tensors(vec![w0, b0, w1, b1]).is_err());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = seeded(3);
        let mlp = Mlp::new("m", &[4, 5, 3], &mut rng);
        let x = [0.2, -0.4, 0.9, 0.1];
        let w = [0.3, -1.0, 0.5];
        let trace = mlp.trace(&x);
        let mut grads = mlp.zeros_like();
        let dx = mlp.backward(&trace, &w, &mut grads);
        let f = |x: &[f64]| -> f64 { mlp.apply(x).iter().zip(&w).map(|(a, b)| a * b).sum() };
        for i in 0..4 {
            let mut p = x;
            let mut m = x;
            p[i] += 1e-6;
            m[i] -= 1e-6;
            let num = (f(&p) - f(&m)) / 2e-6;
            assert!((num - dx[i]).abs() < 1e-8, "coordinate {i}: {num} vs {}", dx[i]);
        }
    }
}
