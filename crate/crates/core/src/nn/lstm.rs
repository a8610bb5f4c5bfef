use serde::{Deserialize, Serialize};

use super::tensor::{ParamTensor, Parameterized};
use super::{matvec_acc, matvec_backward, sigmoid};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// One LSTM layer. Gate blocks are stacked in the order input, forget,
/// cell candidate, output; `w_ih` is `[4H, in]`, `w_hh` is `[4H, H]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub w_ih: ParamTensor,
    pub w_hh: ParamTensor,
    pub bias: ParamTensor,
}

/// Per-step record of one layer's forward pass.
#[derive(Debug, Clone)]
pub struct LstmLayerTrace {
    pub xs: Vec<Vec<f64>>,
    /// `hs[0]` is the initial state, `hs[t + 1]` the output after input `t`.
    pub hs: Vec<Vec<f64>>,
    pub cs: Vec<Vec<f64>>,
    /// Activated gates `[i, f, g, o]` per step.
    pub gates: Vec<Vec<f64>>,
}

impl LstmLayerTrace {
    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.hs[1..]
    }
}

impl LstmLayer {
    pub fn new(name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut bias = ParamTensor::zeros(format!("{name}.bias"), vec![4 * hidden]);
        bias.values[hidden..2 * hidden].iter_mut().for_each(|b| *b = 1.0);
        LstmLayer {
            w_ih: ParamTensor::uniform(format!("{name}.w_ih"), vec![4 * hidden, input], input, rng),
            w_hh: ParamTensor::uniform(format!("{name}.w_hh"), vec![4 * hidden, hidden], hidden, rng),
            bias,
        }
    }

    pub fn zeros(name: &str, input: usize, hidden: usize) -> Self {
        LstmLayer {
            w_ih: ParamTensor::zeros(format!("{name}.w_ih"), vec![4 * hidden, input]),
            w_hh: ParamTensor::zeros(format!("{name}.w_hh"), vec![4 * hidden, hidden]),
            bias: ParamTensor::zeros(format!("{name}.bias"), vec![4 * hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.shape[1]
    }

    pub fn input(&self) -> usize {
        self.w_ih.shape[1]
    }

    pub fn forward_seq(&self, xs: &[Vec<f64>], h0: Option<&[f64]>, c0: Option<&[f64]>) -> LstmLayerTrace {
        let h = self.hidden();
        let t_len = xs.len();
        let mut hs = Vec::with_capacity(t_len + 1);
        let mut cs = Vec::with_capacity(t_len + 1);
        let mut gates = Vec::with_capacity(t_len);
        hs.push(h0.map_or_else(|| vec![0.0; h], <[f64]>::to_vec));
        cs.push(c0.map_or_else(|| vec![0.0; h], <[f64]>::to_vec));
        for x in xs {
            let mut z = self.bias.values.clone();
            matvec_acc(&self.w_ih.values, x, &mut z);
            matvec_acc(&self.w_hh.values, hs.last().unwrap(), &mut z);
            let c_prev = cs.last().unwrap();
            let mut c = vec![0.0; h];
            let mut hn = vec![0.0; h];
            for k in 0..h {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[h + k]);
                let g = z[2 * h + k].tanh();
                let o = sigmoid(z[3 * h + k]);
                z[k] = i;
                z[h + k] = f;
                z[2 * h + k] = g;
                z[3 * h + k] = o;
                c[k] = f * c_prev[k] + i * g;
                hn[k] = o * c[k].tanh();
            }
            gates.push(z);
            cs.push(c);
            hs.push(hn);
        }
        LstmLayerTrace {
            xs: xs.to_vec(),
            hs,
            cs,
            gates,
        }
    }

    /// Backpropagation through time over the whole recorded sequence.
    ///
    /// `dhs[t]` is the loss gradient w.r.t. the output at step `t`. Returns the
    /// gradients w.r.t. every input and w.r.t. the initial hidden state.
    pub fn backward_seq(
        &self,
        trace: &LstmLayerTrace,
        dhs: &[Vec<f64>],
        grads: &mut LstmLayer,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let h = self.hidden();
        let t_len = trace.xs.len();
        let mut dxs = vec![vec![0.0; self.input()]; t_len];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..t_len).rev() {
            let gate = &trace.gates[t];
            let c = &trace.cs[t + 1];
            let c_prev = &trace.cs[t];
            for k in 0..h {
                let (i, f, g, o) = (gate[k], gate[h + k], gate[2 * h + k], gate[3 * h + k]);
                let dh = dhs[t][k] + dh_next[k];
                let tc = c[k].tanh();
                let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                dz[k] = dc * g * i * (1.0 - i);
                dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
                dz[2 * h + k] = dc * i * (1.0 - g * g);
                dz[3 * h + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            for (b, d) in grads.bias.values.iter_mut().zip(&dz) {
                *b += d;
            }
            matvec_backward(&self.w_ih.values, &trace.xs[t], &dz, &mut grads.w_ih.values, Some(&mut dxs[t]));
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            matvec_backward(&self.w_hh.values, &trace.hs[t], &dz, &mut grads.w_hh.values, Some(&mut dh_next));
        }
        (dxs, dh_next)
    }
}

impl Parameterized for LstmLayer {
    fn tensors(&self) -> Vec<&ParamTensor> {
        vec![&self.w_ih, &self.w_hh, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.bias]
    }
}

/// Stacked unidirectional LSTM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub layers: Vec<LstmLayer>,
}

#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub layers: Vec<LstmLayerTrace>,
}

impl LstmTrace {
    /// Hidden states of the top layer, one per input step.
    pub fn outputs(&self) -> &[Vec<f64>] {
        self.layers.last().expect("at least one layer").outputs()
    }
}

impl Lstm {
    pub fn new(name: &str, input: usize, hidden: usize, layers: usize, rng: &mut Rng) -> Self {
        let layers = (0..layers)
            .map(|l| LstmLayer::new(&format!("{name}.{l}"), if l == 0 { input } else { hidden }, hidden, rng))
            .collect();
        Lstm { layers }
    }

    pub fn zeros(name: &str, input: usize, hidden: usize, layers: usize) -> Self {
        let layers = (0..layers)
            .map(|l| LstmLayer::zeros(&format!("{name}.{l}"), if l == 0 { input } else { hidden }, hidden))
            .collect();
        Lstm { layers }
    }

    pub fn input(&self) -> usize {
        self.layers[0].input()
    }

    pub fn hidden(&self) -> usize {
        self.layers[0].hidden()
    }

    /// Per-step top-layer hidden states. `h0` seeds the first layer's hidden
    /// state (cell state starts at zero); deeper layers start from zero.
    pub fn forward(&self, window: &[Vec<f64>], h0: Option<&[f64]>) -> Result<Vec<Vec<f64>>> {
        if window.is_empty() {
            return Err(Error::Shape("LSTM window must hold at least one step".into()));
        }
        for (t, x) in window.iter().enumerate() {
            if x.len() != self.input() {
                return Err(Error::Shape(format!(
                    "LSTM step {t}: expected {} inputs, got {}",
                    self.input(),
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("LSTM step {t} holds a non-finite input")));
            }
        }
        if let Some(h0) = h0 {
            if h0.len() != self.hidden() {
                return Err(Error::Shape(format!(
                    "initial hidden state has {} values, layer width is {}",
                    h0.len(),
                    self.hidden()
                )));
            }
        }
        Ok(self.trace(window, h0).outputs().to_vec())
    }

    pub fn trace(&self, window: &[Vec<f64>], h0: Option<&[f64]>) -> LstmTrace {
        let mut layers: Vec<LstmLayerTrace> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let tr = match layers.last() {
                None => layer.forward_seq(window, h0, None),
                Some(prev) => layer.forward_seq(prev.outputs(), None, None),
            };
            layers.push(tr);
        }
        LstmTrace { layers }
    }

    /// Returns gradients w.r.t. the inputs and w.r.t. the first layer's `h0`.
    pub fn backward(
        &self,
        trace: &LstmTrace,
        d_top: &[Vec<f64>],
        grads: &mut Lstm,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut upstream = d_top.to_vec();
        let mut dh0 = Vec::new();
        for l in (0..self.layers.len()).rev() {
            let (dxs, dh) = self.layers[l].backward_seq(&trace.layers[l], &upstream, &mut grads.layers[l]);
            upstream = dxs;
            dh0 = dh;
        }
        (upstream, dh0)
    }
}

impl Parameterized for Lstm {
    fn tensors(&self) -> Vec<&ParamTensor> {
        self.layers.iter().flat_map(|l| l.tensors()).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.layers.iter_mut().flat_map(|l| l.tensors_mut()).collect()
    }
}

/// Single-layer bidirectional LSTM; outputs `[h_forward, h_backward]` per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub forward: LstmLayer,
    pub backward: LstmLayer,
}

#[derive(Debug, Clone)]
pub struct BiLstmTrace {
    pub fwd: LstmLayerTrace,
    /// Runs over the reversed sequence.
    pub bwd: LstmLayerTrace,
    pub outputs: Vec<Vec<f64>>,
}

impl BiLstm {
    pub fn new(name: &str, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        BiLstm {
            forward: LstmLayer::new(&format!("{name}.fwd"), input, hidden, rng),
            backward: LstmLayer::new(&format!("{name}.bwd"), input, hidden, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn trace(&self, xs: &[Vec<f64>]) -> BiLstmTrace {
        let fwd = self.forward.forward_seq(xs, None, None);
        let rev: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let bwd = self.backward.forward_seq(&rev, None, None);
        let n = xs.len();
        let outputs = (0..n)
            .map(|t| {
                let mut o = fwd.outputs()[t].clone();
                o.extend_from_slice(&bwd.outputs()[n - 1 - t]);
                o
            })
            .collect();
        BiLstmTrace { fwd, bwd, outputs }
    }

    pub fn backward_pass(&self, trace: &BiLstmTrace, d_out: &[Vec<f64>], grads: &mut BiLstm) -> Vec<Vec<f64>> {
        let h = self.hidden();
        let n = d_out.len();
        let d_fwd: Vec<Vec<f64>> = d_out.iter().map(|d| d[..h].to_vec()).collect();
        let d_bwd: Vec<Vec<f64>> = (0..n).map(|t| d_out[n - 1 - t][h..].to_vec()).collect();
        let (mut dx, _) = self.forward.backward_seq(&trace.fwd, &d_fwd, &mut grads.forward);
        let (dx_rev, _) = self.backward.backward_seq(&trace.bwd, &d_bwd, &mut grads.backward);
        for t in 0..n {
            for (a, b) in dx[t].iter_mut().zip(&dx_rev[n - 1 - t]) {
                *a += b;
            }
        }
        dx
    }
}

impl Parameterized for BiLstm {
    fn tensors(&self) -> Vec<&ParamTensor> {
        let mut v = self.forward.tensors();
        v.extend(self.backward.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut v = self.forward.tensors_mut();
        v.extend(self.backward.tensors_mut());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradient_check;
    use crate::rng::seeded;

    #[test]
    fn zero_weights_give_zero_hidden_states() {
        let lstm = Lstm::zeros("z", 3, 4, 2);
        let window = vec![vec![1.0, -2.0, 0.5]; 5];
        for h in lstm.forward(&window, None).unwrap() {
            assert_eq!(h, vec![0.0; 4]);
        }
    }

    #[test]
    fn single_cell_matches_hand_evaluation() {
        let mut layer = LstmLayer::zeros("c", 1, 1);
        layer.w_ih.values = vec![0.5, -0.3, 0.8, 0.2];
        layer.w_hh.values = vec![0.0; 4];
        layer.bias.values = vec![0.1, 1.0, -0.2, 0.05];
        let lstm = Lstm { layers: vec![layer] };
        let x = 0.7f64;
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let i = sig(0.5 * x + 0.1);
        let g = (0.8 * x - 0.2).tanh();
        let o = sig(0.2 * x + 0.05);
        let c = i * g; // forget gate multiplies a zero cell
        let expected = o * c.tanh();
        let h = lstm.forward(&[vec![x]], None).unwrap();
        assert!((h[0][0] - expected).abs() < 1e-12);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = seeded(11);
        let lstm = Lstm::new("l", 3, 5, 2, &mut rng);
        let window: Vec<Vec<f64>> = (0..4).map(|t| vec![t as f64 * 0.1, -0.2, 0.3]).collect();
        let a = lstm.forward(&window, None).unwrap();
        let b = lstm.forward(&window, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_finite_input() {
        let lstm = Lstm::zeros("z", 2, 2, 1);
        let err = lstm.forward(&[vec![f64::NAN, 0.0]], None).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn forget_gate_bias_starts_at_one() {
        let mut rng = seeded(0);
        let layer = LstmLayer::new("l", 2, 3, &mut rng);
        assert_eq!(&layer.bias.values[3..6], &[1.0, 1.0, 1.0]);
        assert!(layer.bias.values[..3].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn bptt_matches_finite_differences() {
        let mut rng = seeded(5);
        let lstm = Lstm::new("l", 3, 4, 2, &mut rng);
        let window: Vec<Vec<f64>> = (0..5).map(|t| vec![0.3 * t as f64 - 0.5, 0.2, -0.1 * t as f64]).collect();
        let h0 = vec![0.1, -0.2, 0.3, 0.05];
        let weights: Vec<Vec<f64>> = (0..5).map(|t| (0..4).map(|k| ((t * 4 + k) as f64).sin()).collect()).collect();
        let loss = |m: &Lstm, h0: &[f64]| -> f64 {
            let tr = m.trace(&window, Some(h0));
            tr.outputs().iter().zip(&weights).map(|(h, w)| h.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).sum()
        };
        let point: Vec<f64> = lstm.flatten().into_iter().chain(h0.iter().copied()).collect();
        let n_params = lstm.param_count();
        let report = gradient_check(
            |p: &[f64]| {
                let mut m = lstm.clone();
                m.unflatten(&p[..n_params]).unwrap();
                let h0 = &p[n_params..];
                let value = loss(&m, h0);
                let tr = m.trace(&window, Some(h0));
                let mut grads = m.zeros_like();
                let (_, dh0) = m.backward(&tr, &weights, &mut grads);
                let mut g = grads.flatten();
                g.extend(dh0);
                (value, g)
            },
            &point,
            1e-5,
        );
        assert!(report.max_relative_error < 1e-5, "{report:?}");
    }

    #[test]
    fn bidirectional_gradients_match_finite_differences() {
        let mut rng = seeded(9);
        let bi = BiLstm::new("b", 2, 3, &mut rng);
        let xs: Vec<Vec<f64>> = (0..4).map(|t| vec![0.2 * t as f64, -0.4 + 0.1 * t as f64]).collect();
        let w: Vec<Vec<f64>> = (0..4).map(|t| (0..6).map(|k| ((t + 2 * k) as f64).cos()).collect()).collect();
        let mut point = bi.flatten();
        point.extend(xs.iter().flatten());
        let n = bi.param_count();
        let report = gradient_check(
            |p: &[f64]| {
                let mut m = bi.clone();
                m.unflatten(&p[..n]).unwrap();
                let xs: Vec<Vec<f64>> = p[n..].chunks(2).map(<[f64]>::to_vec).collect();
                let tr = m.trace(&xs);
                let value = tr.outputs.iter().zip(&w).map(|(h, w)| h.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).sum();
                let mut grads = m.zeros_like();
                let dx = m.backward_pass(&tr, &w, &mut grads);
                let mut g = grads.flatten();
                g.extend(dx.into_iter().flatten());
                (value, g)
            },
            &point,
            1e-5,
        );
        assert!(report.max_relative_error < 1e-5, "{report:?}");
    }
}
