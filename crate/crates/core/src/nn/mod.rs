//! Minimal deterministic neural-network kernel.
//!
//! Everything is `f64` and single-threaded. Layers own their [`ParamTensor`]s;
//! gradients are accumulated into a zeroed clone of the same layer, so a model
//! and its gradient always share one shape.

mod adam;
mod checkpoint;
mod dense;
mod gradcheck;
mod loss;
mod lstm;
mod tensor;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::Checkpoint;
pub use dense::{Dense, Mlp, MlpTrace};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use loss::{cross_entropy_loss, l2_loss, loss_eval, LossKind, LossReport, LossTarget};
pub use lstm::{BiLstm, BiLstmTrace, Lstm, LstmLayer, LstmLayerTrace, LstmTrace};
pub use tensor::{ParamTensor, Parameterized};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `out += w · x` for a row-major `rows × x.len()` matrix.
#[inline]
pub fn matvec_acc(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut s = 0.0;
        for (a, b) in row.iter().zip(x) {
            s += a * b;
        }
        *o += s;
    }
}

/// `dx += wᵀ · dy` and `dw += dy ⊗ x`.
#[inline]
pub fn matvec_backward(
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let cols = x.len();
    for (&g, drow) in dy.iter().zip(dw.chunks_exact_mut(cols)) {
        if g != 0.0 {
            for (d, &xi) in drow.iter_mut().zip(x) {
                *d += g * xi;
            }
        }
    }
    if let Some(dx) = dx {
        for (&g, row) in dy.iter().zip(w.chunks_exact(cols)) {
            if g != 0.0 {
                for (d, &wi) in dx.iter_mut().zip(row) {
                    *d += g * wi;
                }
            }
        }
    }
}
