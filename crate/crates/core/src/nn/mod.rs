//! Minimal recurrent-network building blocks in double precision.
//!
//! Everything here is written for exact reproducibility and finite-difference
//! verifiability rather than raw speed: plain `f64` arrays, explicit
//! backpropagation through time, and a flat-parameter convention shared by
//! the optimizer, the checkpoint format, and the gradient checker.
//!
//! Layers operate on batch-major sequences `(batch, steps, features)` and
//! internally re-pack to time-major so the per-step recurrent work runs on
//! contiguous blocks.

pub mod adam;
pub mod dense;
pub mod gru;
pub mod lstm;

pub use adam::Adam;
pub use dense::DenseParams;
pub use gru::GruParams;
pub use lstm::LstmParams;

use ndarray::{Array1, Array2, Array3};

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Flat parameter packing. Order is fixed per layer type and documented on
/// each `write_flat`; the optimizer, checkpoints, and the finite-difference
/// gradient check all rely on it.
pub(crate) mod flat {
    use super::*;

    pub fn push2(out: &mut Vec<f64>, a: &Array2<f64>) {
        out.extend(a.iter());
    }

    pub fn push1(out: &mut Vec<f64>, a: &Array1<f64>) {
        out.extend(a.iter());
    }

    pub fn take2(src: &mut &[f64], rows: usize, cols: usize) -> Array2<f64> {
        let (head, tail) = src.split_at(rows * cols);
        *src = tail;
        Array2::from_shape_vec((rows, cols), head.to_vec()).expect("shape matches take")
    }

    pub fn take1(src: &mut &[f64], len: usize) -> Array1<f64> {
        let (head, tail) = src.split_at(len);
        *src = tail;
        Array1::from_vec(head.to_vec())
    }
}

/// Repacks `(batch, steps, feat)` into a contiguous time-major copy
/// `(steps, batch, feat)`.
pub(crate) fn to_time_major(x: &Array3<f64>) -> Array3<f64> {
    x.view()
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_owned()
}

/// Inverse of [`to_time_major`].
pub(crate) fn to_batch_major(x: &Array3<f64>) -> Array3<f64> {
    x.view()
        .permuted_axes([1, 0, 2])
        .as_standard_layout()
        .to_owned()
}
