//! Fully connected layer.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::flat;

/// Affine map `y = x W^T + b` with `W: (out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        DenseParams {
            w: Array2::zeros((output, input)),
            b: Array1::zeros(output),
        }
    }

    /// Uniform init in `±1/sqrt(input)`.
    pub fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let k = 1.0 / (input as f64).sqrt();
        DenseParams {
            w: Array2::from_shape_simple_fn((output, input), || rng.random_range(-k..k)),
            b: Array1::from_shape_simple_fn(output, || rng.random_range(-k..k)),
        }
    }

    pub fn input(&self) -> usize {
        self.w.ncols()
    }

    pub fn output(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }

    /// Packing order: `w` row-major, then `b`.
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        flat::push2(out, &self.w);
        flat::push1(out, &self.b);
    }

    pub fn read_flat(&mut self, src: &mut &[f64]) {
        self.w = flat::take2(src, self.w.nrows(), self.w.ncols());
        self.b = flat::take1(src, self.b.len());
    }

    /// Forward on a stack of rows: `(n, in) -> (n, out)`.
    pub fn forward(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    /// Given the forward input and upstream `dy`, returns parameter gradients
    /// and the gradient w.r.t. the input rows.
    pub fn backward(
        &self,
        x: &ArrayView2<f64>,
        dy: &ArrayView2<f64>,
    ) -> (DenseParams, Array2<f64>) {
        let dw = dy.t().dot(x);
        let db = dy.sum_axis(Axis(0));
        let dx = dy.dot(&self.w);
        (DenseParams { w: dw, b: db }, dx)
    }
}
