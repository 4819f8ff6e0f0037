//! LSTM layer with explicit backpropagation through time.
//!
//! Gate order in the stacked weight matrices is `i, f, g, o` (input, forget,
//! cell candidate, output). Gates use the logistic function; the cell
//! candidate and cell output use `tanh`. Initial hidden and cell states are
//! zero.

use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::Rng;

use super::{flat, sigmoid, to_batch_major, to_time_major};

/// One LSTM layer's weights: `w_ih (4h, in)`, `w_hh (4h, h)`, `b (4h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w_ih: Array2<f64>,
    pub w_hh: Array2<f64>,
    pub b: Array1<f64>,
}

/// Forward-pass intermediates kept for the backward pass, all time-major.
pub struct LstmCache {
    /// Flattened time-major input `(l*s, in)`.
    x2: Array2<f64>,
    /// Activated gates `(l, s, 4h)` in `i, f, g, o` order.
    gates: Array3<f64>,
    /// Cell states `(l, s, h)`.
    cells: Array3<f64>,
    /// `tanh` of the cell states `(l, s, h)`.
    tanh_c: Array3<f64>,
    /// Hidden states `(l, s, h)`.
    hidden: Array3<f64>,
    batch: usize,
    steps: usize,
}

impl LstmCache {
    pub(crate) fn steps(&self) -> usize {
        self.steps
    }
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w_ih: Array2::zeros((4 * hidden, input)),
            w_hh: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    /// Uniform init in `±1/sqrt(hidden)`, the usual recurrent-layer default.
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        LstmParams {
            w_ih: Array2::from_shape_simple_fn((4 * hidden, input), || rng.random_range(-k..k)),
            w_hh: Array2::from_shape_simple_fn((4 * hidden, hidden), || rng.random_range(-k..k)),
            b: Array1::from_shape_simple_fn(4 * hidden, || rng.random_range(-k..k)),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.w_ih.len() + self.w_hh.len() + self.b.len()
    }

    /// Packing order: `w_ih` row-major, `w_hh` row-major, `b`.
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        flat::push2(out, &self.w_ih);
        flat::push2(out, &self.w_hh);
        flat::push1(out, &self.b);
    }

    pub fn read_flat(&mut self, src: &mut &[f64]) {
        self.w_ih = flat::take2(src, self.w_ih.nrows(), self.w_ih.ncols());
        self.w_hh = flat::take2(src, self.w_hh.nrows(), self.w_hh.ncols());
        self.b = flat::take1(src, self.b.len());
    }

    /// Runs the layer over `(batch, steps, in)`, returning the hidden
    /// sequence `(batch, steps, h)` and the cache for [`Self::backward`].
    pub fn forward(&self, x: &Array3<f64>) -> (Array3<f64>, LstmCache) {
        let (batch, steps, d_in) = x.dim();
        debug_assert_eq!(d_in, self.input());
        let h = self.hidden();

        let xt = to_time_major(x);
        let x2 = xt
            .to_shape((steps * batch, d_in))
            .expect("contiguous time-major input")
            .to_owned();
        // Input projections for every step at once.
        let pre_x = x2.dot(&self.w_ih.t());

        let mut gates = Array3::zeros((steps, batch, 4 * h));
        let mut cells = Array3::zeros((steps, batch, h));
        let mut tanh_c = Array3::zeros((steps, batch, h));
        let mut hidden = Array3::zeros((steps, batch, h));

        let mut h_prev = Array2::<f64>::zeros((batch, h));
        let mut c_prev = Array2::<f64>::zeros((batch, h));
        for t in 0..steps {
            let mut pre = pre_x.slice(s![t * batch..(t + 1) * batch, ..]).to_owned();
            pre += &h_prev.dot(&self.w_hh.t());
            pre += &self.b;
            pre.slice_mut(s![.., 0..h]).mapv_inplace(sigmoid);
            pre.slice_mut(s![.., h..2 * h]).mapv_inplace(sigmoid);
            pre.slice_mut(s![.., 2 * h..3 * h]).mapv_inplace(f64::tanh);
            pre.slice_mut(s![.., 3 * h..4 * h]).mapv_inplace(sigmoid);

            let gate_i = pre.slice(s![.., 0..h]);
            let gate_f = pre.slice(s![.., h..2 * h]);
            let gate_g = pre.slice(s![.., 2 * h..3 * h]);
            let gate_o = pre.slice(s![.., 3 * h..4 * h]);

            let c_new = &gate_f.to_owned() * &c_prev + &gate_i.to_owned() * &gate_g.to_owned();
            let tc = c_new.mapv(f64::tanh);
            let h_new = &gate_o.to_owned() * &tc;

            gates.slice_mut(s![t, .., ..]).assign(&pre);
            cells.slice_mut(s![t, .., ..]).assign(&c_new);
            tanh_c.slice_mut(s![t, .., ..]).assign(&tc);
            hidden.slice_mut(s![t, .., ..]).assign(&h_new);
            h_prev = h_new;
            c_prev = c_new;
        }

        let out = to_batch_major(&hidden);
        (
            out,
            LstmCache {
                x2,
                gates,
                cells,
                tanh_c,
                hidden,
                batch,
                steps,
            },
        )
    }

    /// Backpropagates `d_out` (gradient on every hidden output, batch-major
    /// `(batch, steps, h)`), returning parameter gradients in an
    /// [`LstmParams`]-shaped container plus the input gradient
    /// `(batch, steps, in)`.
    pub fn backward(&self, cache: &LstmCache, d_out: &Array3<f64>) -> (LstmParams, Array3<f64>) {
        let (batch, steps) = (cache.batch, cache.steps);
        let h = self.hidden();
        let d_h_seq = to_time_major(d_out);

        let mut d_gates = Array3::<f64>::zeros((steps, batch, 4 * h));
        let mut dh_next = Array2::<f64>::zeros((batch, h));
        let mut dc_next = Array2::<f64>::zeros((batch, h));

        for t in (0..steps).rev() {
            let dh = &d_h_seq.slice(s![t, .., ..]).to_owned() + &dh_next;
            let gate = cache.gates.slice(s![t, .., ..]);
            let gate_i = gate.slice(s![.., 0..h]).to_owned();
            let gate_f = gate.slice(s![.., h..2 * h]).to_owned();
            let gate_g = gate.slice(s![.., 2 * h..3 * h]).to_owned();
            let gate_o = gate.slice(s![.., 3 * h..4 * h]).to_owned();
            let tc = cache.tanh_c.slice(s![t, .., ..]).to_owned();
            let c_prev = if t > 0 {
                cache.cells.slice(s![t - 1, .., ..]).to_owned()
            } else {
                Array2::zeros((batch, h))
            };

            let d_o = &dh * &tc;
            let dpre_o = &d_o * &gate_o * &(1.0 - &gate_o);
            let dc = &dc_next + &(&dh * &gate_o * &(1.0 - &tc * &tc));
            let d_i = &dc * &gate_g;
            let dpre_i = &d_i * &gate_i * &(1.0 - &gate_i);
            let d_f = &dc * &c_prev;
            let dpre_f = &d_f * &gate_f * &(1.0 - &gate_f);
            let d_g = &dc * &gate_i;
            let dpre_g = &d_g * &(1.0 - &gate_g * &gate_g);

            let mut dg_t = d_gates.slice_mut(s![t, .., ..]);
            dg_t.slice_mut(s![.., 0..h]).assign(&dpre_i);
            dg_t.slice_mut(s![.., h..2 * h]).assign(&dpre_f);
            dg_t.slice_mut(s![.., 2 * h..3 * h]).assign(&dpre_g);
            dg_t.slice_mut(s![.., 3 * h..4 * h]).assign(&dpre_o);

            dh_next = dg_t.dot(&self.w_hh);
            dc_next = &dc * &gate_f;
        }

        // Bulk accumulation over all steps in two matmuls per weight matrix.
        let dg2 = d_gates
            .to_shape((steps * batch, 4 * h))
            .expect("contiguous gate grads")
            .to_owned();
        let dw_ih = dg2.t().dot(&cache.x2);
        let mut h_prev2 = Array2::<f64>::zeros((steps * batch, h));
        for t in 1..steps {
            h_prev2
                .slice_mut(s![t * batch..(t + 1) * batch, ..])
                .assign(&cache.hidden.slice(s![t - 1, .., ..]));
        }
        let dw_hh = dg2.t().dot(&h_prev2);
        let db = dg2.sum_axis(Axis(0));
        let dx2 = dg2.dot(&self.w_ih);
        let dx_t = dx2
            .to_shape((steps, batch, self.input()))
            .expect("input grad shape")
            .to_owned();

        (
            LstmParams {
                w_ih: dw_ih,
                w_hh: dw_hh,
                b: db,
            },
            to_batch_major(&dx_t),
        )
    }
}
