//! GRU layer with explicit backpropagation through time.
//!
//! Gate order in the stacked matrices is `r, z, n` (reset, update, new).
//! Two bias vectors are kept because the hidden-side bias of the `n` gate is
//! multiplied by the reset gate and therefore not mergeable:
//!
//! ```text
//! r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//! z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//! n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//! h' = (1 - z) * n + z * h
//! ```

use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::Rng;

use super::{flat, sigmoid, to_batch_major, to_time_major};

/// One GRU layer's weights: `w_ih (3h, in)`, `w_hh (3h, h)`, `b_ih`, `b_hh`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_ih: Array2<f64>,
    pub w_hh: Array2<f64>,
    pub b_ih: Array1<f64>,
    pub b_hh: Array1<f64>,
}

/// Forward intermediates for the backward pass, all time-major.
pub struct GruCache {
    x2: Array2<f64>,
    /// Activated `r, z, n` gates `(l, s, 3h)`.
    gates: Array3<f64>,
    /// `W_hn h_prev + b_hn` before the reset gate is applied `(l, s, h)`.
    hn_pre: Array3<f64>,
    hidden: Array3<f64>,
    batch: usize,
    steps: usize,
}

impl GruParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        GruParams {
            w_ih: Array2::zeros((3 * hidden, input)),
            w_hh: Array2::zeros((3 * hidden, hidden)),
            b_ih: Array1::zeros(3 * hidden),
            b_hh: Array1::zeros(3 * hidden),
        }
    }

    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let k = 1.0 / (hidden as f64).sqrt();
        GruParams {
            w_ih: Array2::from_shape_simple_fn((3 * hidden, input), || rng.random_range(-k..k)),
            w_hh: Array2::from_shape_simple_fn((3 * hidden, hidden), || rng.random_range(-k..k)),
            b_ih: Array1::from_shape_simple_fn(3 * hidden, || rng.random_range(-k..k)),
            b_hh: Array1::from_shape_simple_fn(3 * hidden, || rng.random_range(-k..k)),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn input(&self) -> usize {
        self.w_ih.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.w_ih.len() + self.w_hh.len() + self.b_ih.len() + self.b_hh.len()
    }

    /// Packing order: `w_ih`, `w_hh`, `b_ih`, `b_hh`.
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        flat::push2(out, &self.w_ih);
        flat::push2(out, &self.w_hh);
        flat::push1(out, &self.b_ih);
        flat::push1(out, &self.b_hh);
    }

    pub fn read_flat(&mut self, src: &mut &[f64]) {
        self.w_ih = flat::take2(src, self.w_ih.nrows(), self.w_ih.ncols());
        self.w_hh = flat::take2(src, self.w_hh.nrows(), self.w_hh.ncols());
        self.b_ih = flat::take1(src, self.b_ih.len());
        self.b_hh = flat::take1(src, self.b_hh.len());
    }

    /// Runs the layer over `(batch, steps, in)`.
    pub fn forward(&self, x: &Array3<f64>) -> (Array3<f64>, GruCache) {
        let (batch, steps, d_in) = x.dim();
        debug_assert_eq!(d_in, self.input());
        let h = self.hidden();

        let xt = to_time_major(x);
        let x2 = xt
            .to_shape((steps * batch, d_in))
            .expect("contiguous time-major input")
            .to_owned();
        let pre_x = x2.dot(&self.w_ih.t()) + &self.b_ih;

        let mut gates = Array3::zeros((steps, batch, 3 * h));
        let mut hn_pres = Array3::zeros((steps, batch, h));
        let mut hidden = Array3::zeros((steps, batch, h));

        let mut h_prev = Array2::<f64>::zeros((batch, h));
        for t in 0..steps {
            let px = pre_x.slice(s![t * batch..(t + 1) * batch, ..]);
            let hh = h_prev.dot(&self.w_hh.t()) + &self.b_hh;

            let r = (&px.slice(s![.., 0..h]) + &hh.slice(s![.., 0..h])).mapv(sigmoid);
            let z = (&px.slice(s![.., h..2 * h]) + &hh.slice(s![.., h..2 * h])).mapv(sigmoid);
            let hn_pre = hh.slice(s![.., 2 * h..3 * h]).to_owned();
            let n = (&px.slice(s![.., 2 * h..3 * h]).to_owned() + &(&r * &hn_pre)).mapv(f64::tanh);
            let h_new = &(1.0 - &z) * &n + &z * &h_prev;

            let mut g_t = gates.slice_mut(s![t, .., ..]);
            g_t.slice_mut(s![.., 0..h]).assign(&r);
            g_t.slice_mut(s![.., h..2 * h]).assign(&z);
            g_t.slice_mut(s![.., 2 * h..3 * h]).assign(&n);
            hn_pres.slice_mut(s![t, .., ..]).assign(&hn_pre);
            hidden.slice_mut(s![t, .., ..]).assign(&h_new);
            h_prev = h_new;
        }

        let out = to_batch_major(&hidden);
        (
            out,
            GruCache {
                x2,
                gates,
                hn_pre: hn_pres,
                hidden,
                batch,
                steps,
            },
        )
    }

    /// Backpropagates `d_out` `(batch, steps, h)`; returns parameter
    /// gradients and the input gradient `(batch, steps, in)`.
    pub fn backward(&self, cache: &GruCache, d_out: &Array3<f64>) -> (GruParams, Array3<f64>) {
        let (batch, steps) = (cache.batch, cache.steps);
        let h = self.hidden();
        let d_h_seq = to_time_major(d_out);

        // Pre-activation grads; the hidden-side `n` slot carries the grad of
        // (W_hn h + b_hn), which differs from the input-side one by the reset
        // gate factor.
        let mut dg_ih = Array3::<f64>::zeros((steps, batch, 3 * h));
        let mut dg_hh = Array3::<f64>::zeros((steps, batch, 3 * h));
        let mut dh_next = Array2::<f64>::zeros((batch, h));

        for t in (0..steps).rev() {
            let dh = &d_h_seq.slice(s![t, .., ..]).to_owned() + &dh_next;
            let gate = cache.gates.slice(s![t, .., ..]);
            let r = gate.slice(s![.., 0..h]).to_owned();
            let z = gate.slice(s![.., h..2 * h]).to_owned();
            let n = gate.slice(s![.., 2 * h..3 * h]).to_owned();
            let hn_pre = cache.hn_pre.slice(s![t, .., ..]).to_owned();
            let h_prev = if t > 0 {
                cache.hidden.slice(s![t - 1, .., ..]).to_owned()
            } else {
                Array2::zeros((batch, h))
            };

            let dz = &dh * &(&h_prev - &n);
            let dpre_z = &dz * &z * &(1.0 - &z);
            let dn = &dh * &(1.0 - &z);
            let dpre_n = &dn * &(1.0 - &n * &n);
            let dr = &dpre_n * &hn_pre;
            let dpre_r = &dr * &r * &(1.0 - &r);
            let d_hn_pre = &dpre_n * &r;

            {
                let mut gi = dg_ih.slice_mut(s![t, .., ..]);
                gi.slice_mut(s![.., 0..h]).assign(&dpre_r);
                gi.slice_mut(s![.., h..2 * h]).assign(&dpre_z);
                gi.slice_mut(s![.., 2 * h..3 * h]).assign(&dpre_n);
            }
            let mut gh = dg_hh.slice_mut(s![t, .., ..]);
            gh.slice_mut(s![.., 0..h]).assign(&dpre_r);
            gh.slice_mut(s![.., h..2 * h]).assign(&dpre_z);
            gh.slice_mut(s![.., 2 * h..3 * h]).assign(&d_hn_pre);

            dh_next = gh.dot(&self.w_hh) + &dh * &z;
        }

        let dgi2 = dg_ih
            .to_shape((steps * batch, 3 * h))
            .expect("contiguous gate grads")
            .to_owned();
        let dgh2 = dg_hh
            .to_shape((steps * batch, 3 * h))
            .expect("contiguous gate grads")
            .to_owned();
        let dw_ih = dgi2.t().dot(&cache.x2);
        let mut h_prev2 = Array2::<f64>::zeros((steps * batch, h));
        for t in 1..steps {
            h_prev2
                .slice_mut(s![t * batch..(t + 1) * batch, ..])
                .assign(&cache.hidden.slice(s![t - 1, .., ..]));
        }
        let dw_hh = dgh2.t().dot(&h_prev2);
        let db_ih = dgi2.sum_axis(Axis(0));
        let db_hh = dgh2.sum_axis(Axis(0));
        let dx2 = dgi2.dot(&self.w_ih);
        let dx_t = dx2
            .to_shape((steps, batch, self.input()))
            .expect("input grad shape")
            .to_owned();

        (
            GruParams {
                w_ih: dw_ih,
                w_hh: dw_hh,
                b_ih: db_ih,
                b_hh: db_hh,
            },
            to_batch_major(&dx_t),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn probe_loss(layer: &GruParams, x: &Array3<f64>, probe: &Array3<f64>) -> f64 {
        let (out, _) = layer.forward(x);
        (&out * probe).sum()
    }

    #[test]
    fn zero_weights_give_zero_hidden_sequence() {
        let layer = GruParams::zeros(2, 3);
        let x = Array3::from_elem((1, 4, 2), 0.9);
        let (out, _) = layer.forward(&x);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut layer = GruParams::init(2, 3, &mut rng);
        let x = Array3::from_shape_simple_fn((3, 5, 2), || rng.random_range(-1.0..1.0));
        let probe = Array3::from_shape_simple_fn((3, 5, 3), || rng.random_range(-1.0..1.0));

        let (_, cache) = layer.forward(&x);
        let (grads, dx) = layer.backward(&cache, &probe);

        let mut flat = Vec::new();
        layer.write_flat(&mut flat);
        let mut grad_flat = Vec::new();
        grads.write_flat(&mut grad_flat);
        let he = 1e-6;
        for idx in 0..flat.len() {
            let mut plus = flat.clone();
            plus[idx] += he;
            let mut minus = flat.clone();
            minus[idx] -= he;
            let mut lp = layer.clone();
            lp.read_flat(&mut plus.as_slice());
            let mut lm = layer.clone();
            lm.read_flat(&mut minus.as_slice());
            let fd = (probe_loss(&lp, &x, &probe) - probe_loss(&lm, &x, &probe)) / (2.0 * he);
            assert!(
                (fd - grad_flat[idx]).abs() < 1e-7,
                "param {idx}: fd={fd} analytic={}",
                grad_flat[idx]
            );
        }

        for ((b, t, f), &g) in dx.indexed_iter() {
            let mut xp = x.clone();
            xp[[b, t, f]] += he;
            let mut xm = x.clone();
            xm[[b, t, f]] -= he;
            let fd = (probe_loss(&layer, &xp, &probe) - probe_loss(&layer, &xm, &probe)) / (2.0 * he);
            assert!((fd - g).abs() < 1e-7, "input ({b},{t},{f})");
        }
    }
}
