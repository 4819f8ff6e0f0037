//! Recurrent conditional GAN: a two-layer LSTM generator that emits whole
//! normalized cycle profiles from per-step noise plus a capacity conditioning
//! scalar, and a two-layer LSTM discriminator that scores profiles with a
//! single sigmoid unit on its final hidden state.
//!
//! Only the generator is conditioned: the smoothed capacity, linearly
//! rescaled to `[-1, 1]` over the training range, is appended to every
//! timestep's noise vector. The discriminator sees bare profiles. This
//! asymmetry, together with the 2:1 generator/discriminator update schedule
//! in [`train`], deliberately hands the generator an advantage so the harder
//! sequence-synthesis task can keep up with the easier real/fake decision.

mod checkpoint;
mod gradcheck;
mod train;

pub use checkpoint::{param_hash, Checkpoint, NamedTensor};
pub use gradcheck::gradient_check;
pub use train::{train, IterRecord, NetKind, TrainConfig, TrainHistory, Trainer};

use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{DenseParams, LstmParams};
use crate::preprocess::PreprocessedCycle;

/// Profile channel count: voltage, current, temperature.
pub const CHANNELS: usize = 3;

/// Default probability clamp applied before logarithms; the minimax
/// objective is unbounded below without it.
pub const PROB_CLAMP_DEFAULT: f64 = 1e-7;

/// Architecture hyperparameters of the GAN pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GanSpec {
    /// Cycle length `l` after preprocessing.
    pub seq_len: usize,
    /// Per-step noise dimension `d`; the generator input width is `d + 1`.
    pub noise_dim: usize,
    /// Hidden width of each of the generator's two LSTM layers.
    pub g_hidden: usize,
    /// Hidden width of each of the discriminator's two LSTM layers.
    pub d_hidden: usize,
}

impl Default for GanSpec {
    fn default() -> Self {
        GanSpec {
            seq_len: 128,
            noise_dim: 8,
            g_hidden: 64,
            d_hidden: 64,
        }
    }
}

impl GanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seq_len < 2 {
            return Err(Error::InvalidArgument(format!(
                "seq_len must be >= 2, got {}",
                self.seq_len
            )));
        }
        if self.noise_dim < 1 || self.g_hidden < 1 || self.d_hidden < 1 {
            return Err(Error::InvalidArgument(
                "noise_dim and hidden widths must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Affine map from smoothed capacity (Ah) onto the `[-1, 1]` conditioning
/// range, fitted on the training set and carried with the parameters so
/// generation after reload uses the identical scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondScale {
    pub min_ah: f64,
    pub max_ah: f64,
}

impl CondScale {
    /// No-op scale; conditioning values pass through unchanged.
    pub fn identity() -> Self {
        CondScale {
            min_ah: -1.0,
            max_ah: 1.0,
        }
    }

    pub fn fit(c_smooth: &[f64]) -> Self {
        let min_ah = c_smooth.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_ah = c_smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        CondScale { min_ah, max_ah }
    }

    pub fn rescale(&self, c_ah: f64) -> f64 {
        if self.max_ah == self.min_ah {
            0.0
        } else {
            2.0 * (c_ah - self.min_ah) / (self.max_ah - self.min_ah) - 1.0
        }
    }

    /// True when `c_ah` lies outside the fitted range stretched by 10% of its
    /// width on both ends; generation there is extrapolation.
    pub fn is_extrapolation(&self, c_ah: f64) -> bool {
        let width = self.max_ah - self.min_ah;
        c_ah < self.min_ah - 0.1 * width || c_ah > self.max_ah + 0.1 * width
    }
}

/// Generator weights: two stacked LSTM layers over `d + 1` inputs, then a
/// per-step dense head emitting the three channels through `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub lstm1: LstmParams,
    pub lstm2: LstmParams,
    pub head: DenseParams,
}

/// Discriminator weights: two stacked LSTM layers over the three channels,
/// then a dense single-logit head on the final hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub lstm1: LstmParams,
    pub lstm2: LstmParams,
    pub head: DenseParams,
}

macro_rules! net_params_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn n_params(&self) -> usize {
                self.lstm1.n_params() + self.lstm2.n_params() + self.head.n_params()
            }

            /// Packing order: lstm1, lstm2, head.
            pub fn write_flat(&self, out: &mut Vec<f64>) {
                self.lstm1.write_flat(out);
                self.lstm2.write_flat(out);
                self.head.write_flat(out);
            }

            pub fn read_flat(&mut self, src: &mut &[f64]) {
                self.lstm1.read_flat(src);
                self.lstm2.read_flat(src);
                self.head.read_flat(src);
            }

            pub fn flat(&self) -> Vec<f64> {
                let mut out = Vec::with_capacity(self.n_params());
                self.write_flat(&mut out);
                out
            }

            pub fn all_finite(&self) -> bool {
                self.flat().iter().all(|v| v.is_finite())
            }
        }
    };
}
net_params_impl!(GeneratorParams);
net_params_impl!(DiscriminatorParams);

impl GeneratorParams {
    pub fn zeros(spec: &GanSpec) -> Self {
        GeneratorParams {
            lstm1: LstmParams::zeros(spec.noise_dim + 1, spec.g_hidden),
            lstm2: LstmParams::zeros(spec.g_hidden, spec.g_hidden),
            head: DenseParams::zeros(spec.g_hidden, CHANNELS),
        }
    }

    pub fn init(spec: &GanSpec, rng: &mut impl Rng) -> Self {
        GeneratorParams {
            lstm1: LstmParams::init(spec.noise_dim + 1, spec.g_hidden, rng),
            lstm2: LstmParams::init(spec.g_hidden, spec.g_hidden, rng),
            head: DenseParams::init(spec.g_hidden, CHANNELS, rng),
        }
    }

    /// Batched forward over pre-assembled inputs `(s, l, d+1)`.
    pub(crate) fn forward_batch(&self, inputs: &Array3<f64>) -> GenForward {
        let (batch, steps, _) = inputs.dim();
        let (h1, cache1) = self.lstm1.forward(inputs);
        let (h2, cache2) = self.lstm2.forward(&h1);
        let h2_rows = h2
            .to_shape((batch * steps, self.lstm2.hidden()))
            .expect("contiguous hidden sequence")
            .to_owned();
        let y_rows = self.head.forward(&h2_rows.view()).mapv(f64::tanh);
        let y = y_rows
            .to_shape((batch, steps, CHANNELS))
            .expect("profile shape")
            .to_owned();
        GenForward {
            cache1,
            cache2,
            h2_rows,
            y,
        }
    }

    /// Backward for a scalar loss with upstream gradient `dy` on the tanh
    /// outputs `(s, l, 3)`.
    pub(crate) fn backward_batch(&self, fwd: &GenForward, dy: &Array3<f64>) -> GeneratorParams {
        let (batch, steps, _) = dy.dim();
        // Through the output tanh.
        let dpre = &dy.to_shape((batch * steps, CHANNELS)).expect("dy shape").to_owned()
            * &(1.0 - &fwd.y_rows_sq());
        let (d_head, dh2_rows) = self.head.backward(&fwd.h2_rows.view(), &dpre.view());
        let dh2 = dh2_rows
            .to_shape((batch, steps, self.lstm2.hidden()))
            .expect("hidden grad shape")
            .to_owned();
        let (d_lstm2, dh1) = self.lstm2.backward(&fwd.cache2, &dh2);
        let (d_lstm1, _dx) = self.lstm1.backward(&fwd.cache1, &dh1);
        GeneratorParams {
            lstm1: d_lstm1,
            lstm2: d_lstm2,
            head: d_head,
        }
    }
}

pub(crate) struct GenForward {
    cache1: crate::nn::lstm::LstmCache,
    cache2: crate::nn::lstm::LstmCache,
    h2_rows: Array2<f64>,
    /// Generated profiles `(s, l, 3)`.
    pub y: Array3<f64>,
}

impl GenForward {
    fn y_rows_sq(&self) -> Array2<f64> {
        let (batch, steps, _) = self.y.dim();
        let rows = self
            .y
            .to_shape((batch * steps, CHANNELS))
            .expect("profile rows")
            .to_owned();
        &rows * &rows
    }
}

impl DiscriminatorParams {
    pub fn zeros(spec: &GanSpec) -> Self {
        DiscriminatorParams {
            lstm1: LstmParams::zeros(CHANNELS, spec.d_hidden),
            lstm2: LstmParams::zeros(spec.d_hidden, spec.d_hidden),
            head: DenseParams::zeros(spec.d_hidden, 1),
        }
    }

    pub fn init(spec: &GanSpec, rng: &mut impl Rng) -> Self {
        DiscriminatorParams {
            lstm1: LstmParams::init(CHANNELS, spec.d_hidden, rng),
            lstm2: LstmParams::init(spec.d_hidden, spec.d_hidden, rng),
            head: DenseParams::init(spec.d_hidden, 1, rng),
        }
    }

    /// Batched forward over profiles `(s, l, 3)`, yielding one probability
    /// per sample.
    pub(crate) fn forward_batch(&self, x: &Array3<f64>) -> DiscForward {
        let (_, steps, _) = x.dim();
        let (h1, cache1) = self.lstm1.forward(x);
        let (h2, cache2) = self.lstm2.forward(&h1);
        let h_last = h2.slice(s![.., steps - 1, ..]).to_owned();
        let logits = self.head.forward(&h_last.view());
        let probs = logits.column(0).mapv(crate::nn::sigmoid);
        DiscForward {
            cache1,
            cache2,
            h_last,
            probs,
        }
    }

    /// Backward from per-sample probability gradients `dp`; returns parameter
    /// gradients and the gradient w.r.t. the input profiles `(s, l, 3)`.
    pub(crate) fn backward_batch(
        &self,
        fwd: &DiscForward,
        dp: &Array1<f64>,
    ) -> (DiscriminatorParams, Array3<f64>) {
        let batch = fwd.probs.len();
        let steps = fwd.steps();
        // Through the sigmoid.
        let dlogit = Array2::from_shape_fn((batch, 1), |(i, _)| {
            dp[i] * fwd.probs[i] * (1.0 - fwd.probs[i])
        });
        let (d_head, dh_last) = self.head.backward(&fwd.h_last.view(), &dlogit.view());
        // Only the final hidden state feeds the head.
        let mut dh2 = Array3::<f64>::zeros((batch, steps, self.lstm2.hidden()));
        dh2.slice_mut(s![.., steps - 1, ..]).assign(&dh_last);
        let (d_lstm2, dh1) = self.lstm2.backward(&fwd.cache2, &dh2);
        let (d_lstm1, dx) = self.lstm1.backward(&fwd.cache1, &dh1);
        (
            DiscriminatorParams {
                lstm1: d_lstm1,
                lstm2: d_lstm2,
                head: d_head,
            },
            dx,
        )
    }
}

pub(crate) struct DiscForward {
    cache1: crate::nn::lstm::LstmCache,
    cache2: crate::nn::lstm::LstmCache,
    h_last: Array2<f64>,
    /// Per-sample probability of being real.
    pub probs: Array1<f64>,
}

impl DiscForward {
    fn steps(&self) -> usize {
        self.cache2.steps()
    }
}

/// All trainable state of the GAN pair plus the conditioning scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GanParams {
    pub spec: GanSpec,
    pub generator: GeneratorParams,
    pub discriminator: DiscriminatorParams,
    pub cond: CondScale,
}

impl GanParams {
    pub fn zeros(spec: GanSpec) -> Self {
        GanParams {
            generator: GeneratorParams::zeros(&spec),
            discriminator: DiscriminatorParams::zeros(&spec),
            cond: CondScale::identity(),
            spec,
        }
    }

    pub fn init(spec: GanSpec, cond: CondScale, rng: &mut impl Rng) -> Self {
        GanParams {
            generator: GeneratorParams::init(&spec, rng),
            discriminator: DiscriminatorParams::init(&spec, rng),
            cond,
            spec,
        }
    }

    /// Maps noise `(l, d)` plus a conditioning capacity (Ah) to a `(3, l)`
    /// profile with entries in `(-1, 1)`.
    pub fn generator_forward(&self, noise: &Array2<f64>, cond_ah: f64) -> Result<Array2<f64>> {
        let (l, d) = (self.spec.seq_len, self.spec.noise_dim);
        if noise.dim() != (l, d) {
            return Err(Error::InvalidArgument(format!(
                "noise shape {:?} does not match spec ({l}, {d})",
                noise.dim()
            )));
        }
        if !cond_ah.is_finite() || noise.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "generator inputs must be finite".into(),
            ));
        }
        let inputs = self.assemble_gen_inputs(&noise.view().insert_axis(Axis(0)).to_owned(), &[
            self.cond.rescale(cond_ah),
        ]);
        let fwd = self.generator.forward_batch(&inputs);
        // (1, l, 3) -> (3, l)
        let mut out = Array2::zeros((CHANNELS, l));
        for t in 0..l {
            for c in 0..CHANNELS {
                out[[c, t]] = fwd.y[[0, t, c]];
            }
        }
        Ok(out)
    }

    /// Scores a `(3, l)` profile with the discriminator.
    pub fn discriminator_forward(&self, x: &Array2<f64>) -> Result<f64> {
        let l = self.spec.seq_len;
        if x.dim() != (CHANNELS, l) {
            return Err(Error::InvalidArgument(format!(
                "profile shape {:?} does not match spec ({CHANNELS}, {l})",
                x.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "discriminator input must be finite".into(),
            ));
        }
        let batch = stack_profiles(std::slice::from_ref(x))?;
        let fwd = self.discriminator.forward_batch(&batch);
        Ok(fwd.probs[0])
    }

    /// Concatenates the already-rescaled conditioning scalar to every
    /// timestep of each noise matrix: `(s, l, d) + cond -> (s, l, d+1)`.
    pub(crate) fn assemble_gen_inputs(
        &self,
        noise: &Array3<f64>,
        cond_scaled: &[f64],
    ) -> Array3<f64> {
        let (batch, steps, d) = noise.dim();
        debug_assert_eq!(batch, cond_scaled.len());
        let mut inputs = Array3::zeros((batch, steps, d + 1));
        inputs.slice_mut(s![.., .., 0..d]).assign(noise);
        for (i, &c) in cond_scaled.iter().enumerate() {
            inputs.slice_mut(s![i, .., d]).fill(c);
        }
        inputs
    }
}

/// Stacks `(3, l)` profiles into the internal `(s, l, 3)` batch layout.
pub(crate) fn stack_profiles(cycles: &[Array2<f64>]) -> Result<Array3<f64>> {
    if cycles.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let l = cycles[0].ncols();
    let mut out = Array3::zeros((cycles.len(), l, CHANNELS));
    for (i, cycle) in cycles.iter().enumerate() {
        if cycle.dim() != (CHANNELS, l) {
            return Err(Error::InvalidArgument(format!(
                "profile {i} has shape {:?}, expected ({CHANNELS}, {l})",
                cycle.dim()
            )));
        }
        for t in 0..l {
            for c in 0..CHANNELS {
                out[[i, t, c]] = cycle[[c, t]];
            }
        }
    }
    Ok(out)
}

/// Packs preprocessed cycles into the `(k, l, 3)` batch layout.
pub(crate) fn pack_cycles(cycles: &[PreprocessedCycle], seq_len: usize) -> Result<Array3<f64>> {
    let mut out = Array3::zeros((cycles.len(), seq_len, CHANNELS));
    for (i, c) in cycles.iter().enumerate() {
        if c.seq_len() != seq_len {
            return Err(Error::InvalidArgument(format!(
                "cycle {} has length {}, expected {seq_len}",
                c.cycle_index,
                c.seq_len()
            )));
        }
        for t in 0..seq_len {
            out[[i, t, 0]] = c.v_norm[t];
            out[[i, t, 1]] = c.i_norm[t];
            out[[i, t, 2]] = c.t_norm[t];
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn clamp_prob(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps)
}

/// Empirical discriminator objective
/// `V_d = mean[log D(x) + log(1 - D(x_fake))]` with probabilities clamped to
/// `[eps, 1-eps]` before the logarithms. The discriminator ascends this.
pub fn disc_objective(
    params: &GanParams,
    real: &[Array2<f64>],
    fake: &[Array2<f64>],
    eps: f64,
) -> Result<f64> {
    if real.is_empty() || fake.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if real.len() != fake.len() {
        return Err(Error::InvalidArgument(format!(
            "batch sizes differ: {} real vs {} fake",
            real.len(),
            fake.len()
        )));
    }
    let p_real = params.discriminator.forward_batch(&stack_profiles(real)?).probs;
    let p_fake = params.discriminator.forward_batch(&stack_profiles(fake)?).probs;
    Ok(disc_objective_from_probs(&p_real, &p_fake, eps))
}

pub(crate) fn disc_objective_from_probs(p_real: &Array1<f64>, p_fake: &Array1<f64>, eps: f64) -> f64 {
    let s = p_real.len() as f64;
    let mut acc = 0.0;
    for (&pr, &pf) in p_real.iter().zip(p_fake.iter()) {
        acc += clamp_prob(pr, eps).ln() + (1.0 - clamp_prob(pf, eps)).ln();
    }
    acc / s
}

/// Empirical generator objective `V_g = mean[log(1 - D(G(z|c)))]`, clamped as
/// in [`disc_objective`]. The generator descends this.
pub fn gen_objective(
    params: &GanParams,
    noise: &[Array2<f64>],
    cond_ah: &[f64],
    eps: f64,
) -> Result<f64> {
    if noise.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if noise.len() != cond_ah.len() {
        return Err(Error::InvalidArgument(format!(
            "batch sizes differ: {} noise vs {} conditions",
            noise.len(),
            cond_ah.len()
        )));
    }
    let (l, d) = (params.spec.seq_len, params.spec.noise_dim);
    let mut stacked = Array3::zeros((noise.len(), l, d));
    for (i, z) in noise.iter().enumerate() {
        if z.dim() != (l, d) {
            return Err(Error::InvalidArgument(format!(
                "noise {i} has shape {:?}, expected ({l}, {d})",
                z.dim()
            )));
        }
        stacked.slice_mut(s![i, .., ..]).assign(z);
    }
    let cond_scaled: Vec<f64> = cond_ah.iter().map(|&c| params.cond.rescale(c)).collect();
    let inputs = params.assemble_gen_inputs(&stacked, &cond_scaled);
    let (loss, _) = gen_loss_only(params, &inputs, eps);
    Ok(loss)
}

pub(crate) fn gen_objective_from_probs(p_fake: &Array1<f64>, eps: f64) -> f64 {
    let s = p_fake.len() as f64;
    p_fake
        .iter()
        .map(|&p| (1.0 - clamp_prob(p, eps)).ln())
        .sum::<f64>()
        / s
}

/// Gradient of `mean log D(x)` w.r.t. the probabilities (zero on clamped
/// samples).
pub(crate) fn d_log_p(probs: &Array1<f64>, eps: f64) -> Array1<f64> {
    let s = probs.len() as f64;
    probs.mapv(|p| {
        if p > eps && p < 1.0 - eps {
            1.0 / (s * p)
        } else {
            0.0
        }
    })
}

/// Gradient of `mean log(1 - D(x))` w.r.t. the probabilities.
pub(crate) fn d_log_1mp(probs: &Array1<f64>, eps: f64) -> Array1<f64> {
    let s = probs.len() as f64;
    probs.mapv(|p| {
        if p > eps && p < 1.0 - eps {
            -1.0 / (s * (1.0 - p))
        } else {
            0.0
        }
    })
}

/// `V_d` and its gradient w.r.t. the discriminator parameters, on packed
/// batches. This is the exact quantity the trainer ascends. Also returns the
/// fake-batch probabilities so the caller can evaluate `V_g` for free.
pub(crate) fn disc_loss_and_grads(
    params: &GanParams,
    real: &Array3<f64>,
    fake: &Array3<f64>,
    eps: f64,
) -> (f64, DiscriminatorParams, Array1<f64>) {
    let fwd_real = params.discriminator.forward_batch(real);
    let fwd_fake = params.discriminator.forward_batch(fake);
    let v_d = disc_objective_from_probs(&fwd_real.probs, &fwd_fake.probs, eps);
    let dp_real = d_log_p(&fwd_real.probs, eps);
    let dp_fake = d_log_1mp(&fwd_fake.probs, eps);
    let (mut grads, _) = params.discriminator.backward_batch(&fwd_real, &dp_real);
    let (grads_fake, _) = params.discriminator.backward_batch(&fwd_fake, &dp_fake);
    add_flat(&mut grads, &grads_fake);
    let p_fake = fwd_fake.probs;
    (v_d, grads, p_fake)
}

fn add_flat(acc: &mut DiscriminatorParams, other: &DiscriminatorParams) {
    let mut a = acc.flat();
    for (x, y) in a.iter_mut().zip(other.flat()) {
        *x += y;
    }
    acc.read_flat(&mut a.as_slice());
}

/// `V_g` alone (forward only), on pre-assembled generator inputs.
pub(crate) fn gen_loss_only(params: &GanParams, gen_inputs: &Array3<f64>, eps: f64) -> (f64, Array1<f64>) {
    let g_fwd = params.generator.forward_batch(gen_inputs);
    let d_fwd = params.discriminator.forward_batch(&g_fwd.y);
    (gen_objective_from_probs(&d_fwd.probs, eps), d_fwd.probs)
}

/// `V_g` and its gradient w.r.t. the generator parameters: backprop through
/// the discriminator into its input profiles, then through the generator.
/// This is the exact quantity the trainer descends. Also returns the fake
/// probabilities for loss bookkeeping.
pub(crate) fn gen_loss_and_grads(
    params: &GanParams,
    gen_inputs: &Array3<f64>,
    eps: f64,
) -> (f64, GeneratorParams, Array1<f64>) {
    let g_fwd = params.generator.forward_batch(gen_inputs);
    let d_fwd = params.discriminator.forward_batch(&g_fwd.y);
    let v_g = gen_objective_from_probs(&d_fwd.probs, eps);
    let dp = d_log_1mp(&d_fwd.probs, eps);
    let (_d_grads, dx) = params.discriminator.backward_batch(&d_fwd, &dp);
    let g_grads = params.generator.backward_batch(&g_fwd, &dx);
    let p_fake = d_fwd.probs;
    (v_g, g_grads, p_fake)
}

/// Draws an `(s, l, d)` standard-normal noise block in a fixed element order.
pub(crate) fn sample_noise(rng: &mut impl Rng, batch: usize, steps: usize, dim: usize) -> Array3<f64> {
    Array3::from_shape_simple_fn((batch, steps, dim), || rng.sample(StandardNormal))
}

/// Draws one whole-cycle noise matrix `(l, d)`, standard normal per entry.
pub fn draw_noise_matrix(rng: &mut impl Rng, steps: usize, dim: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((steps, dim), || rng.sample(StandardNormal))
}

/// Mean discriminator output over a set of preprocessed cycles; used for the
/// equilibrium check on held-out real data.
pub fn mean_disc_output(params: &GanParams, cycles: &[PreprocessedCycle]) -> Result<f64> {
    if cycles.is_empty() {
        return Err(Error::InvalidArgument("empty cycle set".into()));
    }
    let batch = pack_cycles(cycles, params.spec.seq_len)?;
    let fwd = params.discriminator.forward_batch(&batch);
    Ok(fwd.probs.mean().unwrap_or(f64::NAN))
}
