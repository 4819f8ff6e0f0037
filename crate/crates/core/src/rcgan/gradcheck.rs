//! Finite-difference verification of the training gradients.
//!
//! Checks the exact quantities the trainer uses: the gradient of the
//! discriminator objective w.r.t. the discriminator parameters and the
//! gradient of the generator objective w.r.t. the generator parameters
//! (backpropagated through the frozen discriminator).

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{
    disc_loss_and_grads, disc_objective_from_probs, gen_loss_and_grads, gen_loss_only,
    sample_noise, CondScale, GanParams, GanSpec, PROB_CLAMP_DEFAULT,
};

/// Central-difference step mandated by the check's contract.
const FD_STEP: f64 = 1e-5;
/// Batch size used for the probe batches.
const BATCH: usize = 3;

/// Relative error with an absolute floor: gradients below the floor are in
/// practice compared absolutely at `floor * tolerance`, which keeps the check
/// meaningful while staying above the ~1e-9 cancellation noise of central
/// differences on O(1) losses.
fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Compares analytic gradients of both objectives against central finite
/// differences over every parameter of the respective network and returns
/// the maximum relative error observed.
///
/// Only tiny specs are accepted (`l <= 8`, widths `<= 4`); the sweep is
/// quadratic in parameter count.
pub fn gradient_check(spec: &GanSpec, seed: u64) -> Result<f64> {
    spec.validate()?;
    if spec.seq_len > 8 || spec.g_hidden > 4 || spec.d_hidden > 4 || spec.noise_dim > 4 {
        return Err(Error::InvalidArgument(
            "gradient_check requires a tiny spec (l <= 8, widths <= 4)".into(),
        ));
    }
    let eps = PROB_CLAMP_DEFAULT;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = GanParams::init(*spec, CondScale::identity(), &mut rng);

    let real = Array3::from_shape_simple_fn((BATCH, spec.seq_len, super::CHANNELS), || {
        rng.random_range(-1.0..1.0)
    });
    let noise = sample_noise(&mut rng, BATCH, spec.seq_len, spec.noise_dim);
    let cond: Vec<f64> = (0..BATCH).map(|_| rng.random_range(-1.0..1.0)).collect();
    let gen_inputs = params.assemble_gen_inputs(&noise, &cond);
    // Fakes frozen once; the discriminator check treats them as data.
    let fakes = params.generator.forward_batch(&gen_inputs).y;

    let max_err_d = check_discriminator(&params, &real, &fakes, eps)?;
    let max_err_g = check_generator(&params, &gen_inputs, eps)?;
    Ok(max_err_d.max(max_err_g))
}

fn check_discriminator(
    params: &GanParams,
    real: &Array3<f64>,
    fakes: &Array3<f64>,
    eps: f64,
) -> Result<f64> {
    let (_, grads, _) = disc_loss_and_grads(params, real, fakes, eps);
    let analytic = grads.flat();

    let loss_at = |theta: &[f64]| -> f64 {
        let mut probe = params.clone();
        probe.discriminator.read_flat(&mut &theta[..]);
        let p_real = probe.discriminator.forward_batch(real).probs;
        let p_fake = probe.discriminator.forward_batch(fakes).probs;
        disc_objective_from_probs(&p_real, &p_fake, eps)
    };

    let theta = params.discriminator.flat();
    let mut max_err: f64 = 0.0;
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus[i] += FD_STEP;
        let mut minus = theta.clone();
        minus[i] -= FD_STEP;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * FD_STEP);
        max_err = max_err.max(rel_err(analytic[i], numeric));
    }
    Ok(max_err)
}

fn check_generator(params: &GanParams, gen_inputs: &Array3<f64>, eps: f64) -> Result<f64> {
    let (_, grads, _) = gen_loss_and_grads(params, gen_inputs, eps);
    let analytic = grads.flat();

    let loss_at = |theta: &[f64]| -> f64 {
        let mut probe = params.clone();
        probe.generator.read_flat(&mut &theta[..]);
        gen_loss_only(&probe, gen_inputs, eps).0
    };

    let theta = params.generator.flat();
    let mut max_err: f64 = 0.0;
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        plus[i] += FD_STEP;
        let mut minus = theta.clone();
        minus[i] -= FD_STEP;
        let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * FD_STEP);
        max_err = max_err.max(rel_err(analytic[i], numeric));
    }
    Ok(max_err)
}
