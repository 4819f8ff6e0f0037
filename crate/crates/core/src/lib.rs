//! Synthetic battery-cycle generation and capacity prediction.
//!
//! The crate implements a full pipeline around a recurrent conditional GAN:
//!
//! 1. [`dataio`] loads canonical cycling CSVs (or synthesizes a deterministic
//!    surrogate battery) and splits train/test by cycle index.
//! 2. [`preprocess`] downsamples each cycle to a fixed length, min-max
//!    standardizes the voltage/current/temperature channels per cycle, and
//!    smooths the capacity series with a moving mean.
//! 3. [`rcgan`] trains an LSTM generator against an LSTM discriminator with
//!    alternating updates (two generator steps per discriminator step); only
//!    the generator sees the smoothed capacity as a conditioning input.
//! 4. [`augment`] synthesizes one new cycle at the midpoint capacity of every
//!    adjacent training pair and merges it into the training set.
//! 5. [`predictor`] fits LSTM/GRU capacity regressors on the original and
//!    augmented sets and scores them with RMSE/MAE.
//! 6. [`evaluate`] projects real vs. synthetic cycles with PCA and t-SNE,
//!    quantifies their overlap with a leave-one-out 1-NN score, and packages
//!    everything into a report directory.
//!
//! Every stage is deterministic given its explicit seed; there is no implicit
//! entropy anywhere in the pipeline.

pub mod augment;
pub mod config;
pub mod dataio;
pub mod error;
pub mod evaluate;
pub mod nn;
pub mod predictor;
pub mod preprocess;
pub mod rcgan;

pub use error::{Error, Result};
