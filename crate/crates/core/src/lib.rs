//! P300-based scoring of generative image quality from RSVP EEG.
//!
//! The pipeline: preprocess multichannel epochs (common average reference,
//! 0.5-20 Hz zero-phase bandpass, decimation, peak-to-peak rejection), fit a
//! minimum-variance spatial filter against the target/standard difference
//! pattern with a latency search over 400-600 ms, extract single-trial
//! source amplitudes in the 200 ms window around the optimal latency, and
//! average per category. Alongside: conventional distribution metrics
//! (Inception Score, kernel MMD, Frechet distance), the statistics used to
//! compare scores against behavioral accuracy (within-participant centering,
//! Pearson with exact t tails, seeded shuffle bootstrap, per-channel ANOVA),
//! and a forward-model generator with known ground truth.

pub mod beamformer;
pub mod dsp;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod scoring;
pub mod stats;
pub mod synth;
pub mod tdist;

pub use error::{Error, ErrorCategory, Result};
pub use model::{Epoch, EpochSet, EventMarker, Recording};
