//! Domain types for continuous recordings and stimulus-locked epochs.
//!
//! All voltages are microvolts. A [`Recording`] is a channels x samples
//! matrix plus stimulus events; [`extract_epochs`] cuts it into an
//! [`EpochSet`], the container every downstream stage consumes. Types are
//! immutable after construction and safe to share across threads.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Reserved category tags. Labels are open strings; these five are the ones
/// the bundled reference tables use.
pub mod labels {
    pub const DCGAN: &str = "DCGAN";
    pub const BEGAN: &str = "BEGAN";
    pub const PROGAN: &str = "PROGAN";
    pub const RFACE: &str = "RFACE";
    /// Non-target (frequent) stimulus.
    pub const STANDARD: &str = "STANDARD";

    /// The three generative categories, in the order the reference tables use.
    pub const GAN_CATEGORIES: [&str; 3] = [DCGAN, BEGAN, PROGAN];
}

/// Default epoch window relative to stimulus onset, in milliseconds.
pub const DEFAULT_WINDOW_MS: (f64, f64) = (0.0, 1000.0);

/// A stimulus onset within a continuous recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventMarker {
    /// Sample offset of the stimulus onset into the recording.
    pub sample_index: usize,
    /// Category tag (`STANDARD` or a target category).
    pub label: String,
}

/// Continuous multichannel recording (channels x samples, microvolts).
#[derive(Debug, Clone)]
pub struct Recording {
    pub data: DMatrix<f64>,
    pub rate_hz: f64,
    pub channel_names: Vec<String>,
    pub events: Vec<EventMarker>,
}

impl Recording {
    pub fn new(
        data: DMatrix<f64>,
        rate_hz: f64,
        channel_names: Vec<String>,
        events: Vec<EventMarker>,
    ) -> Result<Self> {
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sampling rate must be positive, got {rate_hz}"
            )));
        }
        if data.nrows() != channel_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} data rows vs {} channel names",
                data.nrows(),
                channel_names.len()
            )));
        }
        let n = data.ncols();
        if let Some(ev) = events.iter().find(|ev| ev.sample_index >= n) {
            return Err(Error::ShapeMismatch(format!(
                "event at sample {} outside recording of {} samples",
                ev.sample_index, n
            )));
        }
        Ok(Self {
            data,
            rate_hz,
            channel_names,
            events,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }
}

/// One stimulus-locked epoch (channels x time, microvolts).
#[derive(Debug, Clone)]
pub struct Epoch {
    pub data: DMatrix<f64>,
    pub label: String,
    /// Epoch start relative to stimulus onset, in milliseconds.
    pub onset_offset_ms: f64,
}

impl Epoch {
    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_standard(&self) -> bool {
        self.label == labels::STANDARD
    }
}

/// A labeled collection of epochs sharing rate, channels, and window.
#[derive(Debug, Clone)]
pub struct EpochSet {
    pub epochs: Vec<Epoch>,
    pub rate_hz: f64,
    pub channel_names: Vec<String>,
    /// Window relative to stimulus onset, milliseconds (start, end).
    pub window_ms: (f64, f64),
}

impl EpochSet {
    /// Validates the shared-shape and finiteness invariants.
    pub fn new(
        epochs: Vec<Epoch>,
        rate_hz: f64,
        channel_names: Vec<String>,
        window_ms: (f64, f64),
    ) -> Result<Self> {
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sampling rate must be positive, got {rate_hz}"
            )));
        }
        if window_ms.0 >= window_ms.1 {
            return Err(Error::InvalidSpec(format!(
                "epoch window start {} must precede end {}",
                window_ms.0, window_ms.1
            )));
        }
        let n_ch = channel_names.len();
        let n_t = epochs.first().map(|e| e.n_samples()).unwrap_or(0);
        if !epochs.is_empty() {
            let expected = ((window_ms.1 - window_ms.0) / 1000.0 * rate_hz).round();
            if (n_t as f64 - expected).abs() > 1.0 {
                return Err(Error::ShapeMismatch(format!(
                    "epoch length {n_t} inconsistent with window {window_ms:?} ms at {rate_hz} Hz"
                )));
            }
        }
        for (i, e) in epochs.iter().enumerate() {
            if e.n_channels() != n_ch {
                return Err(Error::ShapeMismatch(format!(
                    "epoch {i} has {} channels, set has {n_ch}",
                    e.n_channels()
                )));
            }
            if e.n_samples() != n_t || n_t == 0 {
                return Err(Error::ShapeMismatch(format!(
                    "epoch {i} has {} samples, set has {n_t}",
                    e.n_samples()
                )));
            }
            if e.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::ShapeMismatch(format!(
                    "epoch {i} contains non-finite values"
                )));
            }
        }
        Ok(Self {
            epochs,
            rate_hz,
            channel_names,
            window_ms,
        })
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.channel_names.len()
    }

    /// Time samples per epoch.
    pub fn n_samples(&self) -> usize {
        self.epochs.first().map(|e| e.n_samples()).unwrap_or(0)
    }

    /// Time of sample `j` relative to stimulus onset, in milliseconds.
    pub fn time_ms(&self, sample: usize) -> f64 {
        self.window_ms.0 + sample as f64 * 1000.0 / self.rate_hz
    }

    /// Nearest sample index for a post-stimulus time, if inside the epoch.
    pub fn sample_at_ms(&self, t_ms: f64) -> Option<usize> {
        let j = ((t_ms - self.window_ms.0) / 1000.0 * self.rate_hz).round();
        if j < 0.0 || j as usize >= self.n_samples() {
            None
        } else {
            Some(j as usize)
        }
    }

    /// Target epochs (everything not labeled `STANDARD`) and standards.
    pub fn split_targets_standards(&self) -> (Vec<&Epoch>, Vec<&Epoch>) {
        self.epochs.iter().partition(|e| !e.is_standard())
    }

    /// Distinct target categories in first-appearance order.
    pub fn categories(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.epochs {
            if !e.is_standard() && !out.iter().any(|c| c == &e.label) {
                out.push(e.label.clone());
            }
        }
        out
    }

    pub fn epochs_with_label(&self, label: &str) -> Vec<&Epoch> {
        self.epochs.iter().filter(|e| e.label == label).collect()
    }
}

/// An event skipped during epoching because its window left the recording.
#[derive(Debug, Clone)]
pub struct DroppedEvent {
    pub event_index: usize,
    pub sample_index: usize,
    pub label: String,
    pub reason: String,
}

/// Cut stimulus-locked epochs out of a continuous recording.
///
/// Epoch sample `k` maps to continuous sample
/// `event.sample_index + round(window.start/1000 * rate) + k`. Events whose
/// window does not fit inside the recording are dropped and reported rather
/// than failing the whole extraction.
pub fn extract_epochs(
    rec: &Recording,
    window_ms: (f64, f64),
) -> Result<(EpochSet, Vec<DroppedEvent>)> {
    extract_epochs_with(rec, window_ms, None)
}

/// [`extract_epochs`] with an optional pre-stimulus baseline window whose
/// per-channel mean is subtracted from each epoch. Off by default.
pub fn extract_epochs_with(
    rec: &Recording,
    window_ms: (f64, f64),
    baseline_ms: Option<(f64, f64)>,
) -> Result<(EpochSet, Vec<DroppedEvent>)> {
    if window_ms.0 >= window_ms.1 {
        return Err(Error::InvalidSpec(format!(
            "epoch window start {} must precede end {}",
            window_ms.0, window_ms.1
        )));
    }
    let offset = (window_ms.0 / 1000.0 * rec.rate_hz).round() as i64;
    let len = ((window_ms.1 - window_ms.0) / 1000.0 * rec.rate_hz).round() as usize;
    if len == 0 {
        return Err(Error::InvalidSpec(
            "epoch window shorter than one sample".into(),
        ));
    }

    let (b_off, b_len) = match baseline_ms {
        Some((b0, b1)) => {
            if b0 >= b1 {
                return Err(Error::InvalidSpec(format!(
                    "baseline window start {b0} must precede end {b1}"
                )));
            }
            (
                (b0 / 1000.0 * rec.rate_hz).round() as i64,
                ((b1 - b0) / 1000.0 * rec.rate_hz).round() as usize,
            )
        }
        None => (0, 0),
    };

    let n = rec.n_samples() as i64;
    let mut epochs = Vec::new();
    let mut dropped = Vec::new();
    for (i, ev) in rec.events.iter().enumerate() {
        let start = ev.sample_index as i64 + offset;
        let b_start = ev.sample_index as i64 + b_off;
        let fits = start >= 0
            && start + len as i64 <= n
            && (b_len == 0 || (b_start >= 0 && b_start + b_len as i64 <= n));
        if !fits {
            dropped.push(DroppedEvent {
                event_index: i,
                sample_index: ev.sample_index,
                label: ev.label.clone(),
                reason: format!(
                    "window [{}, {}] ms out of bounds",
                    window_ms.0, window_ms.1
                ),
            });
            continue;
        }
        let mut data = rec.data.columns(start as usize, len).into_owned();
        if b_len > 0 {
            let base = rec.data.columns(b_start as usize, b_len);
            for c in 0..data.nrows() {
                let m = base.row(c).iter().sum::<f64>() / b_len as f64;
                for v in data.row_mut(c).iter_mut() {
                    *v -= m;
                }
            }
        }
        epochs.push(Epoch {
            data,
            label: ev.label.clone(),
            onset_offset_ms: window_ms.0,
        });
    }

    let set = EpochSet::new(
        epochs,
        rec.rate_hz,
        rec.channel_names.clone(),
        window_ms,
    )?;
    Ok((set, dropped))
}
