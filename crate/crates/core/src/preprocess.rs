//! Preprocessing chain: common average reference, zero-phase bandpass,
//! decimation, and peak-to-peak artifact rejection.
//!
//! The pipeline order is fixed: CAR -> bandpass -> downsample ->
//! epoch/reject. CAR and bandpass run on continuous data before epoching;
//! set-level variants exist for inputs that arrive already epoched.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dsp::butter_bandpass;
use crate::error::{Error, Result};
use crate::model::{extract_epochs, DroppedEvent, Epoch, EpochSet, Recording};

/// Filter, rate, and rejection settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Passband edges in Hz (low, high).
    pub band_hz: (f64, f64),
    /// Output sampling rate after decimation.
    pub target_rate_hz: f64,
    /// Peak-to-peak rejection threshold in microvolts.
    pub p2p_reject_uv: f64,
    /// Butterworth prototype order (the band transform doubles the poles).
    pub filter_order: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            band_hz: (0.5, 20.0),
            target_rate_hz: 250.0,
            p2p_reject_uv: 100.0,
            filter_order: 4,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        let (low, high) = self.band_hz;
        if !(low > 0.0 && low < high && high < self.target_rate_hz / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < low < high < target_rate/2, got band {low}..{high} Hz at target {} Hz",
                self.target_rate_hz
            )));
        }
        if !(self.p2p_reject_uv > 0.0) {
            return Err(Error::InvalidConfig(
                "peak-to-peak threshold must be positive".into(),
            ));
        }
        if self.filter_order < 2 || self.filter_order % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "filter order must be even and >= 2, got {}",
                self.filter_order
            )));
        }
        Ok(())
    }
}

fn car_matrix(data: &mut DMatrix<f64>) {
    let n_ch = data.nrows();
    for mut col in data.column_iter_mut() {
        let mean = col.iter().sum::<f64>() / n_ch as f64;
        for v in col.iter_mut() {
            *v -= mean;
        }
    }
}

/// Common average reference on a continuous recording.
pub fn car_recording(rec: &Recording) -> Result<Recording> {
    if rec.n_channels() < 2 {
        return Err(Error::SingleChannel);
    }
    let mut out = rec.clone();
    car_matrix(&mut out.data);
    Ok(out)
}

/// Common average reference on every epoch of a set.
pub fn common_average_reference(set: &EpochSet) -> Result<EpochSet> {
    if set.n_channels() < 2 {
        return Err(Error::SingleChannel);
    }
    let mut out = set.clone();
    for e in &mut out.epochs {
        car_matrix(&mut e.data);
    }
    Ok(out)
}

fn bandpass_matrix(data: &mut DMatrix<f64>, cfg: &PreprocessConfig, rate_hz: f64) -> Result<()> {
    let filter = butter_bandpass(cfg.filter_order, cfg.band_hz.0, cfg.band_hz.1, rate_hz)?;
    for c in 0..data.nrows() {
        let row: Vec<f64> = data.row(c).iter().copied().collect();
        let filtered = filter.filtfilt(&row);
        for (t, v) in filtered.into_iter().enumerate() {
            data[(c, t)] = v;
        }
    }
    Ok(())
}

/// Zero-phase bandpass on a continuous recording.
pub fn bandpass_recording(rec: &Recording, cfg: &PreprocessConfig) -> Result<Recording> {
    if rec.rate_hz <= 2.0 * cfg.band_hz.1 {
        return Err(Error::UnstableDesign(format!(
            "input rate {} Hz must exceed twice the high edge {} Hz",
            rec.rate_hz, cfg.band_hz.1
        )));
    }
    let mut out = rec.clone();
    bandpass_matrix(&mut out.data, cfg, rec.rate_hz)?;
    Ok(out)
}

/// Zero-phase bandpass applied per epoch.
pub fn bandpass(set: &EpochSet, cfg: &PreprocessConfig) -> Result<EpochSet> {
    if set.rate_hz <= 2.0 * cfg.band_hz.1 {
        return Err(Error::UnstableDesign(format!(
            "input rate {} Hz must exceed twice the high edge {} Hz",
            set.rate_hz, cfg.band_hz.1
        )));
    }
    let mut out = set.clone();
    for e in &mut out.epochs {
        bandpass_matrix(&mut e.data, cfg, set.rate_hz)?;
    }
    Ok(out)
}

fn decimation_factor(input_hz: f64, target_hz: f64) -> Result<usize> {
    let k = input_hz / target_hz;
    if !(target_hz > 0.0) || (k - k.round()).abs() > 1e-9 || k < 1.0 {
        return Err(Error::NonIntegerFactor {
            input_hz,
            target_hz,
        });
    }
    Ok(k.round() as usize)
}

fn decimate_matrix(data: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n_t = data.ncols().div_ceil(k);
    DMatrix::from_fn(data.nrows(), n_t, |c, t| data[(c, t * k)])
}

/// Keep every k-th sample of a recording; event indices are rescaled to the
/// nearest retained sample.
pub fn downsample_recording(rec: &Recording, target_rate_hz: f64) -> Result<Recording> {
    let k = decimation_factor(rec.rate_hz, target_rate_hz)?;
    if k == 1 {
        return Ok(rec.clone());
    }
    let data = decimate_matrix(&rec.data, k);
    let n = data.ncols();
    let events = rec
        .events
        .iter()
        .map(|e| {
            let mut ev = e.clone();
            ev.sample_index = ((e.sample_index + k / 2) / k).min(n - 1);
            ev
        })
        .collect();
    Recording::new(data, target_rate_hz, rec.channel_names.clone(), events)
}

/// Keep every k-th sample of each epoch.
pub fn downsample(set: &EpochSet, target_rate_hz: f64) -> Result<EpochSet> {
    let k = decimation_factor(set.rate_hz, target_rate_hz)?;
    if k == 1 {
        return Ok(set.clone());
    }
    let epochs = set
        .epochs
        .iter()
        .map(|e| Epoch {
            data: decimate_matrix(&e.data, k),
            label: e.label.clone(),
            onset_offset_ms: e.onset_offset_ms,
        })
        .collect();
    EpochSet::new(
        epochs,
        target_rate_hz,
        set.channel_names.clone(),
        set.window_ms,
    )
}

/// Per-category retained/rejected counts after thresholding.
#[derive(Debug, Clone, Serialize)]
pub struct RejectionReport {
    pub threshold_uv: f64,
    /// (category, retained, rejected), categories in first-appearance order.
    pub per_category: Vec<(String, usize, usize)>,
}

impl RejectionReport {
    pub fn retained_total(&self) -> usize {
        self.per_category.iter().map(|r| r.1).sum()
    }

    pub fn rejected_total(&self) -> usize {
        self.per_category.iter().map(|r| r.2).sum()
    }
}

fn peak_to_peak(e: &Epoch) -> f64 {
    (0..e.n_channels())
        .map(|c| {
            let row = e.data.row(c);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &v in row.iter() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Drop every epoch whose worst-channel peak-to-peak span exceeds the
/// threshold. Also returns the indices of rejected epochs in input order.
pub fn reject_artifacts(
    set: &EpochSet,
    p2p_reject_uv: f64,
) -> Result<(EpochSet, RejectionReport, Vec<usize>)> {
    if !(p2p_reject_uv > 0.0) {
        return Err(Error::InvalidConfig(
            "peak-to-peak threshold must be positive".into(),
        ));
    }
    let mut kept = Vec::new();
    let mut rejected_idx = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for (i, e) in set.epochs.iter().enumerate() {
        let slot = match order.iter().position(|c| c == &e.label) {
            Some(s) => s,
            None => {
                order.push(e.label.clone());
                counts.push((0, 0));
                order.len() - 1
            }
        };
        if peak_to_peak(e) > p2p_reject_uv {
            counts[slot].1 += 1;
            rejected_idx.push(i);
        } else {
            counts[slot].0 += 1;
            kept.push(e.clone());
        }
    }
    let report = RejectionReport {
        threshold_uv: p2p_reject_uv,
        per_category: order
            .into_iter()
            .zip(counts)
            .map(|(c, (k, r))| (c, k, r))
            .collect(),
    };
    if kept.is_empty() && !set.is_empty() {
        return Err(Error::AllRejected {
            total: set.len(),
            threshold_uv: p2p_reject_uv,
        });
    }
    let out = EpochSet::new(
        kept,
        set.rate_hz,
        set.channel_names.clone(),
        set.window_ms,
    )?;
    Ok((out, report, rejected_idx))
}

/// Everything the standard pipeline produces.
#[derive(Debug)]
pub struct PipelineOutput {
    pub epochs: EpochSet,
    pub report: RejectionReport,
    pub dropped_events: Vec<DroppedEvent>,
    pub rejected_indices: Vec<usize>,
}

/// CAR -> bandpass -> downsample -> epoch -> reject, on continuous data.
pub fn run_pipeline(
    rec: &Recording,
    cfg: &PreprocessConfig,
    window_ms: (f64, f64),
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let rec = car_recording(rec)?;
    let rec = bandpass_recording(&rec, cfg)?;
    let rec = downsample_recording(&rec, cfg.target_rate_hz)?;
    let (set, dropped_events) = extract_epochs(&rec, window_ms)?;
    let (epochs, report, rejected_indices) = reject_artifacts(&set, cfg.p2p_reject_uv)?;
    Ok(PipelineOutput {
        epochs,
        report,
        dropped_events,
        rejected_indices,
    })
}

/// The same chain for inputs that are already epoched.
pub fn run_pipeline_epochs(
    set: &EpochSet,
    cfg: &PreprocessConfig,
) -> Result<(EpochSet, RejectionReport, Vec<usize>)> {
    cfg.validate()?;
    let set = common_average_reference(set)?;
    let set = bandpass(&set, cfg)?;
    let set = downsample(&set, cfg.target_rate_hz)?;
    reject_artifacts(&set, cfg.p2p_reject_uv)
}
