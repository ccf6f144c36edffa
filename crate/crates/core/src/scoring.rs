//! End-to-end score computation: pooled covariance, latency search,
//! single-trial amplitude extraction in the 200 ms window around the optimal
//! latency, per-category averaging, and the averaged difference signal.
//!
//! Scores are in beamformed source units: the unit-gain constraint
//! normalizes the pattern scale, so no microvolt claim is attached.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::beamformer::{
    optimal_latency_search_groups, project, SavedFilter, SourceSignal, SpatialFilter,
    DEFAULT_SEARCH_MS,
};
use crate::error::{Error, Result};
use crate::model::{Epoch, EpochSet};
use crate::stats::ScoreTable;

/// Half-width of the amplitude-extraction window around the optimal latency.
pub const P300_HALF_WINDOW_MS: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct ScoringOptions {
    /// Latency search interval, ms post-stimulus.
    pub search_ms: (f64, f64),
    /// Refit the filter per target category instead of pooling all targets.
    pub per_category_filter: bool,
}

impl Default for ScoringOptions {
    fn default() -> Self {
        Self {
            search_ms: DEFAULT_SEARCH_MS,
            per_category_filter: false,
        }
    }
}

/// Per-category scores with the per-trial amplitudes behind them.
#[derive(Debug, Clone)]
pub struct NeuroscoreResult {
    /// Mean reconstructed single-trial amplitude per target category.
    pub per_category: BTreeMap<String, f64>,
    pub per_trial_amplitudes: BTreeMap<String, Vec<f64>>,
    /// Extraction window `[t_optimal - 100, t_optimal + 100]` ms of the
    /// pooled filter (possibly clipped to the epoch, with a warning).
    pub t_p300_ms: (f64, f64),
    /// Filter fitted on all targets pooled against standards.
    pub filter: SpatialFilter,
    /// Present when per-category refitting was requested.
    pub per_category_filters: Option<BTreeMap<String, SpatialFilter>>,
    pub warnings: Vec<String>,
}

/// Maximum of the projected source over an inclusive sample window.
pub fn single_trial_amplitude(
    epoch: &Epoch,
    weights: &DVector<f64>,
    window: (usize, usize),
) -> Result<f64> {
    if epoch.n_channels() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "epoch has {} channels, filter has {}",
            epoch.n_channels(),
            weights.len()
        )));
    }
    if window.0 > window.1 || window.1 >= epoch.n_samples() {
        return Err(Error::ShapeMismatch(format!(
            "window {:?} outside epoch of {} samples",
            window,
            epoch.n_samples()
        )));
    }
    let mut best = f64::NEG_INFINITY;
    for t in window.0..=window.1 {
        let mut v = 0.0;
        for c in 0..weights.len() {
            v += weights[c] * epoch.data[(c, t)];
        }
        best = best.max(v);
    }
    Ok(best)
}

/// Map `t_optimal +- 100 ms` onto epoch samples, clipping at the bounds.
fn extraction_window(
    set: &EpochSet,
    t_optimal_ms: f64,
    warnings: &mut Vec<String>,
) -> ((usize, usize), (f64, f64)) {
    let lo_ms = t_optimal_ms - P300_HALF_WINDOW_MS;
    let hi_ms = t_optimal_ms + P300_HALF_WINDOW_MS;
    let n = set.n_samples() as i64;
    let to_sample = |t: f64| ((t - set.window_ms.0) / 1000.0 * set.rate_hz).round() as i64;
    let mut lo = to_sample(lo_ms);
    let mut hi = to_sample(hi_ms);
    if lo < 0 || hi >= n {
        warnings.push(format!(
            "extraction window [{lo_ms}, {hi_ms}] ms clipped to epoch bounds [{}, {}] ms",
            set.window_ms.0, set.window_ms.1
        ));
        lo = lo.max(0);
        hi = hi.min(n - 1);
    }
    (
        (lo as usize, hi as usize),
        (set.time_ms(lo as usize), set.time_ms(hi as usize)),
    )
}

/// Run the full scoring chain with default options.
pub fn compute_neuroscore(set: &EpochSet) -> Result<NeuroscoreResult> {
    compute_neuroscore_with(set, &ScoringOptions::default())
}

/// Run the full scoring chain: latency search, then per-trial amplitude
/// extraction over target trials, averaged per category.
pub fn compute_neuroscore_with(
    set: &EpochSet,
    options: &ScoringOptions,
) -> Result<NeuroscoreResult> {
    let (targets, standards) = set.split_targets_standards();
    if targets.is_empty() {
        return Err(Error::InsufficientTrials("no target epochs".into()));
    }
    if standards.is_empty() {
        return Err(Error::InsufficientTrials("no standard epochs".into()));
    }

    let mut warnings = Vec::new();
    let filter = optimal_latency_search_groups(
        &targets,
        &standards,
        set.rate_hz,
        set.window_ms,
        options.search_ms,
    )?;
    let (window, t_p300_ms) = extraction_window(set, filter.t_optimal_ms, &mut warnings);

    let mut per_category_filters = if options.per_category_filter {
        Some(BTreeMap::new())
    } else {
        None
    };
    let mut per_trial: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for category in set.categories() {
        let group = set.epochs_with_label(&category);
        if group.is_empty() {
            warnings.push(format!("category {category} has no epochs; omitted"));
            continue;
        }
        let (weights, cat_window) = match &mut per_category_filters {
            Some(map) => {
                let f = optimal_latency_search_groups(
                    &group,
                    &standards,
                    set.rate_hz,
                    set.window_ms,
                    options.search_ms,
                )?;
                let (w, _) = extraction_window(set, f.t_optimal_ms, &mut warnings);
                let weights = f.weights.clone();
                map.insert(category.clone(), f);
                (weights, w)
            }
            None => (filter.weights.clone(), window),
        };
        let amps: Result<Vec<f64>> = group
            .iter()
            .map(|e| single_trial_amplitude(e, &weights, cat_window))
            .collect();
        per_trial.insert(category, amps?);
    }

    let per_category = per_trial
        .iter()
        .map(|(c, amps)| (c.clone(), amps.iter().sum::<f64>() / amps.len() as f64))
        .collect();

    Ok(NeuroscoreResult {
        per_category,
        per_trial_amplitudes: per_trial,
        t_p300_ms,
        filter,
        per_category_filters,
        warnings,
    })
}

/// Re-score a set with a previously fitted filter (no refitting).
pub fn compute_with_saved(set: &EpochSet, saved: &SavedFilter) -> Result<NeuroscoreResult> {
    if saved.channel_names != set.channel_names {
        return Err(Error::ShapeMismatch(
            "saved filter channel names do not match the epoch set".into(),
        ));
    }
    let weights = saved.weights_vector();
    let mut warnings = Vec::new();
    let (window, t_p300_ms) = extraction_window(set, saved.t_optimal_ms, &mut warnings);

    let (targets, standards) = set.split_targets_standards();
    if targets.is_empty() || standards.is_empty() {
        return Err(Error::InsufficientTrials(
            "need at least one target and one standard epoch".into(),
        ));
    }

    let mut per_trial: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for category in set.categories() {
        let amps: Result<Vec<f64>> = set
            .epochs_with_label(&category)
            .iter()
            .map(|e| single_trial_amplitude(e, &weights, window))
            .collect();
        per_trial.insert(category, amps?);
    }
    let per_category = per_trial
        .iter()
        .map(|(c, amps)| (c.clone(), amps.iter().sum::<f64>() / amps.len() as f64))
        .collect();

    // reconstruct enough of the filter for reporting
    let filter = SpatialFilter {
        weights,
        pattern: DVector::from_vec(saved.pattern.clone()),
        sigma: nalgebra::DMatrix::zeros(0, 0),
        t_optimal_ms: saved.t_optimal_ms,
        objective: saved.objective,
    };
    Ok(NeuroscoreResult {
        per_category,
        per_trial_amplitudes: per_trial,
        t_p300_ms,
        filter,
        per_category_filters: None,
        warnings,
    })
}

/// Averaged projected difference per category: mean projected target trial
/// minus mean projected standard trial, one time series per category.
pub fn reconstructed_averaged_signal(
    set: &EpochSet,
    weights: &DVector<f64>,
) -> Result<Vec<SourceSignal>> {
    let (targets, standards) = set.split_targets_standards();
    if targets.is_empty() || standards.is_empty() {
        return Err(Error::InsufficientTrials(
            "need at least one target and one standard epoch".into(),
        ));
    }
    let n_t = set.n_samples();
    let mean_projection = |group: &[&Epoch]| -> Result<Vec<f64>> {
        let mut acc = vec![0.0; n_t];
        for e in group {
            let s = project(e, weights, set.rate_hz)?;
            for (a, v) in acc.iter_mut().zip(s.values.iter()) {
                *a += v;
            }
        }
        Ok(acc.into_iter().map(|v| v / group.len() as f64).collect())
    };
    let standard_mean = mean_projection(&standards)?;

    let mut out = Vec::new();
    for category in set.categories() {
        let group = set.epochs_with_label(&category);
        let target_mean = mean_projection(&group)?;
        let values = target_mean
            .iter()
            .zip(standard_mean.iter())
            .map(|(t, s)| t - s)
            .collect();
        out.push(SourceSignal {
            values,
            rate_hz: set.rate_hz,
            label: category,
        });
    }
    Ok(out)
}

/// Column means and their reciprocals over a participant x category table.
#[derive(Debug, Clone, Serialize)]
pub struct ScoreAggregate {
    pub category_means: Vec<(String, f64)>,
    /// `1 / mean` per category, for comparison with lower-is-better metrics.
    pub reciprocal_means: Vec<(String, f64)>,
}

impl ScoreAggregate {
    pub fn from_table(table: &ScoreTable) -> Self {
        let category_means = table.category_means();
        let reciprocal_means = category_means
            .iter()
            .map(|(c, m)| (c.clone(), 1.0 / m))
            .collect();
        Self {
            category_means,
            reciprocal_means,
        }
    }
}

/// Pool per-participant results into a score table plus aggregate means.
pub fn aggregate_scores(
    per_participant: &[(String, &NeuroscoreResult)],
) -> Result<(ScoreTable, ScoreAggregate)> {
    let mut triples = Vec::new();
    for (participant, result) in per_participant {
        for (category, score) in &result.per_category {
            triples.push((participant.clone(), category.clone(), *score));
        }
    }
    let table = ScoreTable::from_triples(triples)?;
    let aggregate = ScoreAggregate::from_table(&table);
    Ok((table, aggregate))
}

/// Per-channel single-trial window maxima grouped by target category, the
/// raw material for the per-channel ANOVA map.
pub fn per_channel_amplitudes(
    set: &EpochSet,
    window: (usize, usize),
) -> Result<Vec<(String, Vec<Vec<f64>>)>> {
    if window.0 > window.1 || window.1 >= set.n_samples() {
        return Err(Error::ShapeMismatch(format!(
            "window {:?} outside epoch of {} samples",
            window,
            set.n_samples()
        )));
    }
    let categories = set.categories();
    let mut out = Vec::with_capacity(set.n_channels());
    for (c, name) in set.channel_names.iter().enumerate() {
        let mut groups = Vec::with_capacity(categories.len());
        for cat in &categories {
            let values = set
                .epochs_with_label(cat)
                .iter()
                .map(|e| {
                    (window.0..=window.1)
                        .map(|t| e.data[(c, t)])
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            groups.push(values);
        }
        out.push((name.clone(), groups));
    }
    Ok(out)
}
