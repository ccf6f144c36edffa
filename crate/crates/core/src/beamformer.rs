//! LDA-beamformer source reconstruction.
//!
//! Finds the channel weighting `w` minimizing projected variance
//! `w' Sigma w` under the unit-gain constraint `w' p = 1`, where `p` is the
//! target-minus-standard difference pattern at a candidate latency. The
//! closed form is `w = Sigma^-1 p / (p' Sigma^-1 p)`. Scanning the candidate
//! latency over a search interval and keeping the minimizer of the objective
//! yields both the spatial filter and the optimal component latency.
//!
//! The covariance is the pooled, non-centered second moment of target and
//! standard epochs. After a common average reference it is rank-deficient by
//! one, so a trace-scaled ridge is always added before factorization.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Epoch, EpochSet};

/// Ridge weight: `Sigma += RIDGE_LAMBDA * trace(Sigma)/C * I`.
pub const RIDGE_LAMBDA: f64 = 1e-6;

/// Default latency search interval, milliseconds post-stimulus.
pub const DEFAULT_SEARCH_MS: (f64, f64) = (400.0, 600.0);

/// Weights and objective from a single constrained solve.
#[derive(Debug, Clone)]
pub struct SolvedFilter {
    pub weights: DVector<f64>,
    /// Projected variance `w' Sigma w` at the solution.
    pub objective: f64,
}

/// A fitted spatial filter with the latency that minimized the objective.
#[derive(Debug, Clone)]
pub struct SpatialFilter {
    pub weights: DVector<f64>,
    /// Difference pattern the filter was fitted against.
    pub pattern: DVector<f64>,
    /// Pooled (ridge-regularized) covariance used in the solve.
    pub sigma: DMatrix<f64>,
    pub t_optimal_ms: f64,
    pub objective: f64,
}

/// One projected (single-channel) time series.
#[derive(Debug, Clone)]
pub struct SourceSignal {
    pub values: Vec<f64>,
    pub rate_hz: f64,
    pub label: String,
}

/// Pooled second-moment matrix of two epoch groups, ridge-regularized.
pub fn pooled_covariance(targets: &[&Epoch], standards: &[&Epoch]) -> Result<DMatrix<f64>> {
    if targets.is_empty() {
        return Err(Error::EmptyGroup("target"));
    }
    if standards.is_empty() {
        return Err(Error::EmptyGroup("standard"));
    }
    let c = targets[0].n_channels();
    let mut sigma = DMatrix::zeros(c, c);
    for group in [targets, standards] {
        let mut acc = DMatrix::zeros(c, c);
        for e in group {
            if e.n_channels() != c {
                return Err(Error::ShapeMismatch(format!(
                    "epoch has {} channels, expected {c}",
                    e.n_channels()
                )));
            }
            acc.gemm(1.0, &e.data, &e.data.transpose(), 1.0);
        }
        sigma += acc / group.len() as f64;
    }
    // enforce exact symmetry before factorization
    sigma = (&sigma + sigma.transpose()) * 0.5;
    let ridge = RIDGE_LAMBDA * sigma.trace() / c as f64;
    for i in 0..c {
        sigma[(i, i)] += ridge;
    }
    Ok(sigma)
}

/// Mean target column minus mean standard column at one time sample.
pub fn difference_pattern(
    targets: &[&Epoch],
    standards: &[&Epoch],
    sample: usize,
) -> Result<DVector<f64>> {
    if targets.is_empty() {
        return Err(Error::EmptyGroup("target"));
    }
    if standards.is_empty() {
        return Err(Error::EmptyGroup("standard"));
    }
    let len = targets[0].n_samples();
    if sample >= len {
        return Err(Error::TimeOutOfEpoch {
            t_ms: sample as f64,
            len,
        });
    }
    let c = targets[0].n_channels();
    let mean = |group: &[&Epoch]| {
        let mut acc = DVector::zeros(c);
        for e in group {
            acc += e.data.column(sample);
        }
        acc / group.len() as f64
    };
    Ok(mean(targets) - mean(standards))
}

fn pattern_scale(sigma: &DMatrix<f64>) -> f64 {
    (sigma.trace() / sigma.nrows() as f64).abs().sqrt()
}

fn solve_with(
    chol: &Cholesky<f64, nalgebra::Dyn>,
    sigma: &DMatrix<f64>,
    pattern: &DVector<f64>,
) -> Result<SolvedFilter> {
    let norm = pattern.norm();
    if norm <= 1e-9 * pattern_scale(sigma).max(f64::MIN_POSITIVE) {
        return Err(Error::DegeneratePattern { norm });
    }
    let x = chol.solve(pattern);
    let denom = pattern.dot(&x);
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::SingularCovariance);
    }
    let weights = x / denom;
    let objective = (sigma * &weights).dot(&weights);
    Ok(SolvedFilter { weights, objective })
}

/// Closed-form constrained solve: `w = Sigma^-1 p / (p' Sigma^-1 p)`.
pub fn solve_filter(sigma: &DMatrix<f64>, pattern: &DVector<f64>) -> Result<SolvedFilter> {
    if sigma.nrows() != sigma.ncols() || sigma.nrows() != pattern.len() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} covariance vs pattern of length {}",
            sigma.nrows(),
            sigma.ncols(),
            pattern.len()
        )));
    }
    let chol = Cholesky::new(sigma.clone()).ok_or(Error::SingularCovariance)?;
    solve_with(&chol, sigma, pattern)
}

fn mean_epoch(group: &[&Epoch]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(group[0].n_channels(), group[0].n_samples());
    for e in group {
        acc += &e.data;
    }
    acc / group.len() as f64
}

/// Search every sample of `search_ms` for the latency whose constrained
/// solve has the smallest objective; ties break toward the earliest sample.
pub fn optimal_latency_search(set: &EpochSet, search_ms: (f64, f64)) -> Result<SpatialFilter> {
    let (targets, standards) = set.split_targets_standards();
    optimal_latency_search_groups(&targets, &standards, set.rate_hz, set.window_ms, search_ms)
}

/// [`optimal_latency_search`] on explicit target/standard groups.
pub fn optimal_latency_search_groups(
    targets: &[&Epoch],
    standards: &[&Epoch],
    rate_hz: f64,
    window_ms: (f64, f64),
    search_ms: (f64, f64),
) -> Result<SpatialFilter> {
    if targets.is_empty() {
        return Err(Error::EmptyGroup("target"));
    }
    if standards.is_empty() {
        return Err(Error::EmptyGroup("standard"));
    }
    let n_t = targets[0].n_samples();
    let to_sample = |t_ms: f64| ((t_ms - window_ms.0) / 1000.0 * rate_hz).round() as i64;
    let j_lo = to_sample(search_ms.0);
    let j_hi = to_sample(search_ms.1);
    if j_lo < 0 || j_hi >= n_t as i64 || j_lo > j_hi {
        return Err(Error::TimeOutOfEpoch {
            t_ms: search_ms.0,
            len: n_t,
        });
    }

    let sigma = pooled_covariance(targets, standards)?;
    let chol = Cholesky::new(sigma.clone()).ok_or(Error::SingularCovariance)?;
    let mean_t = mean_epoch(targets);
    let mean_s = mean_epoch(standards);

    let mut best: Option<(usize, SolvedFilter, DVector<f64>)> = None;
    let mut worst_norm = 0.0f64;
    for j in j_lo as usize..=j_hi as usize {
        let pattern = DVector::from_iterator(
            mean_t.nrows(),
            mean_t
                .column(j)
                .iter()
                .zip(mean_s.column(j).iter())
                .map(|(a, b)| a - b),
        );
        match solve_with(&chol, &sigma, &pattern) {
            Ok(solved) => {
                let better = match &best {
                    Some((_, b, _)) => solved.objective < b.objective,
                    None => true,
                };
                if better {
                    best = Some((j, solved, pattern));
                }
            }
            Err(Error::DegeneratePattern { norm }) => worst_norm = worst_norm.max(norm),
            Err(e) => return Err(e),
        }
    }

    let (j, solved, pattern) = best.ok_or(Error::DegeneratePattern { norm: worst_norm })?;
    Ok(SpatialFilter {
        weights: solved.weights,
        pattern,
        sigma,
        t_optimal_ms: window_ms.0 + j as f64 * 1000.0 / rate_hz,
        objective: solved.objective,
    })
}

/// Project one epoch onto the filter weights: `values[t] = sum_c w[c] X[c][t]`.
pub fn project(epoch: &Epoch, weights: &DVector<f64>, rate_hz: f64) -> Result<SourceSignal> {
    if epoch.n_channels() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "epoch has {} channels, filter has {}",
            epoch.n_channels(),
            weights.len()
        )));
    }
    let row = weights.transpose() * &epoch.data;
    Ok(SourceSignal {
        values: row.iter().copied().collect(),
        rate_hz,
        label: epoch.label.clone(),
    })
}

/// The on-disk form of a fitted filter; enough to score without refitting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedFilter {
    pub weights: Vec<f64>,
    pub pattern: Vec<f64>,
    pub t_optimal_ms: f64,
    pub objective: f64,
    pub channel_names: Vec<String>,
}

impl SpatialFilter {
    pub fn to_saved(&self, channel_names: &[String]) -> SavedFilter {
        SavedFilter {
            weights: self.weights.iter().copied().collect(),
            pattern: self.pattern.iter().copied().collect(),
            t_optimal_ms: self.t_optimal_ms,
            objective: self.objective,
            channel_names: channel_names.to_vec(),
        }
    }
}

impl SavedFilter {
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn weights_vector(&self) -> DVector<f64> {
        DVector::from_vec(self.weights.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::labels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn epoch(data: DMatrix<f64>, label: &str) -> Epoch {
        Epoch {
            data,
            label: label.into(),
            onset_offset_ms: 0.0,
        }
    }

    #[test]
    fn single_term_covariance_is_outer_product_plus_ridge() {
        let x = epoch(DMatrix::identity(2, 2), "DCGAN");
        let k = epoch(DMatrix::zeros(2, 2), labels::STANDARD);
        let sigma = pooled_covariance(&[&x], &[&k]).unwrap();
        let ridge = RIDGE_LAMBDA * 2.0 / 2.0;
        assert!((sigma[(0, 0)] - (1.0 + ridge)).abs() < 1e-15);
        assert!((sigma[(1, 1)] - (1.0 + ridge)).abs() < 1e-15);
        assert_eq!(sigma[(0, 1)], 0.0);
    }

    #[test]
    fn duplicating_epochs_leaves_covariance_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = epoch(DMatrix::from_fn(3, 20, |_, _| rng.random_range(-1.0..1.0)), "A");
        let k = epoch(DMatrix::from_fn(3, 20, |_, _| rng.random_range(-1.0..1.0)), "S");
        let once = pooled_covariance(&[&x], &[&k]).unwrap();
        let twice = pooled_covariance(&[&x, &x], &[&k, &k]).unwrap();
        assert!((&once - &twice).abs().max() < 1e-12);
    }

    #[test]
    fn covariance_matches_naive_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mk = || DMatrix::from_fn(4, 25, |_, _| rng.random_range(-5.0..5.0));
        let xs: Vec<DMatrix<f64>> = (0..6).map(|_| mk()).collect();
        let ks: Vec<DMatrix<f64>> = (0..9).map(|_| mk()).collect();
        let x_ep: Vec<Epoch> = xs.iter().map(|d| epoch(d.clone(), "A")).collect();
        let k_ep: Vec<Epoch> = ks.iter().map(|d| epoch(d.clone(), "S")).collect();
        let sigma = pooled_covariance(
            &x_ep.iter().collect::<Vec<_>>(),
            &k_ep.iter().collect::<Vec<_>>(),
        )
        .unwrap();

        // brute force: explicit element loops
        let mut oracle = vec![[0.0f64; 4]; 4];
        for (group, weight) in [(&xs, 1.0 / 6.0), (&ks, 1.0 / 9.0)] {
            for m in group.iter() {
                for a in 0..4 {
                    for b in 0..4 {
                        let mut s = 0.0;
                        for t in 0..25 {
                            s += m[(a, t)] * m[(b, t)];
                        }
                        oracle[a][b] += weight * s;
                    }
                }
            }
        }
        let trace: f64 = (0..4).map(|i| oracle[i][i]).sum();
        let ridge = RIDGE_LAMBDA * trace / 4.0;
        for a in 0..4 {
            for b in 0..4 {
                let want = oracle[a][b] + if a == b { ridge } else { 0.0 };
                assert!(
                    (sigma[(a, b)] - want).abs() < 1e-10,
                    "({a},{b}): {} vs {}",
                    sigma[(a, b)],
                    want
                );
            }
        }
        // symmetry
        assert!((&sigma - sigma.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn identical_groups_give_zero_pattern() {
        let x = epoch(DMatrix::from_element(3, 5, 2.5), "A");
        let k = epoch(DMatrix::from_element(3, 5, 2.5), "S");
        let p = difference_pattern(&[&x], &[&k], 2).unwrap();
        assert!(p.norm() == 0.0);
    }

    #[test]
    fn constant_shift_appears_in_pattern() {
        let base = DMatrix::from_fn(3, 5, |c, t| (c + t) as f64);
        let mut shifted = base.clone();
        for (i, d) in [1.0, -2.0, 0.5].iter().enumerate() {
            shifted[(i, 3)] += d;
        }
        let x = epoch(shifted, "A");
        let k = epoch(base, "S");
        let p = difference_pattern(&[&x], &[&k], 3).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert!((p[1] + 2.0).abs() < 1e-12);
        assert!((p[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pattern_matches_direct_column_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let xs: Vec<Epoch> = (0..4)
            .map(|_| epoch(DMatrix::from_fn(3, 8, |_, _| rng.random_range(-1.0..1.0)), "A"))
            .collect();
        let ks: Vec<Epoch> = (0..7)
            .map(|_| epoch(DMatrix::from_fn(3, 8, |_, _| rng.random_range(-1.0..1.0)), "S"))
            .collect();
        let p = difference_pattern(
            &xs.iter().collect::<Vec<_>>(),
            &ks.iter().collect::<Vec<_>>(),
            5,
        )
        .unwrap();
        for c in 0..3 {
            let mt: f64 = xs.iter().map(|e| e.data[(c, 5)]).sum::<f64>() / 4.0;
            let ms: f64 = ks.iter().map(|e| e.data[(c, 5)]).sum::<f64>() / 7.0;
            assert!((p[c] - (mt - ms)).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_covariance_returns_pattern_itself() {
        let sigma = DMatrix::identity(2, 2);
        let p = DVector::from_vec(vec![1.0, 0.0]);
        let f = solve_filter(&sigma, &p).unwrap();
        assert!((f.weights[0] - 1.0).abs() < 1e-12);
        assert!(f.weights[1].abs() < 1e-12);
        assert!((f.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_covariance_hand_case() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let p = DVector::from_vec(vec![1.0, 1.0]);
        let f = solve_filter(&sigma, &p).unwrap();
        assert!((f.weights[0] - 0.8).abs() < 1e-12);
        assert!((f.weights[1] - 0.2).abs() < 1e-12);
        assert!((f.objective - 0.8).abs() < 1e-12);
        assert!((f.weights.dot(&p) - 1.0).abs() <= 1e-8);
    }

    fn random_spd(c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(c, c, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(c, c) * 0.1
    }

    #[test]
    fn no_random_constraint_satisfying_perturbation_beats_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c = rng.random_range(2..8);
            let sigma = random_spd(c, &mut rng);
            let p = DVector::from_fn(c, |_, _| rng.random_range(-1.0..1.0f64));
            if p.norm() < 1e-3 {
                continue;
            }
            let f = solve_filter(&sigma, &p).unwrap();
            assert!((f.weights.dot(&p) - 1.0).abs() <= 1e-8);
            for _ in 0..1000 {
                let delta = DVector::from_fn(c, |_, _| rng.random_range(-0.5..0.5f64));
                // projection keeps w'p = 1 exactly up to rounding
                let w2 = &f.weights + &delta - &f.weights * delta.dot(&p);
                let obj2 = (&sigma * &w2).dot(&w2);
                assert!(
                    obj2 >= f.objective - 1e-9,
                    "perturbation beat the solve: {obj2} < {}",
                    f.objective
                );
            }
        }
    }

    #[test]
    fn degenerate_pattern_is_rejected() {
        let sigma = DMatrix::identity(3, 3);
        let p = DVector::from_vec(vec![0.0, 1e-12, 0.0]);
        assert!(matches!(
            solve_filter(&sigma, &p),
            Err(Error::DegeneratePattern { .. })
        ));
    }

    /// Build a tiny set with a pattern injected at exactly one latency.
    fn injected_set(peak_sample: usize) -> EpochSet {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pattern = [1.0, 2.0, -0.5, 0.3];
        let mut epochs = Vec::new();
        for i in 0..30 {
            let target = i < 10;
            let data = DMatrix::from_fn(4, 250, |c, t| {
                let noise: f64 = rng.random_range(-0.05..0.05);
                if target && t == peak_sample {
                    pattern[c] + noise
                } else {
                    noise
                }
            });
            epochs.push(epoch(data, if target { "A" } else { labels::STANDARD }));
        }
        EpochSet::new(
            epochs,
            250.0,
            (0..4).map(|c| format!("ch{c}")).collect(),
            (0.0, 1000.0),
        )
        .unwrap()
    }

    #[test]
    fn search_finds_injected_latency() {
        // sample 113 at 250 Hz = 452 ms
        let set = injected_set(113);
        let f = optimal_latency_search(&set, DEFAULT_SEARCH_MS).unwrap();
        assert!(
            (f.t_optimal_ms - 452.0).abs() <= 4.0 + 1e-9,
            "found {} ms",
            f.t_optimal_ms
        );
        assert!((f.weights.dot(&f.pattern) - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn search_on_identical_groups_degenerates() {
        let data = DMatrix::from_element(3, 250, 1.0);
        let epochs = vec![
            epoch(data.clone(), "A"),
            epoch(data.clone(), labels::STANDARD),
        ];
        let set = EpochSet::new(
            epochs,
            250.0,
            vec!["a".into(), "b".into(), "c".into()],
            (0.0, 1000.0),
        )
        .unwrap();
        assert!(matches!(
            optimal_latency_search(&set, DEFAULT_SEARCH_MS),
            Err(Error::DegeneratePattern { .. })
        ));
    }

    #[test]
    fn search_objective_equals_exhaustive_minimum() {
        let set = injected_set(120);
        let f = optimal_latency_search(&set, DEFAULT_SEARCH_MS).unwrap();
        let (targets, standards) = set.split_targets_standards();
        let sigma = pooled_covariance(&targets, &standards).unwrap();
        let mut best = f64::INFINITY;
        for j in 100..=150 {
            let p = difference_pattern(&targets, &standards, j).unwrap();
            if let Ok(s) = solve_filter(&sigma, &p) {
                best = best.min(s.objective);
            }
        }
        assert!(
            (f.objective - best).abs() <= 1e-12 * best.abs().max(1.0),
            "{} vs {}",
            f.objective,
            best
        );
    }

    #[test]
    fn projection_selects_and_sums_channels() {
        let data = DMatrix::from_fn(2, 5, |c, t| if c == 0 { t as f64 } else { 10.0 });
        let e = epoch(data, "A");
        let s = project(&e, &DVector::from_vec(vec![1.0, 0.0]), 250.0).unwrap();
        assert_eq!(s.values, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        // CAR'd two-channel data is annihilated by the averaging filter
        let car = DMatrix::from_fn(2, 5, |c, t| if c == 0 { t as f64 } else { -(t as f64) });
        let e2 = epoch(car, "A");
        let s2 = project(&e2, &DVector::from_vec(vec![0.5, 0.5]), 250.0).unwrap();
        assert!(s2.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn unit_gain_recovers_noise_free_template() {
        // X = p s(t): the fitted filter must return s exactly
        let p = DVector::from_vec(vec![0.5, 1.5, -1.0]);
        let s: Vec<f64> = (0..250)
            .map(|t| (-((t as f64 - 113.0) / 12.0).powi(2)).exp())
            .collect();
        let target = DMatrix::from_fn(3, 250, |c, t| p[c] * s[t]);
        let epochs = vec![
            epoch(target, "A"),
            epoch(DMatrix::zeros(3, 250), labels::STANDARD),
        ];
        let set = EpochSet::new(
            epochs,
            250.0,
            vec!["a".into(), "b".into(), "c".into()],
            (0.0, 1000.0),
        )
        .unwrap();
        let f = optimal_latency_search(&set, DEFAULT_SEARCH_MS).unwrap();
        let out = project(&set.epochs[0], &f.weights, 250.0).unwrap();
        for (got, want) in out.values.iter().zip(s.iter()) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn scale_equivariance() {
        let set = injected_set(110);
        let f1 = optimal_latency_search(&set, DEFAULT_SEARCH_MS).unwrap();
        let mut scaled = set.clone();
        for e in &mut scaled.epochs {
            e.data *= 3.0;
        }
        let f2 = optimal_latency_search(&scaled, DEFAULT_SEARCH_MS).unwrap();
        assert_eq!(f1.t_optimal_ms, f2.t_optimal_ms);
        // sigma scales by 9, pattern by 3, weights by 1/3
        assert!(((&f2.pattern - &f1.pattern * 3.0).norm()) < 1e-9 * f1.pattern.norm() * 3.0);
        assert!(((&f2.weights - &f1.weights / 3.0).norm()) < 1e-9 * f1.weights.norm());
    }

    #[test]
    fn saved_filter_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let set = injected_set(115);
        let f = optimal_latency_search(&set, DEFAULT_SEARCH_MS).unwrap();
        let names: Vec<String> = (0..4).map(|c| format!("ch{c}")).collect();
        let saved = f.to_saved(&names);
        let path = dir.path().join("filter.json");
        saved.save(&path).unwrap();
        let back = SavedFilter::load(&path).unwrap();
        assert_eq!(back.weights, saved.weights);
        assert_eq!(back.t_optimal_ms, saved.t_optimal_ms);
        assert_eq!(back.channel_names, names);
    }
}
