//! Score tables, Pearson correlation with exact t tails, within-participant
//! centering and shuffling, behavioral accuracy, and per-channel one-way
//! ANOVA.
//!
//! The shuffle bootstrap follows the repeated-measures recipe: each
//! iteration independently permutes every participant's category alignment
//! between the two tables, recomputes the Pearson p, and the reported value
//! is the fraction of shuffled p below the observed one.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tdist::two_tailed_p;

/// A complete participant x category grid of scalar scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    participants: Vec<String>,
    categories: Vec<String>,
    /// participants x categories
    values: DMatrix<f64>,
}

impl ScoreTable {
    /// Build from `(participant, category, value)` triples; every pair must
    /// appear exactly once and all values must be finite.
    pub fn from_triples(triples: Vec<(String, String, f64)>) -> Result<Self> {
        let mut participants: Vec<String> = Vec::new();
        let mut categories: Vec<String> = Vec::new();
        for (p, c, _) in &triples {
            if !participants.contains(p) {
                participants.push(p.clone());
            }
            if !categories.contains(c) {
                categories.push(c.clone());
            }
        }
        let (np, nc) = (participants.len(), categories.len());
        if np == 0 || nc == 0 {
            return Err(Error::GridMismatch("empty table".into()));
        }
        let mut values = DMatrix::from_element(np, nc, f64::NAN);
        for (p, c, v) in triples {
            if !v.is_finite() {
                return Err(Error::GridMismatch(format!(
                    "non-finite value for ({p}, {c})"
                )));
            }
            let i = participants.iter().position(|x| *x == p).unwrap();
            let j = categories.iter().position(|x| *x == c).unwrap();
            if !values[(i, j)].is_nan() {
                return Err(Error::GridMismatch(format!("duplicate entry ({p}, {c})")));
            }
            values[(i, j)] = v;
        }
        if let Some((i, j)) = (0..np)
            .flat_map(|i| (0..nc).map(move |j| (i, j)))
            .find(|&(i, j)| values[(i, j)].is_nan())
        {
            return Err(Error::GridMismatch(format!(
                "missing entry ({}, {})",
                participants[i], categories[j]
            )));
        }
        Ok(Self {
            participants,
            categories,
            values,
        })
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn value(&self, participant: usize, category: usize) -> f64 {
        self.values[(participant, category)]
    }

    pub fn triples(&self) -> Vec<(String, String, f64)> {
        let mut out = Vec::with_capacity(self.participants.len() * self.categories.len());
        for (i, p) in self.participants.iter().enumerate() {
            for (j, c) in self.categories.iter().enumerate() {
                out.push((p.clone(), c.clone(), self.values[(i, j)]));
            }
        }
        out
    }

    /// Column means in category order.
    pub fn category_means(&self) -> Vec<(String, f64)> {
        self.categories
            .iter()
            .enumerate()
            .map(|(j, c)| {
                (
                    c.clone(),
                    self.values.column(j).iter().sum::<f64>() / self.participants.len() as f64,
                )
            })
            .collect()
    }

    /// Keep only the named categories, in the order given.
    pub fn restrict(&self, keep: &[&str]) -> Result<ScoreTable> {
        let idx: Vec<usize> = keep
            .iter()
            .map(|k| {
                self.categories
                    .iter()
                    .position(|c| c == k)
                    .ok_or_else(|| Error::GridMismatch(format!("category {k} not in table")))
            })
            .collect::<Result<_>>()?;
        let values = DMatrix::from_fn(self.participants.len(), idx.len(), |i, j| {
            self.values[(i, idx[j])]
        });
        Ok(ScoreTable {
            participants: self.participants.clone(),
            categories: keep.iter().map(|s| s.to_string()).collect(),
            values,
        })
    }
}

/// Subtract each participant's own mean from their row.
pub fn mean_center_within(table: &ScoreTable) -> ScoreTable {
    let mut values = table.values.clone();
    for mut row in values.row_iter_mut() {
        let m = row.iter().sum::<f64>() / row.len() as f64;
        for v in row.iter_mut() {
            *v -= m;
        }
    }
    ScoreTable {
        participants: table.participants.clone(),
        categories: table.categories.clone(),
        values,
    }
}

/// Pearson r with its exact two-tailed p.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p_two_tailed: f64,
    pub n: usize,
    pub df: usize,
}

/// Product-moment correlation; p from `t = r sqrt((n-2)/(1-r^2))` against a
/// t distribution with n-2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} x values vs {} y values",
            n,
            y.len()
        )));
    }
    if n < 3 {
        return Err(Error::TooFewSamples(format!(
            "correlation needs at least 3 pairs, got {n}"
        )));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y.iter()) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy <= 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = n - 2;
    let p = if 1.0 - r * r <= f64::EPSILON {
        0.0
    } else {
        let t = r * (df as f64 / (1.0 - r * r)).sqrt();
        two_tailed_p(t, df as f64)
    };
    Ok(CorrelationResult {
        r,
        p_two_tailed: p,
        n,
        df,
    })
}

fn check_grids(a: &ScoreTable, b: &ScoreTable) -> Result<()> {
    if a.participants != b.participants {
        return Err(Error::GridMismatch(
            "participant sets differ between tables".into(),
        ));
    }
    if a.categories != b.categories {
        return Err(Error::GridMismatch(
            "category sets differ between tables".into(),
        ));
    }
    Ok(())
}

fn flatten(t: &ScoreTable) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.participants.len() * t.categories.len());
    for i in 0..t.participants.len() {
        for j in 0..t.categories.len() {
            out.push(t.values[(i, j)]);
        }
    }
    out
}

/// Pearson correlation between two aligned score tables.
pub fn correlate_tables(a: &ScoreTable, b: &ScoreTable) -> Result<CorrelationResult> {
    check_grids(a, b)?;
    pearson(&flatten(a), &flatten(b))
}

/// Outcome of the within-participant shuffle bootstrap.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    pub observed: CorrelationResult,
    /// Fraction of shuffled iterations with p below the observed p.
    pub p_bootstrapped: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Set when shuffling cannot change the pairing (e.g., a table is
    /// constant within every participant), which makes the estimate
    /// meaningless.
    pub no_variation: bool,
}

/// Within-participant shuffle bootstrap of the Pearson test.
///
/// Each iteration re-pairs every participant's categories at random in one
/// table, recomputes the correlation p over all pairs, and counts how often
/// the shuffled p is smaller than the observed one. Iterations draw from
/// per-iteration ChaCha8 streams of `seed`, so the result is reproducible
/// regardless of scheduling.
pub fn bootstrap_correlation(
    neuro: &ScoreTable,
    behav: &ScoreTable,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    check_grids(neuro, behav)?;
    if iterations == 0 {
        return Err(Error::InvalidConfig("bootstrap needs >= 1 iteration".into()));
    }
    let observed = correlate_tables(neuro, behav)?;

    let np = neuro.participants.len();
    let nc = neuro.categories.len();
    let x = flatten(neuro);
    let mut y = flatten(behav);

    let no_variation = nc < 2
        || (0..np).all(|i| {
            let row: Vec<f64> = (0..nc).map(|j| behav.values[(i, j)]).collect();
            row.iter().all(|v| (v - row[0]).abs() == 0.0)
        });

    let mut below = 0usize;
    let mut perm: Vec<usize> = (0..nc).collect();
    for it in 0..iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(it as u64 + 1);
        for i in 0..np {
            perm.iter_mut().enumerate().for_each(|(j, v)| *v = j);
            perm.shuffle(&mut rng);
            let base = i * nc;
            let orig: Vec<f64> = (0..nc).map(|j| behav.values[(i, j)]).collect();
            for j in 0..nc {
                y[base + j] = orig[perm[j]];
            }
        }
        let shuffled = pearson(&x, &y)?;
        if shuffled.p_two_tailed < observed.p_two_tailed {
            below += 1;
        }
    }

    Ok(BootstrapResult {
        observed,
        p_bootstrapped: below as f64 / iterations as f64,
        iterations,
        seed,
        no_variation,
    })
}

/// Correlation over the three generative categories only. Centering (when
/// asked) happens on the full grid first, then the GAN columns are taken;
/// centering the restricted grid instead shifts r outside the reference
/// tolerance.
pub fn gan_only_correlation(
    neuro: &ScoreTable,
    behav: &ScoreTable,
    center: bool,
) -> Result<CorrelationResult> {
    let (n, b) = if center {
        (mean_center_within(neuro), mean_center_within(behav))
    } else {
        (neuro.clone(), behav.clone())
    };
    let gan = crate::model::labels::GAN_CATEGORIES;
    correlate_tables(&n.restrict(&gan)?, &b.restrict(&gan)?)
}

/// Per-category fraction of correct trials.
pub fn behavioral_accuracy(trials: &[(String, bool)]) -> Result<BTreeMap<String, f64>> {
    if trials.is_empty() {
        return Err(Error::EmptyCategory("<none>".into()));
    }
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (cat, correct) in trials {
        let e = counts.entry(cat.clone()).or_insert((0, 0));
        e.1 += 1;
        if *correct {
            e.0 += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|(c, (k, n))| (c, k as f64 / n as f64))
        .collect())
}

/// One-way ANOVA F statistic over `groups` of observations.
pub fn one_way_f(groups: &[Vec<f64>]) -> Result<f64> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::DegenerateGroups(format!(
            "need >= 2 groups, got {k}"
        )));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::DegenerateGroups(format!(
            "group with {} value(s); every group needs >= 2",
            g.len()
        )));
    }
    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n_total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_within += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let ms_between = ss_between / (k - 1) as f64;
    let ms_within = ss_within / (n_total - k) as f64;
    if ms_within == 0.0 {
        return Ok(if ms_between == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(ms_between / ms_within)
}

/// One F value per channel from per-channel groups of per-trial scalars.
pub fn channel_anova_f(
    per_channel: &[(String, Vec<Vec<f64>>)],
) -> Result<Vec<(String, f64)>> {
    per_channel
        .iter()
        .map(|(name, groups)| Ok((name.clone(), one_way_f(groups)?)))
        .collect()
}
