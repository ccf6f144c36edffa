//! Forward-model generator of RSVP-like multichannel EEG with known ground
//! truth: a spatial pattern times a target-locked waveform, on top of mixed
//! pink-noise sources, alpha-band sinusoids, and white sensor noise.
//!
//! Everything is drawn from per-(participant, component) ChaCha8 streams of
//! the spec seed, so identical specs produce bit-identical output.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{extract_epochs, labels, EpochSet, EventMarker, Recording};

/// FWHM-to-sigma conversion for a Gaussian bump.
const FWHM_TO_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Channel names with nominal scalp-region tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelLayout {
    pub names: Vec<String>,
    /// Indices carrying the target-locked pattern.
    pub posterior: Vec<usize>,
    /// Indices receiving injected blink artifacts.
    pub frontal: Vec<usize>,
}

impl ChannelLayout {
    /// The standard 32-electrode 10-20 arrangement.
    pub fn standard_32() -> Self {
        let names: Vec<String> = [
            "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6", "T7",
            "C3", "Cz", "C4", "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3",
            "Pz", "P4", "P8", "PO9", "O1", "Oz", "O2", "PO10",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let idx = |n: &str| names.iter().position(|x| x == n).unwrap();
        Self {
            posterior: [
                "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3", "Pz", "P4", "P8",
                "PO9", "O1", "Oz", "O2", "PO10",
            ]
            .iter()
            .map(|n| idx(n))
            .collect(),
            frontal: ["Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8"]
                .iter()
                .map(|n| idx(n))
                .collect(),
            names,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.names.len()
    }
}

/// Target-locked waveform: a Gaussian bump of unit amplitude.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Template {
    pub peak_ms: f64,
    pub fwhm_ms: f64,
}

impl Default for Template {
    fn default() -> Self {
        Self {
            peak_ms: 450.0,
            fwhm_ms: 150.0,
        }
    }
}

/// Background model: mixed 1/f^alpha sources, alpha-band sinusoid sources,
/// and independent white sensor noise. All sigmas in microvolts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub pink_exponent: f64,
    pub pink_sigma_uv: f64,
    pub n_pink_sources: usize,
    pub alpha_hz: f64,
    pub alpha_sigma_uv: f64,
    pub n_alpha_sources: usize,
    pub white_sigma_uv: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            pink_exponent: 1.0,
            pink_sigma_uv: 6.0,
            n_pink_sources: 6,
            alpha_hz: 10.0,
            alpha_sigma_uv: 2.0,
            n_alpha_sources: 3,
            white_sigma_uv: 1.0,
        }
    }
}

/// Stream structure: per block, `targets_per_category` of each category are
/// shuffled among `standards_per_block` standards at the presentation rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub blocks: usize,
    pub targets_per_category: usize,
    pub standards_per_block: usize,
    pub presentation_hz: f64,
    pub lead_in_s: f64,
    pub gap_s: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            blocks: 2,
            targets_per_category: 6,
            standards_per_block: 216,
            presentation_hz: 4.0,
            lead_in_s: 1.0,
            gap_s: 2.0,
        }
    }
}

/// Full generator parameterization with known ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub layout: ChannelLayout,
    pub rate_hz: f64,
    pub template: Template,
    /// Microvolts per source unit, one weight per channel.
    pub pattern: Vec<f64>,
    /// Target categories and their mean source amplitudes.
    pub category_amplitudes: Vec<(String, f64)>,
    pub noise: NoiseModel,
    pub schedule: Schedule,
    /// Log-normal trial-to-trial amplitude jitter (mean-one), sigma in
    /// log space; 0 disables it.
    pub jitter_sigma: f64,
    pub participants: usize,
    pub seed: u64,
}

impl SynthSpec {
    /// Reference-scale spatial pattern over the standard 32-channel layout.
    fn default_pattern(layout: &ChannelLayout) -> Vec<f64> {
        let mut p = vec![0.0; layout.n_channels()];
        let weights = [
            ("Pz", 3.0),
            ("P3", 2.4),
            ("P4", 2.4),
            ("Oz", 2.0),
            ("O1", 1.5),
            ("O2", 1.5),
            ("CP1", 1.8),
            ("CP2", 1.8),
            ("P7", 1.0),
            ("P8", 1.0),
            ("PO9", 0.8),
            ("PO10", 0.8),
            ("CP5", 0.9),
            ("CP6", 0.9),
            ("TP9", 0.4),
            ("TP10", 0.4),
        ];
        for (name, w) in weights {
            if let Some(i) = layout.names.iter().position(|n| n == name) {
                p[i] = w;
            }
        }
        p
    }

    /// Twelve pseudo-participants with paper-shaped blocks and category
    /// amplitudes at the reference table means.
    pub fn default_cohort(seed: u64) -> Self {
        let layout = ChannelLayout::standard_32();
        let pattern = Self::default_pattern(&layout);
        Self {
            layout,
            rate_hz: 1000.0,
            template: Template::default(),
            pattern,
            category_amplitudes: vec![
                (labels::DCGAN.into(), 0.583),
                (labels::BEGAN.into(), 0.676),
                (labels::PROGAN.into(), 0.837),
                (labels::RFACE.into(), 0.757),
            ],
            noise: NoiseModel::default(),
            schedule: Schedule::default(),
            jitter_sigma: 0.2,
            participants: 12,
            seed,
        }
    }

    /// One participant with enough trials per category for single-run
    /// recovery; used for calibration and end-to-end checks.
    pub fn single_participant(seed: u64) -> Self {
        let mut spec = Self::default_cohort(seed);
        spec.participants = 1;
        spec.schedule = Schedule {
            blocks: 8,
            targets_per_category: 12,
            standards_per_block: 72,
            presentation_hz: 4.0,
            lead_in_s: 1.0,
            gap_s: 2.0,
        };
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.layout.n_channels();
        if c == 0 {
            return Err(Error::InvalidSpec("no channels".into()));
        }
        if self.pattern.len() != c {
            return Err(Error::InvalidSpec(format!(
                "pattern has {} weights for {c} channels",
                self.pattern.len()
            )));
        }
        if !(self.rate_hz > 0.0) {
            return Err(Error::InvalidSpec("sampling rate must be positive".into()));
        }
        if self.category_amplitudes.is_empty() {
            return Err(Error::InvalidSpec("no target categories".into()));
        }
        if self.category_amplitudes.iter().any(|(_, a)| *a < 0.0) {
            return Err(Error::InvalidSpec("amplitudes must be >= 0".into()));
        }
        if self
            .category_amplitudes
            .iter()
            .any(|(c, _)| c == labels::STANDARD)
        {
            return Err(Error::InvalidSpec(
                "STANDARD is reserved for non-targets".into(),
            ));
        }
        if !(self.template.peak_ms > 0.0 && self.template.fwhm_ms > 0.0) {
            return Err(Error::InvalidSpec("template peak and width must be positive".into()));
        }
        let s = &self.schedule;
        if s.blocks == 0 || s.targets_per_category == 0 || !(s.presentation_hz > 0.0) {
            return Err(Error::InvalidSpec("empty schedule".into()));
        }
        if self.jitter_sigma < 0.0 || self.participants == 0 {
            return Err(Error::InvalidSpec("bad jitter or participant count".into()));
        }
        Ok(())
    }
}

/// Per-epoch truth for oracle checks, in generated event order.
#[derive(Debug, Clone, Serialize)]
pub struct GroundTruthRow {
    pub epoch: usize,
    pub label: String,
    /// Realized source amplitude (0 for standards).
    pub true_amplitude: f64,
    pub latency_ms: f64,
    pub contaminated: bool,
}

#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub rows: Vec<GroundTruthRow>,
}

impl GroundTruth {
    pub fn contaminated_indices(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.contaminated)
            .map(|r| r.epoch)
            .collect()
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "label", "true_amplitude", "contaminated"])?;
        for r in &self.rows {
            w.write_record([
                r.epoch.to_string(),
                r.label.clone(),
                format!("{}", r.true_amplitude),
                r.contaminated.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn stream_rng(seed: u64, participant: u64, component: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((participant << 8) | component);
    rng
}

/// Unit-variance 1/f^alpha noise via frequency-domain shaping.
fn pink_noise(n: usize, exponent: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let nfft = n.next_power_of_two().max(16);
    let mut spec = vec![Complex::new(0.0, 0.0); nfft];
    for k in 1..nfft / 2 {
        let mag = (k as f64).powf(-exponent / 2.0);
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        let c = Complex::from_polar(mag, phase);
        spec[k] = c;
        spec[nfft - k] = c.conj();
    }
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    spec[nfft / 2] = Complex::new(sign * ((nfft / 2) as f64).powf(-exponent / 2.0), 0.0);

    FftPlanner::new().plan_fft_inverse(nfft).process(&mut spec);
    let mut out: Vec<f64> = spec[..n].iter().map(|c| c.re).collect();
    let mean = out.iter().sum::<f64>() / n as f64;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let scale = 1.0 / var.sqrt().max(f64::MIN_POSITIVE);
    for v in &mut out {
        *v = (*v - mean) * scale;
    }
    out
}

/// Generate one participant's continuous recording (participant 0 of the
/// spec's seed space).
pub fn generate(spec: &SynthSpec) -> Result<(Recording, GroundTruth)> {
    generate_for_participant(spec, 0)
}

/// Deterministic per-participant generation from the spec seed.
pub fn generate_for_participant(
    spec: &SynthSpec,
    participant: usize,
) -> Result<(Recording, GroundTruth)> {
    spec.validate()?;
    let c = spec.layout.n_channels();
    let rate = spec.rate_hz;
    let sched = &spec.schedule;
    let n_cats = spec.category_amplitudes.len();
    let images_per_block = n_cats * sched.targets_per_category + sched.standards_per_block;
    let block_dur_s = images_per_block as f64 / sched.presentation_hz;
    let total_s = sched.lead_in_s
        + sched.blocks as f64 * (block_dur_s + sched.gap_s)
        + 1.5; // tail so the last epoch window always fits
    let n_samples = (total_s * rate).round() as usize;

    let p = participant as u64;
    let mut data = DMatrix::zeros(c, n_samples);

    // --- background noise ---------------------------------------------------
    let noise = &spec.noise;
    if noise.pink_sigma_uv > 0.0 && noise.n_pink_sources > 0 {
        let mut rng = stream_rng(spec.seed, p, 2);
        let k = noise.n_pink_sources;
        let sources = DMatrix::from_fn(k, n_samples, |_, _| 0.0);
        let mut sources = sources;
        for s in 0..k {
            let row = pink_noise(n_samples, noise.pink_exponent, &mut rng);
            for (t, v) in row.into_iter().enumerate() {
                sources[(s, t)] = v;
            }
        }
        let mut mix_rng = stream_rng(spec.seed, p, 5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut mixing: DMatrix<f64> = DMatrix::from_fn(c, k, |_, _| normal.sample(&mut mix_rng));
        // unit-norm rows: per-channel pink variance equals pink_sigma^2
        for i in 0..c {
            let norm: f64 = mixing.row(i).norm().max(f64::MIN_POSITIVE);
            for j in 0..k {
                mixing[(i, j)] /= norm;
            }
        }
        data.gemm(noise.pink_sigma_uv, &mixing, &sources, 1.0);
    }
    if noise.alpha_sigma_uv > 0.0 && noise.n_alpha_sources > 0 {
        let mut rng = stream_rng(spec.seed, p, 3);
        let k = noise.n_alpha_sources;
        let mut sources = DMatrix::zeros(k, n_samples);
        for s in 0..k {
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            let w = std::f64::consts::TAU * noise.alpha_hz / rate;
            for t in 0..n_samples {
                sources[(s, t)] = (w * t as f64 + phase).sin();
            }
        }
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mixing = DMatrix::from_fn(c, k, |_, _| normal.sample(&mut rng));
        let gain = noise.alpha_sigma_uv * (2.0 / k as f64).sqrt();
        data.gemm(gain, &mixing, &sources, 1.0);
    }
    if noise.white_sigma_uv > 0.0 {
        let mut rng = stream_rng(spec.seed, p, 4);
        let normal = Normal::new(0.0, noise.white_sigma_uv).unwrap();
        for v in data.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    // --- schedule and target-locked signal -----------------------------------
    let mut sched_rng = stream_rng(spec.seed, p, 0);
    let mut jitter_rng = stream_rng(spec.seed, p, 1);
    let jitter_normal = Normal::new(0.0, 1.0).unwrap();

    // template samples over one epoch-length window
    let sigma_ms = spec.template.fwhm_ms / FWHM_TO_SIGMA;
    let support = (4.5 * sigma_ms / 1000.0 * rate).ceil() as i64;
    let peak_samp = (spec.template.peak_ms / 1000.0 * rate).round() as i64;
    let template: Vec<(i64, f64)> = ((peak_samp - support).max(0)..=peak_samp + support)
        .map(|j| {
            let t_ms = j as f64 * 1000.0 / rate;
            let z = (t_ms - spec.template.peak_ms) / sigma_ms;
            (j, (-0.5 * z * z).exp())
        })
        .filter(|(_, g)| *g > 1e-8)
        .collect();

    let mut events = Vec::new();
    let mut truth = GroundTruth::default();
    for b in 0..sched.blocks {
        let block_start_s = sched.lead_in_s + b as f64 * (block_dur_s + sched.gap_s);
        let block_start = (block_start_s * rate).round() as usize;
        let mut sequence: Vec<usize> = Vec::with_capacity(images_per_block);
        for (ci, _) in spec.category_amplitudes.iter().enumerate() {
            sequence.extend(std::iter::repeat_n(ci, sched.targets_per_category));
        }
        sequence.extend(std::iter::repeat_n(usize::MAX, sched.standards_per_block));
        sequence.shuffle(&mut sched_rng);

        for (i, &slot) in sequence.iter().enumerate() {
            let onset = block_start + (i as f64 * rate / sched.presentation_hz).round() as usize;
            let (label, amplitude) = if slot == usize::MAX {
                (labels::STANDARD.to_string(), 0.0)
            } else {
                let (cat, a) = &spec.category_amplitudes[slot];
                let mult = if spec.jitter_sigma > 0.0 {
                    let z: f64 = jitter_normal.sample(&mut jitter_rng);
                    (spec.jitter_sigma * z - 0.5 * spec.jitter_sigma * spec.jitter_sigma).exp()
                } else {
                    1.0
                };
                (cat.clone(), a * mult)
            };
            if amplitude > 0.0 {
                for &(j, g) in &template {
                    let t = onset as i64 + j;
                    if t >= 0 && (t as usize) < n_samples {
                        let bump = amplitude * g;
                        for (ch, &w) in spec.pattern.iter().enumerate() {
                            if w != 0.0 {
                                data[(ch, t as usize)] += bump * w;
                            }
                        }
                    }
                }
            }
            truth.rows.push(GroundTruthRow {
                epoch: events.len(),
                label: label.clone(),
                true_amplitude: amplitude,
                latency_ms: spec.template.peak_ms,
                contaminated: false,
            });
            events.push(EventMarker {
                sample_index: onset,
                label,
            });
        }
    }

    let rec = Recording::new(data, rate, spec.layout.names.clone(), events)?;
    Ok((rec, truth))
}

/// Generate and immediately epoch with the default window.
pub fn generate_epochs(spec: &SynthSpec) -> Result<(EpochSet, GroundTruth)> {
    let (rec, truth) = generate(spec)?;
    let (set, dropped) = extract_epochs(&rec, crate::model::DEFAULT_WINDOW_MS)?;
    debug_assert!(dropped.is_empty(), "generator schedules must fit the window");
    Ok((set, truth))
}

/// Per-participant recordings for a cohort spec; ids are `p01`, `p02`, ...
pub fn generate_cohort(spec: &SynthSpec) -> Result<Vec<(String, Recording, GroundTruth)>> {
    (0..spec.participants)
        .map(|i| {
            let (rec, truth) = generate_for_participant(spec, i)?;
            Ok((format!("p{:02}", i + 1), rec, truth))
        })
        .collect()
}

/// Add blink-shaped low-frequency transients of a given peak-to-peak size to
/// `count` distinct epochs, weighted toward frontal channels. Returns the
/// modified set and the contaminated epoch indices (sorted).
pub fn inject_artifacts(
    set: &EpochSet,
    count: usize,
    magnitude_uv: f64,
    seed: u64,
) -> Result<(EpochSet, Vec<usize>)> {
    if count > set.len() {
        return Err(Error::InvalidSpec(format!(
            "cannot contaminate {count} of {} epochs",
            set.len()
        )));
    }
    if count == 0 {
        return Ok((set.clone(), Vec::new()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..set.len()).collect();
    indices.shuffle(&mut rng);
    let mut chosen: Vec<usize> = indices[..count].to_vec();
    chosen.sort_unstable();

    // frontal weighting by channel name, falling back to the first channels
    let weight_of = |name: &str| -> f64 {
        if name.starts_with("Fp") {
            1.0
        } else if name.starts_with("AF") {
            0.8
        } else if name.starts_with("FC") {
            0.3
        } else if name.starts_with('F') {
            0.55
        } else {
            0.0
        }
    };
    let mut weights: Vec<f64> = set.channel_names.iter().map(|n| weight_of(n)).collect();
    if weights.iter().all(|w| *w == 0.0) {
        for w in weights.iter_mut().take(2) {
            *w = 1.0;
        }
    }

    let n_t = set.n_samples();
    let sigma_samp = 0.06 * set.rate_hz; // ~60 ms blink half-width
    let mut out = set.clone();
    for &i in &chosen {
        let center = rng.random_range((n_t / 5)..(4 * n_t / 5)) as f64;
        let e = &mut out.epochs[i];
        for t in 0..n_t {
            let z = (t as f64 - center) / sigma_samp;
            let bump = magnitude_uv * (-0.5 * z * z).exp();
            if bump > 1e-9 {
                for (ch, &w) in weights.iter().enumerate() {
                    if w > 0.0 {
                        e.data[(ch, t)] += w * bump;
                    }
                }
            }
        }
    }
    Ok((out, chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(seed: u64) -> SynthSpec {
        let mut spec = SynthSpec::default_cohort(seed);
        spec.participants = 1;
        spec.schedule = Schedule {
            blocks: 1,
            targets_per_category: 2,
            standards_per_block: 12,
            presentation_hz: 4.0,
            lead_in_s: 1.0,
            gap_s: 1.0,
        };
        spec
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let spec = tiny_spec(99);
        let (a, ta) = generate(&spec).unwrap();
        let (b, tb) = generate(&spec).unwrap();
        assert_eq!(a.data, b.data);
        assert_eq!(a.events, b.events);
        assert_eq!(ta.rows.len(), tb.rows.len());
        for (x, y) in ta.rows.iter().zip(tb.rows.iter()) {
            assert_eq!(x.true_amplitude, y.true_amplitude);
        }
    }

    #[test]
    fn different_participants_differ() {
        let mut spec = tiny_spec(99);
        spec.participants = 2;
        let cohort = generate_cohort(&spec).unwrap();
        assert_eq!(cohort.len(), 2);
        assert_eq!(cohort[0].0, "p01");
        assert_ne!(cohort[0].1.data, cohort[1].1.data);
    }

    #[test]
    fn noise_free_epoch_is_exact_forward_model() {
        let mut spec = tiny_spec(5);
        spec.noise = NoiseModel {
            pink_sigma_uv: 0.0,
            alpha_sigma_uv: 0.0,
            white_sigma_uv: 0.0,
            ..NoiseModel::default()
        };
        spec.jitter_sigma = 0.0;
        spec.category_amplitudes = vec![("A".into(), 2.0)];
        let (set, truth) = generate_epochs(&spec).unwrap();
        let sigma_ms = spec.template.fwhm_ms / FWHM_TO_SIGMA;
        for (e, row) in set.epochs.iter().zip(truth.rows.iter()) {
            if e.label != "A" {
                continue;
            }
            assert_eq!(row.true_amplitude, 2.0);
            // peak sample value = amplitude * pattern, up to stream overlap
            let peak = set.sample_at_ms(450.0).unwrap();
            for (c, &w) in spec.pattern.iter().enumerate() {
                let got = e.data[(c, peak)];
                // neighbors in the 4 Hz stream can overlap; accept their tail
                let tail: f64 = (-(0.5) * (250.0 / sigma_ms) * (250.0 / sigma_ms)).exp();
                assert!(
                    (got - 2.0 * w).abs() <= 2.0 * w.abs() * tail + 1e-9 + 2.0 * 3.0 * tail,
                    "channel {c}: {got} vs {}",
                    2.0 * w
                );
            }
        }
    }

    #[test]
    fn doubling_amplitude_doubles_noise_free_signal() {
        let mut spec = tiny_spec(6);
        spec.noise = NoiseModel {
            pink_sigma_uv: 0.0,
            alpha_sigma_uv: 0.0,
            white_sigma_uv: 0.0,
            ..NoiseModel::default()
        };
        spec.category_amplitudes = vec![("A".into(), 0.7)];
        let (a, _) = generate(&spec).unwrap();
        let mut spec2 = spec.clone();
        spec2.category_amplitudes = vec![("A".into(), 1.4)];
        let (b, _) = generate(&spec2).unwrap();
        let doubled = &a.data * 2.0;
        assert_eq!(b.data, doubled);
    }

    #[test]
    fn schedule_counts_match_paper_shape() {
        let spec = SynthSpec::default_cohort(1);
        let (rec, _) = generate(&spec).unwrap();
        // 2 blocks x (24 targets + 216 standards)
        assert_eq!(rec.events.len(), 2 * 240);
        let standards = rec
            .events
            .iter()
            .filter(|e| e.label == labels::STANDARD)
            .count();
        assert_eq!(standards, 2 * 216);
        for cat in [labels::DCGAN, labels::BEGAN, labels::PROGAN, labels::RFACE] {
            assert_eq!(rec.events.iter().filter(|e| e.label == cat).count(), 12);
        }
    }

    #[test]
    fn epoching_the_paper_block_yields_full_counts() {
        let mut spec = SynthSpec::default_cohort(3);
        spec.participants = 1;
        spec.schedule.blocks = 1;
        let (set, truth) = generate_epochs(&spec).unwrap();
        assert_eq!(set.len(), 240);
        assert_eq!(truth.rows.len(), 240);
        let standards = set.epochs.iter().filter(|e| e.is_standard()).count();
        assert_eq!(standards, 216);
        assert_eq!(set.len() - standards, 24);
    }

    #[test]
    fn injection_respects_count_and_zero() {
        let spec = tiny_spec(8);
        let (set, _) = generate_epochs(&spec).unwrap();
        let (same, flags) = inject_artifacts(&set, 0, 300.0, 1).unwrap();
        assert!(flags.is_empty());
        assert_eq!(same.epochs[0].data, set.epochs[0].data);
        let (modified, flags) = inject_artifacts(&set, 3, 300.0, 1).unwrap();
        assert_eq!(flags.len(), 3);
        for &i in &flags {
            assert_ne!(modified.epochs[i].data, set.epochs[i].data);
        }
    }

    #[test]
    fn injection_count_bounds_checked() {
        let spec = tiny_spec(8);
        let (set, _) = generate_epochs(&spec).unwrap();
        assert!(inject_artifacts(&set, set.len() + 1, 300.0, 1).is_err());
    }

    #[test]
    fn pink_noise_is_unit_variance_and_low_frequency_heavy() {
        let mut rng = stream_rng(42, 0, 2);
        let x = pink_noise(32768, 1.0, &mut rng);
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
        // low band should carry more power than an equal-width high band
        let band_power = |lo: usize, hi: usize| -> f64 {
            let mut p = 0.0;
            for k in lo..hi {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &v) in x.iter().enumerate() {
                    let ph = std::f64::consts::TAU * k as f64 * t as f64 / x.len() as f64;
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
                p += re * re + im * im;
            }
            p
        };
        let low = band_power(2, 12);
        let high = band_power(1000, 1010);
        assert!(low > 10.0 * high, "low {low} vs high {high}");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = tiny_spec(1);
        spec.pattern.pop();
        assert!(matches!(generate(&spec), Err(Error::InvalidSpec(_))));
        let mut spec = tiny_spec(1);
        spec.category_amplitudes[0].1 = -0.1;
        assert!(generate(&spec).is_err());
        let mut spec = tiny_spec(1);
        spec.category_amplitudes.push((labels::STANDARD.into(), 0.1));
        assert!(generate(&spec).is_err());
    }
}
