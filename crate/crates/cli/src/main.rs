//! Command-line front end: reproducible batch runs of the simulation,
//! preprocessing, scoring, metric, and correlation stages.
//!
//! Exit codes: 0 success, 2 I/O or configuration, 3 numerical/degenerate
//! input, 4 data-contract violation between inputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use neuroscore::beamformer::SavedFilter;
use neuroscore::error::ErrorCategory;
use neuroscore::io;
use neuroscore::metrics::{
    fid, inception_score, metric_report, mmd_squared, Bandwidth, FeatureSet, Gaussian,
    MmdEstimator, ProbMatrix,
};
use neuroscore::model::{labels, DEFAULT_WINDOW_MS};
use neuroscore::preprocess::{run_pipeline, run_pipeline_epochs, PreprocessConfig};
use neuroscore::scoring::{
    compute_neuroscore_with, compute_with_saved, reconstructed_averaged_signal, ScoringOptions,
};
use neuroscore::stats::{bootstrap_correlation, correlate_tables, mean_center_within};
use neuroscore::synth::{generate_cohort, SynthSpec};

#[derive(Parser)]
#[command(name = "neuroscore", version, about = "P300-based scoring of generative image quality from RSVP EEG")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic RSVP EEG with known ground truth
    Simulate(SimulateArgs),
    /// Reference, filter, decimate, epoch, and reject artifacts
    Preprocess(PreprocessArgs),
    /// Fit the spatial filter and compute per-category scores
    Score(ScoreArgs),
    /// Distribution metrics over precomputed matrices
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Correlate two score tables, optionally centered and bootstrapped
    Correlate(CorrelateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Generator spec as JSON; defaults to one reference-scale participant
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override the spec seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the spec participant count
    #[arg(long)]
    participants: Option<usize>,
    /// Emit already-epoched data (default) or the continuous recording
    #[arg(long, default_value = "epochs", value_parser = ["epochs", "recording"])]
    emit: String,
    /// Add blink-like artifacts to this many epochs per participant
    /// (epochs output only); flagged in the ground truth
    #[arg(long, default_value_t = 0)]
    contaminate: usize,
    /// Peak-to-peak size of injected artifacts, microvolts
    #[arg(long, default_value_t = 300.0)]
    artifact_uv: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Recording or epoch-set manifest JSON
    #[arg(long)]
    input: PathBuf,
    /// PreprocessConfig as JSON; defaults match the reference chain
    #[arg(long)]
    config: Option<PathBuf>,
    /// Epoch window in ms, as "start,end"
    #[arg(long, value_parser = parse_interval, default_value = "0,1000")]
    window: (f64, f64),
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Epoch-set manifest JSON
    #[arg(long)]
    input: PathBuf,
    /// Reuse a previously fitted filter instead of refitting
    #[arg(long)]
    filter: Option<PathBuf>,
    /// Latency search interval in ms, as "start,end"
    #[arg(long, value_parser = parse_interval, default_value = "400,600")]
    search: (f64, f64),
    /// Refit the filter per target category
    #[arg(long)]
    per_category_filter: bool,
    /// Participant id recorded in the output table
    #[arg(long, default_value = "p1")]
    participant: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// Inception Score from a class-probability matrix
    Is(IsArgs),
    /// Kernel maximum mean discrepancy between two feature sets
    Mmd(MmdArgs),
    /// Frechet distance between fitted Gaussians
    Fid(FidArgs),
    /// Rank categories per metric and surface ordering disagreement
    Report(ReportArgs),
}

#[derive(Args)]
struct IsArgs {
    /// Probability matrix (.csv rows or .json manifest)
    #[arg(long)]
    probs: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MmdArgs {
    /// Reference feature matrix (.csv or .json manifest)
    #[arg(long)]
    real: PathBuf,
    /// Generated feature matrix (.csv or .json manifest)
    #[arg(long)]
    generated: PathBuf,
    /// Kernel bandwidth: a number, or "median" for the median heuristic
    #[arg(long, default_value = "median")]
    sigma: String,
    /// Use the biased V-statistic instead of the unbiased estimator
    #[arg(long)]
    biased: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FidArgs {
    /// Reference feature matrix; a Gaussian is fitted to it
    #[arg(long, conflicts_with = "gaussian_real")]
    real: Option<PathBuf>,
    /// Generated feature matrix; a Gaussian is fitted to it
    #[arg(long, conflicts_with = "gaussian_generated")]
    generated: Option<PathBuf>,
    /// Reference Gaussian as JSON {mean, cov}
    #[arg(long)]
    gaussian_real: Option<PathBuf>,
    /// Generated Gaussian as JSON {mean, cov}
    #[arg(long)]
    gaussian_generated: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// CSV of metric,category,score rows
    #[arg(long)]
    scores: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Score table CSV (participant,category,value)
    #[arg(long)]
    neuro: PathBuf,
    /// Behavioral accuracy table CSV (participant,category,value)
    #[arg(long)]
    behav: PathBuf,
    /// Mean-center each participant's values first
    #[arg(long)]
    center: bool,
    /// Restrict to the DCGAN/BEGAN/PROGAN columns (after centering)
    #[arg(long)]
    gan_only: bool,
    /// Also run the within-participant shuffle bootstrap with N iterations
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Also write the report (and a run manifest) into this directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format on stdout
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected \"start,end\"".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((lo, hi))
}

/// Metadata written next to every command's outputs.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    argv: Vec<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seed: Option<u64>,
    tool_version: &'static str,
    timestamp_unix: u64,
}

impl RunManifest {
    fn new(command: &str, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    fn write(&self, dir: &Path) -> neuroscore::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("run_manifest.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::IoOrConfig => 2,
                ErrorCategory::Numerical => 3,
                ErrorCategory::DataContract => 4,
            })
        }
    }
}

fn run(cli: Cli) -> neuroscore::Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Preprocess(args) => cmd_preprocess(args),
        Command::Score(args) => cmd_score(args),
        Command::Metrics(cmd) => match cmd {
            MetricsCommand::Is(args) => cmd_metrics_is(args),
            MetricsCommand::Mmd(args) => cmd_metrics_mmd(args),
            MetricsCommand::Fid(args) => cmd_metrics_fid(args),
            MetricsCommand::Report(args) => cmd_metrics_report(args),
        },
        Command::Correlate(args) => cmd_correlate(args),
    }
}

fn load_spec(args: &SimulateArgs) -> neuroscore::Result<SynthSpec> {
    let mut spec = match &args.spec {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => {
            let mut s = SynthSpec::default_cohort(args.seed.unwrap_or(0));
            s.participants = 1;
            s
        }
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(p) = args.participants {
        spec.participants = p;
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_simulate(args: SimulateArgs) -> neuroscore::Result<()> {
    let spec = load_spec(&args)?;
    let mut manifest = RunManifest::new("simulate", Some(spec.seed));
    if let Some(p) = &args.spec {
        manifest.input(p);
    }
    std::fs::create_dir_all(&args.out)?;

    if args.contaminate > 0 && args.emit == "recording" {
        return Err(neuroscore::Error::InvalidConfig(
            "--contaminate applies to epoch output only".into(),
        ));
    }

    let cohort = generate_cohort(&spec)?;
    let flat = cohort.len() == 1;
    for (participant, (id, rec, truth)) in cohort.iter().enumerate() {
        let dir = if flat {
            args.out.clone()
        } else {
            args.out.join(id)
        };
        std::fs::create_dir_all(&dir)?;
        let mut truth = truth.clone();
        if args.emit == "recording" {
            let path = dir.join("recording.json");
            io::write_recording(rec, &path)?;
            manifest.output(&path);
        } else {
            let (set, _) = neuroscore::model::extract_epochs(rec, DEFAULT_WINDOW_MS)?;
            let set = if args.contaminate > 0 {
                let (set, flagged) = neuroscore::synth::inject_artifacts(
                    &set,
                    args.contaminate,
                    args.artifact_uv,
                    spec.seed ^ ((participant as u64) << 32),
                )?;
                for i in flagged {
                    truth.rows[i].contaminated = true;
                }
                set
            } else {
                set
            };
            // manifest.json is the epoch-set entry point; payload epochs.bin
            let path = dir.join("manifest.json");
            io::write_epochset_named(&set, &path, "epochs.bin")?;
            manifest.output(&path);
            manifest.output(&dir.join("epochs.bin"));
        }
        let gt = dir.join("ground_truth.csv");
        truth.write_csv(&gt)?;
        manifest.output(&gt);
    }
    manifest.write(&args.out)?;
    println!(
        "simulated {} participant(s), seed {}, into {}",
        cohort.len(),
        spec.seed,
        args.out.display()
    );
    Ok(())
}

fn cmd_preprocess(args: PreprocessArgs) -> neuroscore::Result<()> {
    let cfg: PreprocessConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => PreprocessConfig::default(),
    };
    cfg.validate()?;
    let mut manifest = RunManifest::new("preprocess", None);
    manifest.input(&args.input);
    if let Some(c) = &args.config {
        manifest.input(c);
    }

    let kind = io::manifest_kind(&args.input)?;
    let (set, report) = match kind.as_str() {
        "recording" => {
            let rec = io::read_recording(&args.input)?;
            let out = run_pipeline(&rec, &cfg, args.window)?;
            for d in &out.dropped_events {
                eprintln!(
                    "dropped event {} at sample {} ({}): {}",
                    d.event_index, d.sample_index, d.label, d.reason
                );
            }
            (out.epochs, out.report)
        }
        "epochset" => {
            let set = io::read_epochset(&args.input)?;
            let (set, report, _) = run_pipeline_epochs(&set, &cfg)?;
            (set, report)
        }
        other => {
            return Err(neuroscore::Error::Format {
                path: args.input.display().to_string(),
                reason: format!("cannot preprocess manifest of kind \"{other}\""),
            })
        }
    };

    std::fs::create_dir_all(&args.out)?;
    let epochs_path = args.out.join("manifest.json");
    io::write_epochset_named(&set, &epochs_path, "epochs.bin")?;
    manifest.output(&epochs_path);
    manifest.output(&args.out.join("epochs.bin"));
    let report_path = args.out.join("rejection_report.csv");
    io::write_rejection_report(&report.per_category, &report_path)?;
    manifest.output(&report_path);
    manifest.write(&args.out)?;
    println!(
        "retained {} epochs ({} rejected) at {} Hz",
        set.len(),
        report.rejected_total(),
        set.rate_hz
    );
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> neuroscore::Result<()> {
    let set = io::read_epochset(&args.input)?;
    let mut manifest = RunManifest::new("score", None);
    manifest.input(&args.input);

    let result = match &args.filter {
        Some(path) => {
            manifest.input(path);
            let saved = SavedFilter::load(path)?;
            compute_with_saved(&set, &saved)?
        }
        None => compute_neuroscore_with(
            &set,
            &ScoringOptions {
                search_ms: args.search,
                per_category_filter: args.per_category_filter,
            },
        )?,
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }

    std::fs::create_dir_all(&args.out)?;
    let mut triples = Vec::new();
    for (cat, v) in &result.per_category {
        triples.push((args.participant.clone(), cat.clone(), *v));
    }
    let table = neuroscore::stats::ScoreTable::from_triples(triples)?;
    let scores_path = args.out.join("scores.csv");
    io::write_score_table(&table, &scores_path)?;
    manifest.output(&scores_path);

    if args.filter.is_none() {
        let filter_path = args.out.join("filter.json");
        result.filter.to_saved(&set.channel_names).save(&filter_path)?;
        manifest.output(&filter_path);
    }

    let signals = reconstructed_averaged_signal(&set, &result.filter.weights)?;
    let times: Vec<f64> = (0..set.n_samples()).map(|t| set.time_ms(t)).collect();
    let columns: Vec<(String, Vec<f64>)> = signals
        .into_iter()
        .map(|s| (s.label, s.values))
        .collect();
    let signals_path = args.out.join("difference_signals.csv");
    io::write_difference_signals(&times, &columns, &signals_path)?;
    manifest.output(&signals_path);

    // per-channel F map over the extraction window, when the design allows
    if let (Some(lo), Some(hi)) = (
        set.sample_at_ms(result.t_p300_ms.0),
        set.sample_at_ms(result.t_p300_ms.1),
    ) {
        let per_channel = neuroscore::scoring::per_channel_amplitudes(&set, (lo, hi))?;
        match neuroscore::stats::channel_anova_f(&per_channel) {
            Ok(fmap) => {
                let fmap_path = args.out.join("channel_f_map.csv");
                io::write_fmap(&fmap, &fmap_path)?;
                manifest.output(&fmap_path);
            }
            Err(e) => eprintln!("skipping channel F map: {e}"),
        }
    }

    #[derive(Serialize)]
    struct ScoreReport<'a> {
        participant: &'a str,
        per_category: &'a std::collections::BTreeMap<String, f64>,
        t_optimal_ms: f64,
        t_p300_ms: (f64, f64),
        objective: f64,
        warnings: &'a [String],
    }
    let report = ScoreReport {
        participant: &args.participant,
        per_category: &result.per_category,
        t_optimal_ms: result.filter.t_optimal_ms,
        t_p300_ms: result.t_p300_ms,
        objective: result.filter.objective,
        warnings: &result.warnings,
    };
    let report_path = args.out.join("result.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
    manifest.output(&report_path);
    manifest.write(&args.out)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn emit_report<T: Serialize>(
    output: &OutputArgs,
    command: &str,
    seed: Option<u64>,
    inputs: &[&Path],
    report: &T,
    csv_rows: Vec<(String, String)>,
) -> neuroscore::Result<()> {
    if output.format == "csv" {
        let mut w = csv::Writer::from_writer(std::io::stdout());
        w.write_record(["key", "value"]).map_err(neuroscore::Error::from)?;
        for (k, v) in &csv_rows {
            w.write_record([k.as_str(), v.as_str()])
                .map_err(neuroscore::Error::from)?;
        }
        w.flush()?;
    } else {
        println!("{}", serde_json::to_string_pretty(report)?);
    }
    if let Some(dir) = &output.out {
        std::fs::create_dir_all(dir)?;
        let mut manifest = RunManifest::new(command, seed);
        for p in inputs {
            manifest.input(p);
        }
        let report_path = dir.join("report.json");
        std::fs::write(&report_path, serde_json::to_string_pretty(report)?)?;
        manifest.output(&report_path);
        manifest.write(dir)?;
    }
    Ok(())
}

fn cmd_metrics_is(args: IsArgs) -> neuroscore::Result<()> {
    let m = io::read_matrix(&args.probs)?;
    let value = inception_score(&ProbMatrix::new(m.clone())?)?;
    #[derive(Serialize)]
    struct Report {
        metric: &'static str,
        value: f64,
        n_samples: usize,
        n_classes: usize,
    }
    let report = Report {
        metric: "inception_score",
        value,
        n_samples: m.nrows(),
        n_classes: m.ncols(),
    };
    emit_report(
        &args.output,
        "metrics-is",
        None,
        &[&args.probs],
        &report,
        vec![
            ("metric".into(), "inception_score".into()),
            ("value".into(), format!("{value}")),
        ],
    )
}

fn cmd_metrics_mmd(args: MmdArgs) -> neuroscore::Result<()> {
    let x = FeatureSet::new(io::read_matrix(&args.real)?)?;
    let y = FeatureSet::new(io::read_matrix(&args.generated)?)?;
    let bandwidth = if args.sigma == "median" {
        Bandwidth::Median
    } else {
        let v: f64 = args.sigma.parse().map_err(|e| {
            neuroscore::Error::InvalidConfig(format!("--sigma must be a number or \"median\": {e}"))
        })?;
        Bandwidth::Fixed(v)
    };
    let estimator = if args.biased {
        MmdEstimator::Biased
    } else {
        MmdEstimator::Unbiased
    };
    let r = mmd_squared(&x, &y, bandwidth, estimator)?;
    #[derive(Serialize)]
    struct Report {
        metric: &'static str,
        value: f64,
        sigma: f64,
        estimator: MmdEstimator,
    }
    let report = Report {
        metric: "mmd_squared",
        value: r.value,
        sigma: r.sigma,
        estimator: r.estimator,
    };
    emit_report(
        &args.output,
        "metrics-mmd",
        None,
        &[&args.real, &args.generated],
        &report,
        vec![
            ("metric".into(), "mmd_squared".into()),
            ("value".into(), format!("{}", r.value)),
            ("sigma".into(), format!("{}", r.sigma)),
            ("estimator".into(), format!("{:?}", r.estimator)),
        ],
    )
}

fn load_gaussian(
    features: &Option<PathBuf>,
    gaussian: &Option<PathBuf>,
    side: &str,
) -> neuroscore::Result<(Gaussian, PathBuf)> {
    match (features, gaussian) {
        (Some(f), None) => {
            let set = FeatureSet::new(io::read_matrix(f)?)?;
            Ok((set.fit_gaussian()?, f.clone()))
        }
        (None, Some(g)) => {
            let (mean, cov) = io::read_gaussian(g)?;
            Ok((Gaussian { mean, cov }, g.clone()))
        }
        _ => Err(neuroscore::Error::InvalidConfig(format!(
            "provide exactly one of --{side} or --gaussian-{side}"
        ))),
    }
}

fn cmd_metrics_fid(args: FidArgs) -> neuroscore::Result<()> {
    let (a, in_a) = load_gaussian(&args.real, &args.gaussian_real, "real")?;
    let (b, in_b) = load_gaussian(&args.generated, &args.gaussian_generated, "generated")?;
    let value = fid(&a, &b)?;
    #[derive(Serialize)]
    struct Report {
        metric: &'static str,
        value: f64,
        dimension: usize,
    }
    let report = Report {
        metric: "fid",
        value,
        dimension: a.mean.len(),
    };
    emit_report(
        &args.output,
        "metrics-fid",
        None,
        &[in_a.as_path(), in_b.as_path()],
        &report,
        vec![
            ("metric".into(), "fid".into()),
            ("value".into(), format!("{value}")),
        ],
    )
}

fn cmd_metrics_report(args: ReportArgs) -> neuroscore::Result<()> {
    let scores = io::read_metric_scores(&args.scores)?;
    let report = metric_report(&scores)?;
    if let Some(dir) = &args.output.out {
        std::fs::create_dir_all(dir)?;
        io::write_metric_report(&report, &dir.join("metric_report.csv"))?;
    }
    let mut csv_rows = Vec::new();
    for (metric, ranked) in &report.rankings {
        for r in ranked {
            csv_rows.push((
                format!("{metric}/{}", r.category),
                format!(
                    "score {} rank {}{}",
                    r.score,
                    r.rank,
                    if r.tied { " (tie)" } else { "" }
                ),
            ));
        }
    }
    csv_rows.push(("all_agree".into(), report.all_agree.to_string()));
    emit_report(
        &args.output,
        "metrics-report",
        None,
        &[&args.scores],
        &report,
        csv_rows,
    )
}

fn cmd_correlate(args: CorrelateArgs) -> neuroscore::Result<()> {
    let mut neuro = io::read_score_table(&args.neuro)?;
    let mut behav = io::read_score_table(&args.behav)?;
    if args.center {
        neuro = mean_center_within(&neuro);
        behav = mean_center_within(&behav);
    }
    if args.gan_only {
        neuro = neuro.restrict(&labels::GAN_CATEGORIES)?;
        behav = behav.restrict(&labels::GAN_CATEGORIES)?;
    }
    let observed = correlate_tables(&neuro, &behav)?;
    let bootstrap = match args.bootstrap {
        Some(iterations) => Some(bootstrap_correlation(&neuro, &behav, iterations, args.seed)?),
        None => None,
    };
    if let Some(b) = &bootstrap {
        if b.no_variation {
            eprintln!("warning: shuffling cannot change the pairing (NoVariation)");
        }
    }

    #[derive(Serialize)]
    struct Report {
        r: f64,
        p_two_tailed: f64,
        n: usize,
        df: usize,
        centered: bool,
        gan_only: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        bootstrap: Option<neuroscore::stats::BootstrapResult>,
    }
    let mut csv_rows = vec![
        ("r".to_string(), format!("{}", observed.r)),
        ("p_two_tailed".into(), format!("{}", observed.p_two_tailed)),
        ("n".into(), observed.n.to_string()),
        ("df".into(), observed.df.to_string()),
        ("centered".into(), args.center.to_string()),
        ("gan_only".into(), args.gan_only.to_string()),
    ];
    if let Some(b) = &bootstrap {
        csv_rows.push(("bootstrap_p".into(), format!("{}", b.p_bootstrapped)));
        csv_rows.push(("bootstrap_iterations".into(), b.iterations.to_string()));
        csv_rows.push(("bootstrap_seed".into(), b.seed.to_string()));
    }
    let report = Report {
        r: observed.r,
        p_two_tailed: observed.p_two_tailed,
        n: observed.n,
        df: observed.df,
        centered: args.center,
        gan_only: args.gan_only,
        bootstrap,
    };
    emit_report(
        &args.output,
        "correlate",
        args.bootstrap.map(|_| args.seed),
        &[&args.neuro, &args.behav],
        &report,
        csv_rows,
    )
}
