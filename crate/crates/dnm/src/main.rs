use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dnm::decompose::DimChoice;
use dnm::io::{self, KernelFormat};
use dnm::report::SynthReport;
use dnm::{dataset, json, DnmError, Mode, Preprocess, RunConfig, SynthSpec};
use dnm_core::metrics::ClusteringReport;
use serde::Serialize;

/// Multiple kernel clustering by dual noise minimization.
#[derive(Parser)]
#[command(name = "dnm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a dataset directory and write a JSON report.
    Run(RunArgs),
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Decompose each view's noise against the labels.
    Decompose(DecomposeArgs),
    /// Score a predicted labeling against the truth.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct Common {
    /// Seed for every random choice (k-means initialization).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// k-means restarts.
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    /// Initial penalty weight of the dimension search.
    #[arg(long = "initial-m", default_value_t = 0.5)]
    initial_m: f64,
    /// Cap on penalty doublings.
    #[arg(long, default_value_t = 200)]
    max_outer_iters: usize,
    /// Worker threads for per-view work (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Kernel preprocessing; defaults to the manifest's, else center-normalize.
    #[arg(long, value_enum)]
    preprocess: Option<Preprocess>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Directory with view_*.mkck / view_*.csv, optional labels.txt and manifest.json.
    dataset_dir: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Mode::Dnm)]
    mode: Mode,
    /// Leave wall-clock timings out of the report.
    #[arg(long)]
    no_timings: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Every view equals the cluster subspace.
    ZeroNoise,
    /// One view with strong column-space noise, one with null-space noise.
    Figure2,
    /// Three RBF views of Gaussian blobs with private nuisance coordinates.
    NoisyBlobs,
}

#[derive(Args)]
struct SynthArgs {
    /// Destination directory.
    dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Preset::NoisyBlobs, conflicts_with = "manifest")]
    preset: Preset,
    /// Regenerate from an existing manifest.json instead of a preset.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Samples (zero-noise preset only).
    #[arg(long, default_value_t = 60)]
    n: usize,
    /// Clusters (zero-noise preset only).
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Views (zero-noise preset only).
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FileFormat::Mkck)]
    format: FileFormat,
    /// Write the JSON summary here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Mkck,
    Csv,
}

#[derive(Args)]
struct DecomposeArgs {
    dataset_dir: PathBuf,
    /// Number of clusters (default: from labels.txt).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = DimChoice::Rank)]
    dims_from: DimChoice,
    /// Include E_N, E_C and R as dense arrays.
    #[arg(long)]
    heatmaps: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct MetricsArgs {
    /// Predicted labels, one 1-based id per line.
    #[arg(long)]
    pred: PathBuf,
    /// True labels, one 1-based id per line.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn emit<T: Serialize>(value: &T, output: Option<&Path>) -> dnm::Result<()> {
    let text = json::to_string(value)?;
    match output {
        Some(path) => fs::write(path, text).map_err(|e| DnmError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn config(dataset_dir: PathBuf, k: usize, mode: Mode, common: &Common) -> RunConfig {
    RunConfig {
        restarts: common.restarts,
        seed: common.seed,
        initial_m: common.initial_m,
        max_outer_iters: common.max_outer_iters,
        preprocess: common.preprocess,
        threads: common.threads,
        ..RunConfig::new(dataset_dir, k, mode)
    }
}

fn run(cli: Cli) -> dnm::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let mut cfg = config(args.dataset_dir, args.k, args.mode, &args.common);
            cfg.timings = !args.no_timings;
            let report = dnm::run_pipeline(&cfg)?;
            emit(&report, args.common.output.as_deref())
        }
        Command::Decompose(args) => {
            let k = match args.k {
                Some(k) => k,
                None => io::load_labels(&args.dataset_dir.join(dataset::LABELS_FILE))?.k(),
            };
            let mut cfg = config(args.dataset_dir, k, Mode::Decompose, &args.common);
            cfg.dims_from = args.dims_from;
            cfg.heatmaps = args.heatmaps;
            let report = dnm::run_pipeline(&cfg)?;
            emit(&report, args.common.output.as_deref())
        }
        Command::Synth(args) => {
            let spec = match &args.manifest {
                Some(path) => dataset::Manifest::load(path)?
                    .synth
                    .ok_or_else(|| DnmError::format(path, "manifest has no generator settings"))?,
                None => match args.preset {
                    Preset::ZeroNoise => SynthSpec::zero_noise(args.n, args.k, args.m, args.seed),
                    Preset::Figure2 => SynthSpec::figure2(args.seed),
                    Preset::NoisyBlobs => SynthSpec::noisy_blobs(args.seed),
                },
            };
            let format = match args.format {
                FileFormat::Mkck => KernelFormat::Mkck,
                FileFormat::Csv => KernelFormat::Csv,
            };
            let files = dnm::write_dataset(&spec, &args.dir, format)?;
            let summary = SynthReport {
                spec,
                files: files.iter().map(|p| p.display().to_string()).collect(),
            };
            emit(&summary, args.output.as_deref())
        }
        Command::Metrics(args) => {
            let pred = io::load_labels(&args.pred)?;
            let truth = io::load_labels(&args.truth)?;
            if pred.n() != truth.n() {
                return Err(DnmError::Config(format!(
                    "{} predicted labels but {} true labels",
                    pred.n(),
                    truth.n()
                )));
            }
            let report = ClusteringReport::evaluate(&pred, &truth)
                .map_err(|source| DnmError::Stage {
                    stage: dnm::Stage::Metrics,
                    view: None,
                    source,
                })?;
            emit(&report, args.output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
