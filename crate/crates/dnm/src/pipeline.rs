//! End-to-end runs over a dataset directory.

use std::path::PathBuf;
use std::time::Instant;

use dnm_core::fusion::{consensus_partition, FusionRoute};
use dnm_core::metrics::ClusteringReport;
use dnm_core::optimizer::{run_algorithm1, OptimizerConfig};
use dnm_core::spectral::{kernel_kmeans, kernel_kmeans_from_eigen, KMeansRun};
use dnm_core::{
    center_and_normalize, symmetric_eig, truncate_features, EigenSystem, KMeansConfig, KernelMatrix,
    LabelVector,
};
use rayon::prelude::*;

use crate::dataset::{self, Dataset, Preprocess};
use crate::decompose::{decompose_features, DimChoice};
use crate::error::{AtStage, DnmError, Result, Stage};
use crate::io::KernelFormat;
use crate::report::{
    ClusterReport, FusionSummary, MetricsSummary, Mode, OptimizerSummary, ReportConfig, RestartStats,
    RunReport, SynthReport, Timings, ViewResult,
};
use crate::synth;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub initial_m: f64,
    pub max_outer_iters: usize,
    pub mode: Mode,
    /// Overrides the manifest; center-normalize when neither is given.
    pub preprocess: Option<Preprocess>,
    /// Worker threads for per-view work; `None` uses all cores.
    pub threads: Option<usize>,
    pub timings: bool,
    /// Subspace dimensions for the decompose mode.
    pub dims_from: DimChoice,
    pub heatmaps: bool,
}

impl RunConfig {
    pub fn new(dataset_dir: impl Into<PathBuf>, k: usize, mode: Mode) -> Self {
        RunConfig {
            dataset_dir: dataset_dir.into(),
            k,
            restarts: 50,
            seed: 0,
            initial_m: 0.5,
            max_outer_iters: 200,
            mode,
            preprocess: None,
            threads: None,
            timings: true,
            dims_from: DimChoice::Rank,
            heatmaps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(DnmError::Config(format!("k must be at least 2, got {}", self.k)));
        }
        if self.restarts < 1 {
            return Err(DnmError::Config("restarts must be at least 1".into()));
        }
        if !(self.initial_m > 0.0) || !self.initial_m.is_finite() {
            return Err(DnmError::Config(format!("initial M must be positive, got {}", self.initial_m)));
        }
        if self.max_outer_iters < 1 {
            return Err(DnmError::Config("max_outer_iters must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(DnmError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            restarts: self.restarts,
            seed: self.seed,
            ..KMeansConfig::default()
        }
    }

    fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            initial_m: self.initial_m,
            max_outer_iters: self.max_outer_iters,
            ..OptimizerConfig::default()
        }
    }
}

struct Clock {
    last: Instant,
}

impl Clock {
    fn start() -> Self {
        Clock { last: Instant::now() }
    }

    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let s = (now - self.last).as_secs_f64();
        self.last = now;
        s
    }
}

fn preprocess_all(kernels: &[KernelMatrix], preprocess: Preprocess) -> Result<Vec<KernelMatrix>> {
    kernels
        .par_iter()
        .enumerate()
        .map(|(p, k)| match preprocess {
            Preprocess::CenterNormalize => center_and_normalize(k).at_view(Stage::Preprocess, p),
            Preprocess::None => Ok(k.clone()),
        })
        .collect()
}

fn eigen_all(kernels: &[KernelMatrix]) -> Result<Vec<EigenSystem>> {
    kernels
        .par_iter()
        .enumerate()
        .map(|(p, k)| symmetric_eig(k.values()).at_view(Stage::Eigen, p))
        .collect()
}

fn summarize(runs: &KMeansRun, k: usize, truth: Option<&LabelVector>) -> Result<Option<MetricsSummary>> {
    let Some(truth) = truth else {
        return Ok(None);
    };
    let reports = runs
        .runs
        .iter()
        .map(|r| {
            let pred = LabelVector::new(r.labels.clone(), k)?;
            ClusteringReport::evaluate(&pred, truth)
        })
        .collect::<dnm_core::Result<Vec<_>>>()
        .at(Stage::Metrics)?;
    Ok(Some(MetricsSummary {
        best: reports[runs.best].clone(),
        restarts: RestartStats::from_reports(&reports),
    }))
}

fn resolve_preprocess(config: &RunConfig, data: &Dataset) -> Preprocess {
    config
        .preprocess
        .or_else(|| data.manifest.as_ref().and_then(|m| m.preprocess))
        .unwrap_or(Preprocess::CenterNormalize)
}

/// Runs the configured mode on the dataset in `config.dataset_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    if config.mode == Mode::Synth {
        return replay_manifest(config);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| DnmError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(config))
}

fn run_in_pool(config: &RunConfig) -> Result<RunReport> {
    let total = Instant::now();
    let mut clock = Clock::start();
    let mut timings = Timings::default();

    let data = dataset::load_dataset(&config.dataset_dir)?;
    let n = data.n();
    if config.k > n {
        return Err(DnmError::Config(format!("k = {} exceeds n = {n}", config.k)));
    }
    let preprocess = resolve_preprocess(config, &data);
    timings.load = clock.lap();
    log::info!("loaded {} views with n = {n}", data.kernels.len());

    let kernels = preprocess_all(&data.kernels, preprocess)?;
    timings.preprocess = clock.lap();

    let report_config = ReportConfig {
        k: config.k,
        restarts: config.restarts,
        seed: config.seed,
        initial_m: config.initial_m,
        max_outer_iters: config.max_outer_iters,
        preprocess,
    };
    let kmeans = config.kmeans();
    let truth = data.labels.as_ref();
    let base = ClusterReport {
        config: report_config,
        n,
        views: data.view_names(),
        labels: Vec::new(),
        wcss: 0.0,
        kernel_objective: None,
        optimizer: None,
        fusion: None,
        per_view: None,
        selected_view: None,
        metrics: None,
        timings: None,
    };

    let (report, wrap): (ClusterReport, fn(ClusterReport) -> RunReport) = match config.mode {
        Mode::Dnm => {
            let systems = eigen_all(&kernels)?;
            timings.eigen = clock.lap();
            let solution = run_algorithm1(&systems, config.k, &config.optimizer()).at(Stage::Optimize)?;
            timings.optimize = clock.lap();
            log::info!("dimensions {:?}", solution.dims());
            let consensus = consensus_partition(&solution.features, config.k, &kmeans).at(Stage::Fusion)?;
            timings.cluster = clock.lap();
            let metrics = summarize(&consensus.runs, config.k, truth)?;
            timings.metrics = clock.lap();
            let dims = solution.dims().to_vec();
            let report = ClusterReport {
                labels: consensus.labels.to_one_based(),
                wcss: consensus.runs.best_run().wcss,
                optimizer: Some(OptimizerSummary {
                    dimension_sum: dims.iter().sum(),
                    dims,
                    initial: solution.trace.initial.clone(),
                    sweeps: solution.trace.sweeps.len(),
                    final_penalty: solution.state.penalty,
                    trace: solution.trace.sweeps,
                }),
                fusion: Some(FusionSummary {
                    route: match consensus.route {
                        FusionRoute::Svd => "svd",
                        FusionRoute::Eigen => "eigen",
                    }
                    .into(),
                    spectrum: consensus.spectrum,
                }),
                metrics,
                ..base
            };
            (report, RunReport::Dnm)
        }
        Mode::Akkm => {
            let mean = KernelMatrix::mean(&kernels).at(Stage::Preprocess)?;
            timings.preprocess += clock.lap();
            let fit = kernel_kmeans(&mean, config.k, &kmeans).at(Stage::Cluster)?;
            timings.cluster = clock.lap();
            let metrics = summarize(&fit.runs, config.k, truth)?;
            timings.metrics = clock.lap();
            let report = ClusterReport {
                labels: fit.labels.to_one_based(),
                wcss: fit.runs.best_run().wcss,
                kernel_objective: Some(fit.objective),
                metrics,
                ..base
            };
            (report, RunReport::Akkm)
        }
        Mode::KkmPerView => {
            let systems = eigen_all(&kernels)?;
            timings.eigen = clock.lap();
            let fits = systems
                .par_iter()
                .zip(&kernels)
                .enumerate()
                .map(|(p, (es, k))| kernel_kmeans_from_eigen(es, k.trace(), config.k, &kmeans).at_view(Stage::Cluster, p))
                .collect::<Result<Vec<_>>>()?;
            timings.cluster = clock.lap();
            let names = data.view_names();
            let mut per_view = Vec::with_capacity(fits.len());
            for (name, fit) in names.iter().zip(&fits) {
                per_view.push(ViewResult {
                    view: name.clone(),
                    objective: fit.objective,
                    wcss: fit.runs.best_run().wcss,
                    labels: fit.labels.to_one_based(),
                    metrics: summarize(&fit.runs, config.k, truth)?,
                });
            }
            timings.metrics = clock.lap();
            // Best view by accuracy when labels exist, else by objective.
            let selected = (0..per_view.len())
                .min_by(|&a, &b| {
                    let key = |v: &ViewResult| match &v.metrics {
                        Some(m) => -m.best.acc,
                        None => v.objective,
                    };
                    key(&per_view[a]).total_cmp(&key(&per_view[b])).then(a.cmp(&b))
                })
                .expect("at least one view");
            let chosen = per_view[selected].clone();
            let report = ClusterReport {
                labels: chosen.labels,
                wcss: chosen.wcss,
                kernel_objective: Some(chosen.objective),
                metrics: chosen.metrics,
                per_view: Some(per_view),
                selected_view: Some(selected),
                ..base
            };
            (report, RunReport::KkmPerView)
        }
        Mode::Decompose => {
            let truth = truth.ok_or_else(|| {
                DnmError::Config(format!(
                    "decompose needs {} in {}",
                    dataset::LABELS_FILE,
                    config.dataset_dir.display()
                ))
            })?;
            let systems = eigen_all(&kernels)?;
            let dims: Vec<usize> = match config.dims_from {
                DimChoice::Rank => systems.iter().map(EigenSystem::numerical_rank).collect(),
                DimChoice::Dnm => run_algorithm1(&systems, config.k, &config.optimizer())
                    .at(Stage::Optimize)?
                    .dims()
                    .to_vec(),
            };
            let features = systems
                .iter()
                .zip(&dims)
                .enumerate()
                .map(|(p, (es, &d))| truncate_features(es, d).at_view(Stage::Decompose, p))
                .collect::<Result<Vec<_>>>()?;
            let report = decompose_features(
                &data.view_names(),
                &features,
                truth,
                config.dims_from,
                &kmeans,
                config.heatmaps,
            )
            .at(Stage::Decompose)?;
            return Ok(RunReport::Decompose(report));
        }
        Mode::Synth => unreachable!("handled before loading"),
    };

    timings.total = total.elapsed().as_secs_f64();
    Ok(wrap(ClusterReport {
        timings: config.timings.then_some(timings),
        ..report
    }))
}

/// Regenerates the synthetic dataset described by the directory's manifest.
fn replay_manifest(config: &RunConfig) -> Result<RunReport> {
    let path = config.dataset_dir.join(dataset::MANIFEST_FILE);
    let manifest = dataset::Manifest::load(&path)?;
    let spec = manifest
        .synth
        .ok_or_else(|| DnmError::format(&path, "manifest has no generator settings"))?;
    let format = dataset::discover_views(&config.dataset_dir)
        .ok()
        .and_then(|v| v.first().and_then(|p| KernelFormat::from_path(p)))
        .unwrap_or(KernelFormat::Mkck);
    let files = synth::write_dataset(&spec, &config.dataset_dir, format)?
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    Ok(RunReport::Synth(SynthReport { spec, files }))
}
