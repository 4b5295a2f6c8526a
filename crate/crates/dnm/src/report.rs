//! Serializable run reports.

use dnm_core::metrics::ClusteringReport;
use dnm_core::optimizer::SweepRecord;
use dnm_core::LabelVector;
use serde::{Deserialize, Serialize};

use crate::dataset::Preprocess;
use crate::decompose::DecomposeReport;
use crate::synth::SynthSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Dual noise minimization.
    Dnm,
    /// Kernel k-means on the average kernel.
    Akkm,
    /// Kernel k-means on each view separately.
    KkmPerView,
    /// Noise decomposition of each view against the labels.
    Decompose,
    /// Regenerate a synthetic dataset from its manifest.
    Synth,
}

/// Settings that influence the result (the thread count does not).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    #[serde(rename = "initial_M")]
    pub initial_m: f64,
    pub max_outer_iters: usize,
    pub preprocess: Preprocess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartStats {
    pub acc: MeanStd,
    pub nmi: MeanStd,
    pub purity: MeanStd,
    pub ari: MeanStd,
}

impl RestartStats {
    pub fn from_reports(reports: &[ClusteringReport]) -> Self {
        let stat = |f: fn(&ClusteringReport) -> f64| MeanStd::of(&reports.iter().map(f).collect::<Vec<_>>());
        RestartStats {
            acc: stat(|r| r.acc),
            nmi: stat(|r| r.nmi),
            purity: stat(|r| r.purity),
            ari: stat(|r| r.ari),
        }
    }
}

/// Metrics of the reported labels (best k-means restart) and their spread over
/// all restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub best: ClusteringReport,
    pub restarts: RestartStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSummary {
    pub dims: Vec<usize>,
    pub dimension_sum: usize,
    pub initial: Vec<usize>,
    pub sweeps: usize,
    pub final_penalty: f64,
    pub trace: Vec<SweepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionSummary {
    /// `svd` or `eigen`.
    pub route: String,
    /// Leading `k` eigenvalues of `Σ_p U_p·U_pᵀ`.
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewResult {
    pub view: String,
    /// `Tr((I − H·Hᵀ)·K)` of the relaxed solution.
    pub objective: f64,
    pub wcss: f64,
    pub labels: Vec<usize>,
    pub metrics: Option<MetricsSummary>,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load: f64,
    pub preprocess: f64,
    pub eigen: f64,
    pub optimize: f64,
    pub cluster: f64,
    pub metrics: f64,
    pub total: f64,
}

/// Result of one of the clustering modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub config: ReportConfig,
    pub n: usize,
    pub views: Vec<String>,
    /// Predicted 1-based cluster ids.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares of the best k-means restart on the
    /// embedding.
    pub wcss: f64,
    /// `Tr((I − H·Hᵀ)·K)` for the kernel k-means baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionSummary>,
    /// Kernel k-means per view; the top-level labels are those of
    /// `selected_view`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_view: Option<Vec<ViewResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_view: Option<usize>,
    pub metrics: Option<MetricsSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl ClusterReport {
    pub fn predicted(&self) -> dnm_core::Result<LabelVector> {
        LabelVector::from_one_based(&self.labels, self.config.k)
    }
}

/// Files rewritten from a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub spec: SynthSpec,
    pub files: Vec<String>,
}

/// Output of [`crate::pipeline::run_pipeline`], tagged by mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RunReport {
    Dnm(ClusterReport),
    Akkm(ClusterReport),
    KkmPerView(ClusterReport),
    Decompose(DecomposeReport),
    Synth(SynthReport),
}

impl RunReport {
    pub fn clustering(&self) -> Option<&ClusterReport> {
        match self {
            RunReport::Dnm(r) | RunReport::Akkm(r) | RunReport::KkmPerView(r) => Some(r),
            _ => None,
        }
    }

    /// Drops wall-clock data, leaving a report that is identical across runs.
    pub fn without_timings(mut self) -> Self {
        if let RunReport::Dnm(r) | RunReport::Akkm(r) | RunReport::KkmPerView(r) = &mut self {
            r.timings = None;
        }
        self
    }
}
