//! Noise decomposition of view subspaces against a known partition, and the
//! clustering quality of the denoised kernels.

use dnm_core::metrics::ClusteringReport;
use dnm_core::noise::{
    check_lemma1, check_lemma2, check_lemma3, check_theorem1, check_theorem2, decompose_noise,
    denoise_kernel, DenoiseMode, NoiseDecomposition,
};
use dnm_core::spectral::kernel_kmeans;
use dnm_core::{FeatureMatrix, KMeansConfig, KernelMatrix, LabelVector, PartitionMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// How the dimension of each view's subspace is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DimChoice {
    /// Numerical rank of the kernel.
    Rank,
    /// Dimensions selected by the dual noise optimizer.
    Dnm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmaps {
    pub null_space: Vec<Vec<f64>>,
    pub column_space: Vec<Vec<f64>>,
    pub cross: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewNoise {
    pub view: String,
    pub d: usize,
    pub tr_e: f64,
    pub tr_n: f64,
    pub tr_c: f64,
    pub tr_r: f64,
    pub min_eig_n: f64,
    pub max_eig_c: f64,
    pub lemma1_residual: f64,
    pub lemma2_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heatmaps: Option<Heatmaps>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseResult {
    pub mode: DenoiseMode,
    pub metrics: ClusteringReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub n: usize,
    pub k: usize,
    pub dims_from: DimChoice,
    pub views: Vec<ViewNoise>,
    /// Pairwise `‖U_pᵀ·U_q‖_F²`.
    pub alignment: Vec<Vec<f64>>,
    /// `|Σ Tr(E_N) − (Σd − Σ(k + Tr(E_C)))|`.
    pub theorem2_residual: f64,
    /// Kernel k-means on the view-averaged denoised kernels.
    pub denoise: Vec<DenoiseResult>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn view_noise(
    view: String,
    u: &FeatureMatrix,
    dec: &NoiseDecomposition,
    h: &PartitionMatrix,
    heatmaps: bool,
) -> dnm_core::Result<ViewNoise> {
    let (min_eig_n, max_eig_c) = check_lemma3(dec)?;
    Ok(ViewNoise {
        view,
        d: u.d(),
        tr_e: dec.traces.total,
        tr_n: dec.traces.null_space,
        tr_c: dec.traces.column_space,
        tr_r: dec.traces.cross,
        min_eig_n,
        max_eig_c,
        lemma1_residual: check_lemma1(dec, h),
        lemma2_residual: check_lemma2(dec, h),
        heatmaps: heatmaps.then(|| Heatmaps {
            null_space: rows(&dec.null_space),
            column_space: rows(&dec.column_space),
            cross: rows(&dec.cross),
        }),
    })
}

/// Average of the views' denoised kernels for one mode.
pub fn denoised_mean_kernel(
    features: &[FeatureMatrix],
    h: &PartitionMatrix,
    mode: DenoiseMode,
) -> dnm_core::Result<KernelMatrix> {
    let mut sum = DMatrix::zeros(h.n(), h.n());
    for u in features {
        sum += denoise_kernel(u, h, mode)?;
    }
    KernelMatrix::new_relaxed(sum / features.len().max(1) as f64)
}

/// Kernel k-means on the averaged denoised kernel, for every denoising mode.
pub fn denoise_table(
    features: &[FeatureMatrix],
    truth: &LabelVector,
    kmeans: &KMeansConfig,
) -> dnm_core::Result<Vec<DenoiseResult>> {
    let h = truth.indicator_partition()?;
    DenoiseMode::ALL
        .iter()
        .map(|&mode| {
            let kernel = denoised_mean_kernel(features, &h, mode)?;
            let fit = kernel_kmeans(&kernel, truth.k(), kmeans)?;
            Ok(DenoiseResult {
                mode,
                metrics: ClusteringReport::evaluate(&fit.labels, truth)?,
            })
        })
        .collect()
}

pub fn decompose_features(
    names: &[String],
    features: &[FeatureMatrix],
    truth: &LabelVector,
    dims_from: DimChoice,
    kmeans: &KMeansConfig,
    heatmaps: bool,
) -> dnm_core::Result<DecomposeReport> {
    let h = truth.indicator_partition()?;
    let decs = features
        .iter()
        .map(|u| decompose_noise(u, &h))
        .collect::<dnm_core::Result<Vec<_>>>()?;
    let views = names
        .iter()
        .zip(features.iter().zip(&decs))
        .map(|(name, (u, dec))| view_noise(name.clone(), u, dec, &h, heatmaps))
        .collect::<dnm_core::Result<Vec<_>>>()?;
    let dims: Vec<usize> = features.iter().map(FeatureMatrix::d).collect();
    Ok(DecomposeReport {
        n: h.n(),
        k: h.k(),
        dims_from,
        views,
        alignment: rows(&check_theorem1(features)?),
        theorem2_residual: check_theorem2(&decs, &dims, h.k())?,
        denoise: denoise_table(features, truth, kmeans)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SynthSpec;

    #[test]
    fn zero_noise_views_decompose_to_nothing() {
        let data = SynthSpec::zero_noise(16, 2, 2, 1).generate().unwrap();
        let features = data.features.clone().unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let r = decompose_features(&names, &features, &data.labels, DimChoice::Rank, &KMeansConfig::with_seed(0), true)
            .unwrap();
        for v in &r.views {
            assert_eq!(v.d, 2);
            for x in [v.tr_e, v.tr_n, v.tr_c, v.tr_r, v.lemma1_residual, v.lemma2_residual] {
                assert!(x.abs() < 1e-10, "{v:?}");
            }
            let hm = v.heatmaps.as_ref().unwrap();
            assert_eq!(hm.null_space.len(), 16);
            assert_eq!(hm.null_space[0].len(), 16);
        }
        assert!((r.alignment[0][1] - 2.0).abs() < 1e-10);
        for d in &r.denoise {
            assert_eq!(d.metrics.acc, 1.0);
        }
    }

    #[test]
    fn tilted_view_traces() {
        // One tilt by θ and two extra columns: Tr(E_C) = cos²θ − 1,
        // Tr(E_N) = 2 + sin²θ.
        let theta: f64 = 0.7;
        let spec = SynthSpec {
            n: 20,
            k: 3,
            seed: 9,
            layout: crate::synth::LabelLayout::Blocks,
            generator: crate::synth::Generator::Projector {
                views: vec![crate::synth::NoiseProfile {
                    n_extra: 2,
                    tilt_angles: vec![theta],
                }],
            },
        };
        let data = spec.generate().unwrap();
        let r = decompose_features(
            &["v".into()],
            &data.features.unwrap(),
            &data.labels,
            DimChoice::Rank,
            &KMeansConfig::with_seed(0),
            false,
        )
        .unwrap();
        let v = &r.views[0];
        assert_eq!(v.d, 5);
        assert!((v.tr_c - (theta.cos().powi(2) - 1.0)).abs() < 1e-10);
        assert!((v.tr_n - (2.0 + theta.sin().powi(2))).abs() < 1e-10);
        assert!(v.tr_r.abs() < 1e-10);
        assert!((v.tr_e - 2.0).abs() < 1e-10);
        assert!(v.heatmaps.is_none());
        assert!(r.theorem2_residual < 1e-9);
    }
}
