//! Synthetic datasets written in the on-disk layout, described by a spec that
//! is stored as the dataset manifest so the files can be regenerated.

use std::fs;
use std::path::{Path, PathBuf};

use dnm_core::noise::make_noisy_view;
use dnm_core::synth::{balanced_labels, blob_kernels, block_labels, BlobViewSpec};
use dnm_core::{Error, FeatureMatrix, KernelSpec, LabelVector, PartitionMatrix};
use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Manifest, Preprocess, LABELS_FILE, MANIFEST_FILE};
use crate::error::{AtStage, DnmError, Result, Stage};
use crate::io::{self, KernelFormat};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelLayout {
    /// Contiguous clusters, so kernels look block diagonal.
    Blocks,
    /// Balanced clusters in random order.
    #[default]
    Shuffled,
}

/// Noise injected into one projector view, see [`make_noisy_view`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub n_extra: usize,
    #[serde(default)]
    pub tilt_angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Generator {
    /// Views `U_p·U_pᵀ` built from the true partition with controlled noise.
    Projector { views: Vec<NoiseProfile> },
    /// Kernels over Gaussian blobs with private nuisance coordinates.
    Blobs { views: Vec<BlobViewSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    #[serde(default)]
    pub layout: LabelLayout,
    pub generator: Generator,
}

/// Generated views and ground truth.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub labels: LabelVector,
    pub kernels: Vec<DMatrix<f64>>,
    /// Orthonormal view bases, for projector views.
    pub features: Option<Vec<FeatureMatrix>>,
}

impl SynthData {
    pub fn truth(&self) -> dnm_core::Result<PartitionMatrix> {
        self.labels.indicator_partition()
    }
}

impl SynthSpec {
    /// `m` views equal to the true cluster subspace.
    pub fn zero_noise(n: usize, k: usize, m: usize, seed: u64) -> Self {
        SynthSpec {
            n,
            k,
            seed,
            layout: LabelLayout::Shuffled,
            generator: Generator::Projector {
                views: vec![
                    NoiseProfile {
                        n_extra: 0,
                        tilt_angles: Vec::new(),
                    };
                    m
                ],
            },
        }
    }

    /// Two views over four contiguous clusters of 30: one whose every cluster
    /// direction is tilted far out of the cluster subspace, and one with a
    /// milder tilt plus four extra directions.
    pub fn figure2(seed: u64) -> Self {
        SynthSpec {
            n: 120,
            k: 4,
            seed,
            layout: LabelLayout::Blocks,
            generator: Generator::Projector {
                views: vec![
                    NoiseProfile {
                        n_extra: 0,
                        tilt_angles: vec![1.45; 4],
                    },
                    NoiseProfile {
                        n_extra: 4,
                        tilt_angles: vec![1.1; 4],
                    },
                ],
            },
        }
    }

    /// Three RBF views of four Gaussian blobs in 300 samples. Each view adds
    /// four private nuisance coordinates whose spread exceeds the blob
    /// separation.
    pub fn noisy_blobs(seed: u64) -> Self {
        let view = BlobViewSpec {
            signal_dims: 3,
            separation: 1.5,
            nuisance_dims: 4,
            nuisance_scale: 2.5,
            kernel: KernelSpec::Rbf { gamma: 0.01 },
        };
        SynthSpec {
            n: 300,
            k: 4,
            seed,
            layout: LabelLayout::Shuffled,
            generator: Generator::Blobs {
                views: vec![view; 3],
            },
        }
    }

    pub fn m(&self) -> usize {
        match &self.generator {
            Generator::Projector { views } => views.len(),
            Generator::Blobs { views } => views.len(),
        }
    }

    /// Preprocessing the generated kernels are meant to be run with.
    pub fn preprocess(&self) -> Preprocess {
        match self.generator {
            Generator::Projector { .. } => Preprocess::None,
            Generator::Blobs { .. } => Preprocess::CenterNormalize,
        }
    }

    pub fn validate(&self) -> dnm_core::Result<()> {
        let fail = |msg: String| Err(Error::Input(msg));
        if self.k < 2 {
            return fail(format!("k must be at least 2, got {}", self.k));
        }
        if self.n < 4 * self.k {
            return fail(format!("n = {} is below 4k = {}", self.n, 4 * self.k));
        }
        if self.m() == 0 {
            return fail("at least one view is required".into());
        }
        if let Generator::Projector { views } = &self.generator {
            for (p, v) in views.iter().enumerate() {
                if v.tilt_angles.len() > self.k {
                    return fail(format!("view {p}: {} tilt angles for k = {}", v.tilt_angles.len(), self.k));
                }
                let needed = self.k + v.tilt_angles.len() + v.n_extra;
                if needed > self.n {
                    return fail(format!("view {p} needs {needed} orthogonal directions but n = {}", self.n));
                }
            }
        }
        Ok(())
    }

    pub fn generate(&self) -> dnm_core::Result<SynthData> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let labels = match self.layout {
            LabelLayout::Blocks => block_labels(self.n, self.k)?,
            LabelLayout::Shuffled => balanced_labels(self.n, self.k, &mut rng)?,
        };
        match &self.generator {
            Generator::Projector { views } => {
                let h = labels.indicator_partition()?;
                let features = views
                    .iter()
                    .map(|v| make_noisy_view(&h, v.n_extra, &v.tilt_angles, rng.next_u64()))
                    .collect::<dnm_core::Result<Vec<_>>>()?;
                Ok(SynthData {
                    kernels: features.iter().map(FeatureMatrix::projector).collect(),
                    features: Some(features),
                    labels,
                })
            }
            Generator::Blobs { views } => {
                let kernels = blob_kernels(&labels, views, &mut rng)?;
                Ok(SynthData {
                    kernels: kernels.into_iter().map(|k| k.into_inner()).collect(),
                    features: None,
                    labels,
                })
            }
        }
    }
}

/// File name of view `p` among `m`, zero padded so lexicographic order is
/// view order.
pub fn view_file_name(p: usize, m: usize, format: KernelFormat) -> String {
    let width = (m.saturating_sub(1)).to_string().len().max(2);
    format!("view_{p:0width$}.{}", format.extension())
}

/// Generates `spec` into `dir` (created if missing): view kernels, labels and
/// the manifest. Returns the written paths.
pub fn write_dataset(spec: &SynthSpec, dir: &Path, format: KernelFormat) -> Result<Vec<PathBuf>> {
    let data = spec.generate().at(Stage::Synth)?;
    fs::create_dir_all(dir).map_err(|e| DnmError::io(dir, e))?;
    let mut written = Vec::new();
    for (p, k) in data.kernels.iter().enumerate() {
        let path = dir.join(view_file_name(p, data.kernels.len(), format));
        io::save_kernel(&path, k)?;
        written.push(path);
    }
    let labels = dir.join(LABELS_FILE);
    io::save_labels(&labels, &data.labels)?;
    written.push(labels);
    let manifest = Manifest {
        preprocess: Some(spec.preprocess()),
        synth: Some(spec.clone()),
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, crate::json::to_string(&manifest)?).map_err(|e| DnmError::io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dnm_core::linalg;

    #[test]
    fn validation() {
        assert!(SynthSpec::zero_noise(8, 2, 2, 0).validate().is_ok());
        assert!(SynthSpec::zero_noise(7, 2, 2, 0).validate().is_err());
        assert!(SynthSpec::zero_noise(8, 1, 2, 0).validate().is_err());
        assert!(SynthSpec::zero_noise(8, 2, 0, 0).validate().is_err());
        let mut s = SynthSpec::figure2(0);
        s.n = 20;
        if let Generator::Projector { views } = &mut s.generator {
            views[1].n_extra = 9;
        }
        // 4 + 4 tilts + 9 extra = 17 fits, 18 does not.
        assert!(s.validate().is_ok());
        if let Generator::Projector { views } = &mut s.generator {
            views[1].n_extra = 13;
        }
        assert!(s.generate().is_err());
    }

    #[test]
    fn zero_noise_views_are_the_cluster_projector() {
        let data = SynthSpec::zero_noise(12, 3, 2, 5).generate().unwrap();
        let truth = data.truth().unwrap().projector();
        for k in &data.kernels {
            assert!(linalg::max_abs(&(k - &truth)) < 1e-12);
        }
    }

    #[test]
    fn generation_is_seeded() {
        for spec in [SynthSpec::figure2(3), SynthSpec::noisy_blobs(3)] {
            let a = spec.generate().unwrap();
            let b = spec.generate().unwrap();
            assert_eq!(a.kernels, b.kernels);
            assert_eq!(a.labels, b.labels);
            let mut other = spec.clone();
            other.seed = 4;
            assert_ne!(other.generate().unwrap().kernels, a.kernels);
        }
    }

    #[test]
    fn presets_have_the_stated_shape() {
        let fig = SynthSpec::figure2(0).generate().unwrap();
        assert_eq!(fig.kernels.len(), 2);
        let dims: Vec<usize> = fig.features.unwrap().iter().map(FeatureMatrix::d).collect();
        assert_eq!(dims, [4, 8]);
        assert_eq!(fig.labels.cluster_sizes(), [30, 30, 30, 30]);
        let blobs = SynthSpec::noisy_blobs(0).generate().unwrap();
        assert_eq!(blobs.kernels.len(), 3);
        assert_eq!(blobs.kernels[0].shape(), (300, 300));
        assert_eq!(blobs.labels.cluster_sizes(), [75; 4]);
    }

    #[test]
    fn manifest_round_trip() {
        for spec in [SynthSpec::figure2(1), SynthSpec::noisy_blobs(2)] {
            let manifest = Manifest {
                preprocess: Some(spec.preprocess()),
                synth: Some(spec),
            };
            let text = crate::json::to_string(&manifest).unwrap();
            let back: Manifest = serde_json::from_str(&text).unwrap();
            assert_eq!(back, manifest);
        }
    }

    #[test]
    fn view_names_sort_in_view_order() {
        assert_eq!(view_file_name(3, 4, KernelFormat::Mkck), "view_03.mkck");
        assert_eq!(view_file_name(7, 120, KernelFormat::Csv), "view_007.csv");
        let mut names: Vec<String> = (0..12).map(|p| view_file_name(p, 12, KernelFormat::Mkck)).collect();
        let order = names.clone();
        names.sort();
        assert_eq!(names, order);
    }
}
