//! Kernel matrices, cluster label vectors and kernel preprocessing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{symmetric_eig, PartitionMatrix};

/// Relative asymmetry tolerated in a kernel: `|K_ij − K_ji| ≤ 1e-10·max|K|`.
pub const KERNEL_SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Relative PSD tolerance: `λ_min ≥ −1e-8·λ_max`.
pub const KERNEL_PSD_TOLERANCE: f64 = 1e-8;
/// Self-similarity below which a centered sample counts as degenerate.
pub const DEGENERATE_DIAGONAL: f64 = 1e-12;

/// Symmetric positive semi-definite `n×n` similarity matrix for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
}

impl KernelMatrix {
    /// Validates symmetry and positive semi-definiteness. The stored matrix is
    /// exactly symmetrized.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let values = Self::check_symmetric(values)?;
        let (min, max) = extreme_eigenvalues(&values)?;
        if min < -KERNEL_PSD_TOLERANCE * max.max(0.0) {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        Ok(KernelMatrix { values })
    }

    /// Accepts indefinite symmetric matrices, logging a warning instead of
    /// failing. Used for diagnostic kernels such as denoised projectors.
    pub fn new_relaxed(values: DMatrix<f64>) -> Result<Self> {
        let values = Self::check_symmetric(values)?;
        let (min, max) = extreme_eigenvalues(&values)?;
        if min < -KERNEL_PSD_TOLERANCE * max.max(0.0) {
            log::warn!("kernel is indefinite: λ_min = {min:.3e}, λ_max = {max:.3e}");
        }
        Ok(KernelMatrix { values })
    }

    /// Skips the eigenvalue check; symmetry is still enforced exactly.
    pub(crate) fn from_symmetric_unchecked(mut values: DMatrix<f64>) -> Self {
        linalg::symmetrize(&mut values);
        KernelMatrix { values }
    }

    fn check_symmetric(mut values: DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = values.nrows();
        if n == 0 || values.ncols() != n {
            return Err(Error::input(format!(
                "kernel must be square and non-empty, got {}×{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if !linalg::is_finite(&values) {
            return Err(Error::input("kernel has non-finite entries"));
        }
        let deviation = linalg::symmetry_deviation(&values);
        let tolerance = KERNEL_SYMMETRY_TOLERANCE * linalg::max_abs(&values);
        if deviation > tolerance {
            return Err(Error::NotSymmetric {
                deviation,
                tolerance,
            });
        }
        linalg::symmetrize(&mut values);
        Ok(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn trace(&self) -> f64 {
        self.values.trace()
    }

    /// Elementwise mean of same-sized kernels.
    pub fn mean(kernels: &[KernelMatrix]) -> Result<KernelMatrix> {
        let first = kernels
            .first()
            .ok_or_else(|| Error::input("kernel list is empty"))?;
        let n = first.n();
        let mut sum = DMatrix::zeros(n, n);
        for (p, kern) in kernels.iter().enumerate() {
            if kern.n() != n {
                return Err(Error::input(format!(
                    "kernel {p} has size {} but kernel 0 has size {n}",
                    kern.n()
                )));
            }
            sum += &kern.values;
        }
        sum /= kernels.len() as f64;
        Ok(KernelMatrix { values: sum })
    }
}

fn extreme_eigenvalues(values: &DMatrix<f64>) -> Result<(f64, f64)> {
    let es = symmetric_eig(values)?;
    let ev = es.eigenvalues();
    Ok((ev[ev.len() - 1], ev[0]))
}

/// Kernel function used by [`build_kernel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    Polynomial { degree: u32, coef: f64 },
}

/// Evaluates `spec` on every pair of rows of `features` (`n×dim`).
pub fn build_kernel(features: &DMatrix<f64>, spec: KernelSpec) -> Result<KernelMatrix> {
    let n = features.nrows();
    if n < 2 {
        return Err(Error::input("building a kernel needs at least two samples"));
    }
    if !linalg::is_finite(features) {
        return Err(Error::input("feature matrix has non-finite entries"));
    }
    let gram = features * features.transpose();
    let values = match spec {
        KernelSpec::Linear => gram,
        KernelSpec::Rbf { gamma } => {
            if !(gamma > 0.0) || !gamma.is_finite() {
                return Err(Error::input(format!("rbf gamma must be positive, got {gamma}")));
            }
            let mut k = DMatrix::zeros(n, n);
            for j in 0..n {
                k[(j, j)] = 1.0;
                for i in (j + 1)..n {
                    let dist_sq = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(0.0);
                    let v = (-gamma * dist_sq).exp();
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            k
        }
        KernelSpec::Polynomial { degree, coef } => {
            if !coef.is_finite() {
                return Err(Error::input("polynomial coefficient must be finite"));
            }
            gram.map(|g| (g + coef).powi(degree as i32))
        }
    };
    KernelMatrix::new(values)
}

/// Double-centers `K` in feature space and rescales it to unit diagonal:
/// `K_c = J·K·J` with `J = I − 11ᵀ/n`, then `K_ij / √(K_ii·K_jj)`.
pub fn center_and_normalize(kernel: &KernelMatrix) -> Result<KernelMatrix> {
    let centered = center(kernel.values());
    normalize_unit_diagonal(&centered).map(KernelMatrix::from_symmetric_unchecked)
}

/// `J·K·J`, computed from row, column and grand means.
pub fn center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    let inv = 1.0 / n as f64;
    let col_means: Vec<f64> = k.column_iter().map(|c| c.sum() * inv).collect();
    let row_means: Vec<f64> = k.row_iter().map(|r| r.sum() * inv).collect();
    let grand = col_means.iter().sum::<f64>() * inv;
    DMatrix::from_fn(n, n, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// `K_ij / √(K_ii·K_jj)`. Fails on any diagonal entry `≤ 1e-12`.
pub fn normalize_unit_diagonal(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.nrows();
    let mut scale = vec![0.0; n];
    for i in 0..n {
        let v = k[(i, i)];
        if !(v > DEGENERATE_DIAGONAL) {
            return Err(Error::DegenerateSample { index: i, value: v });
        }
        scale[i] = 1.0 / v.sqrt();
    }
    let mut out = DMatrix::from_fn(n, n, |i, j| k[(i, j)] * scale[i] * scale[j]);
    for i in 0..n {
        out[(i, i)] = 1.0;
    }
    Ok(out)
}

/// Hard cluster assignment, stored as 0-based ids in `0..k`.
///
/// Files and user-facing output use 1-based ids; see
/// [`LabelVector::from_one_based`] and [`LabelVector::to_one_based`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    k: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("cluster count must be at least 1"));
        }
        if labels.len() < k {
            return Err(Error::input(format!(
                "{} samples cannot hold {k} clusters",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::input(format!("label {bad} outside 0..{k}")));
        }
        Ok(LabelVector { labels, k })
    }

    pub fn from_one_based(labels: &[usize], k: usize) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::input("1-based labels cannot contain 0"));
        }
        Self::new(labels.iter().map(|&l| l - 1).collect(), k)
    }

    /// Maps arbitrary ids onto `0..k` in ascending id order.
    pub fn from_ids<T: Ord + Copy>(ids: &[T]) -> Result<Self> {
        let mut distinct: Vec<T> = ids.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let labels = ids
            .iter()
            .map(|id| distinct.binary_search(id).unwrap_or(0))
            .collect();
        Self::new(labels, distinct.len())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l + 1).collect()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Normalized indicator `Y·diag(n_r)^{-1/2}`, the partition matrix whose
    /// projector is block-diagonal with blocks `1·1ᵀ/n_r`.
    pub fn indicator_partition(&self) -> Result<PartitionMatrix> {
        let sizes = self.cluster_sizes();
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::input(format!("cluster {empty} is empty")));
        }
        let mut h = DMatrix::zeros(self.n(), self.k);
        for (i, &l) in self.labels.iter().enumerate() {
            h[(i, l)] = 1.0 / (sizes[l] as f64).sqrt();
        }
        PartitionMatrix::new(h)
    }
}
