//! Seeded generators for synthetic multi-view data.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_kernel, KernelMatrix, KernelSpec, LabelVector};
use crate::linalg;

/// `rows×cols` matrix of independent standard normal draws.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `c` random orthonormal columns in `R^n`, orthogonal to `against` if given.
pub fn random_orthonormal<R: Rng + ?Sized>(
    n: usize,
    c: usize,
    against: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let taken = against.map_or(0, |a| a.ncols());
    if c + taken > n {
        return Err(Error::input(format!(
            "cannot draw {c} orthonormal directions beside {taken} in R^{n}"
        )));
    }
    // A Gaussian draw is rank-deficient with probability zero; retry on the
    // off chance that cancellation wipes out a column.
    for _ in 0..8 {
        let g = gaussian_matrix(n, c, rng);
        if let Some(q) = linalg::orthonormalize_against(&g, against) {
            return Ok(q);
        }
    }
    Err(Error::Numeric("could not draw an orthonormal basis".into()))
}

/// `n` labels in `0..k` with cluster sizes differing by at most one, in
/// shuffled order.
pub fn balanced_labels<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<LabelVector> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k.max(1)).collect();
    labels.shuffle(rng);
    LabelVector::new(labels, k)
}

/// `n` labels in `0..k`, contiguous blocks of (near) equal size. Handy when a
/// block-diagonal picture is wanted.
pub fn block_labels(n: usize, k: usize) -> Result<LabelVector> {
    if k == 0 {
        return Err(Error::input("cluster count must be at least 1"));
    }
    LabelVector::new((0..n).map(|i| i * k / n).collect(), k)
}

/// One view of the blob generator.
///
/// Every sample gets `signal_dims` coordinates equal to its cluster centre plus
/// unit Gaussian noise, the centres themselves being Gaussian with standard
/// deviation `separation`. On top come `nuisance_dims` coordinates of pure
/// Gaussian noise with standard deviation `nuisance_scale`, drawn afresh for
/// every view, so they carry no cluster information and are not shared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobViewSpec {
    pub signal_dims: usize,
    pub separation: f64,
    pub nuisance_dims: usize,
    pub nuisance_scale: f64,
    pub kernel: KernelSpec,
}

/// Feature matrix (`n×(signal_dims + nuisance_dims)`) of one blob view.
pub fn blob_features<R: Rng + ?Sized>(
    labels: &LabelVector,
    spec: &BlobViewSpec,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if spec.signal_dims == 0 {
        return Err(Error::input("a blob view needs at least one signal dimension"));
    }
    for (name, v) in [("separation", spec.separation), ("nuisance_scale", spec.nuisance_scale)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::input(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    let n = labels.n();
    let centers = gaussian_matrix(labels.k(), spec.signal_dims, rng) * spec.separation;
    let noise = gaussian_matrix(n, spec.signal_dims, rng);
    let nuisance = gaussian_matrix(n, spec.nuisance_dims, rng) * spec.nuisance_scale;
    let mut x = DMatrix::zeros(n, spec.signal_dims + spec.nuisance_dims);
    for (i, &c) in labels.as_slice().iter().enumerate() {
        for j in 0..spec.signal_dims {
            x[(i, j)] = centers[(c, j)] + noise[(i, j)];
        }
        for j in 0..spec.nuisance_dims {
            x[(i, spec.signal_dims + j)] = nuisance[(i, j)];
        }
    }
    Ok(x)
}

/// Kernels of several blob views over the same labels, drawn in order from `rng`.
pub fn blob_kernels<R: Rng + ?Sized>(
    labels: &LabelVector,
    views: &[BlobViewSpec],
    rng: &mut R,
) -> Result<Vec<KernelMatrix>> {
    views
        .iter()
        .map(|spec| build_kernel(&blob_features(labels, spec, rng)?, spec.kernel))
        .collect()
}
