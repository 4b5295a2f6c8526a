//! Late fusion of per-view feature matrices into a consensus partition.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::LabelVector;
use crate::spectral::{
    cluster_rows, symmetric_eig, FeatureMatrix, KMeansConfig, KMeansRun, PartitionMatrix,
    RANK_TOLERANCE,
};

/// How the leading left singular vectors of `[U_1 … U_m]` were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionRoute {
    /// Thin SVD of the `n×Σd_p` concatenation.
    Svd,
    /// Eigendecomposition of `Σ_p U_p·U_pᵀ`.
    Eigen,
}

#[derive(Debug, Clone)]
pub struct Consensus {
    pub partition: PartitionMatrix,
    pub labels: LabelVector,
    pub runs: KMeansRun,
    pub route: FusionRoute,
    /// Leading `k` eigenvalues of `Σ_p U_p·U_pᵀ` (squared singular values).
    pub spectrum: Vec<f64>,
}

fn concatenate(views: &[FeatureMatrix]) -> Result<DMatrix<f64>> {
    let first = views
        .first()
        .ok_or_else(|| Error::input("no feature matrices to fuse"))?;
    let n = first.n();
    if let Some((p, v)) = views.iter().enumerate().find(|(_, v)| v.n() != n) {
        return Err(Error::input(alloc::format!(
            "view {p} has {} rows, view 0 has {n}",
            v.n()
        )));
    }
    let total: usize = views.iter().map(FeatureMatrix::d).sum();
    let mut concat = DMatrix::zeros(n, total);
    let mut offset = 0;
    for v in views {
        concat.columns_mut(offset, v.d()).copy_from(v.values());
        offset += v.d();
    }
    Ok(concat)
}

fn check_rank(spectrum: &[f64], k: usize) -> Result<()> {
    let top = spectrum.first().copied().unwrap_or(0.0);
    let rank = spectrum
        .iter()
        .take_while(|&&s| top > 0.0 && s > RANK_TOLERANCE * top)
        .count();
    if rank < k {
        return Err(Error::Rank {
            requested: k,
            max_feasible: rank,
        });
    }
    Ok(())
}

/// Top-`k` left singular vectors of the concatenation, with the squared
/// singular values in descending order.
pub fn consensus_via_svd(views: &[FeatureMatrix], k: usize) -> Result<(PartitionMatrix, Vec<f64>)> {
    let concat = concatenate(views)?;
    if k == 0 || k > concat.nrows() {
        return Err(Error::input(alloc::format!("cannot extract {k} directions")));
    }
    let svd = concat.svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Numeric("SVD did not return left singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let spectrum: Vec<f64> = order.iter().map(|&i| svd.singular_values[i] * svd.singular_values[i]).collect();
    check_rank(&spectrum, k)?;
    let cols: Vec<_> = order[..k].iter().map(|&i| u.column(i).into_owned()).collect();
    Ok((
        PartitionMatrix::new(DMatrix::from_columns(&cols))?,
        spectrum,
    ))
}

/// Top-`k` eigenvectors of `Σ_p U_p·U_pᵀ`.
pub fn consensus_via_eigen(views: &[FeatureMatrix], k: usize) -> Result<(PartitionMatrix, Vec<f64>)> {
    let concat = concatenate(views)?;
    if k == 0 || k > concat.nrows() {
        return Err(Error::input(alloc::format!("cannot extract {k} directions")));
    }
    let sum = &concat * concat.transpose();
    let es = symmetric_eig(&sum)?;
    let spectrum: Vec<f64> = es.eigenvalues().iter().copied().collect();
    check_rank(&spectrum, k)?;
    Ok((
        PartitionMatrix::new(es.eigenvectors().columns(0, k).into_owned())?,
        spectrum,
    ))
}

/// Fuses the views into `H*` and clusters its rows.
///
/// The eigen route is used when `Σd_p > n`, the SVD route otherwise; both give
/// the same projector `H*·H*ᵀ`.
pub fn consensus_partition(
    views: &[FeatureMatrix],
    k: usize,
    config: &KMeansConfig,
) -> Result<Consensus> {
    let n = views.first().map_or(0, FeatureMatrix::n);
    let total: usize = views.iter().map(FeatureMatrix::d).sum();
    let (route, (partition, mut spectrum)) = if total > n {
        (FusionRoute::Eigen, consensus_via_eigen(views, k)?)
    } else {
        (FusionRoute::Svd, consensus_via_svd(views, k)?)
    };
    spectrum.truncate(k);
    let (labels, runs) = cluster_rows(partition.values(), k, config)?;
    Ok(Consensus {
        partition,
        labels,
        runs,
        route,
        spectrum,
    })
}
