//! Spectral machinery: eigensystems, truncated feature matrices, Lloyd's
//! k-means and kernel k-means (single-kernel and averaged).

mod eigen;
mod kmeans;

pub use eigen::{symmetric_eig, SYMMETRY_TOLERANCE};
pub use kmeans::{
    average_kernel_kmeans, cluster_rows, kernel_kmeans, kernel_kmeans_from_eigen, lloyd,
    lloyd_restarts, KMeansConfig, KMeansRun, KernelKMeans, LloydOutcome,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Orthonormality tolerance for feature and partition matrices.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// Eigenvalues at or below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Full spectral decomposition of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub(crate) fn from_sorted(values: DVector<f64>, vectors: DMatrix<f64>) -> Self {
        EigenSystem { values, vectors }
    }

    /// Builds an eigensystem from externally computed parts. Values must be
    /// sorted descending and the vectors orthonormal.
    pub fn from_parts(values: DVector<f64>, vectors: DMatrix<f64>) -> Result<Self> {
        let n = values.len();
        if vectors.nrows() != n || vectors.ncols() != n {
            return Err(Error::input("eigenvector matrix must be n×n"));
        }
        if values.as_slice().windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::input("eigenvalues must be sorted descending"));
        }
        let err = linalg::orthonormality_error(&vectors);
        if err > ORTHONORMAL_TOLERANCE {
            return Err(Error::Numeric(alloc::format!(
                "eigenvectors not orthonormal (error {err:.3e})"
            )));
        }
        Ok(EigenSystem { values, vectors })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Number of eigenvalues strictly above `RANK_TOLERANCE · λ₁`.
    pub fn numerical_rank(&self) -> usize {
        let top = self.values[0];
        if top <= 0.0 {
            return 0;
        }
        self.values
            .iter()
            .take_while(|&&l| l > RANK_TOLERANCE * top)
            .count()
    }

    /// Sum of the `d` leading eigenvalues.
    pub fn leading_sum(&self, d: usize) -> f64 {
        self.values.iter().take(d).sum()
    }

    /// `V·diag(λ)·Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.values[j];
        }
        scaled * self.vectors.transpose()
    }
}

macro_rules! orthonormal_matrix {
    ($(#[$meta:meta])* $name:ident, $dim:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            values: DMatrix<f64>,
        }

        impl $name {
            /// Wraps `values`, checking `‖MᵀM − I‖_max ≤ 1e-8`.
            pub fn new(values: DMatrix<f64>) -> Result<Self> {
                if values.ncols() == 0 || values.ncols() > values.nrows() {
                    return Err(Error::input(alloc::format!(
                        "{} must be n×c with 1 ≤ c ≤ n, got {}×{}",
                        stringify!($name),
                        values.nrows(),
                        values.ncols()
                    )));
                }
                let err = linalg::orthonormality_error(&values);
                if err > ORTHONORMAL_TOLERANCE {
                    return Err(Error::Numeric(alloc::format!(
                        "{} columns not orthonormal (error {err:.3e})",
                        stringify!($name)
                    )));
                }
                Ok($name { values })
            }

            pub(crate) fn new_unchecked(values: DMatrix<f64>) -> Self {
                $name { values }
            }

            pub fn n(&self) -> usize {
                self.values.nrows()
            }

            pub fn $dim(&self) -> usize {
                self.values.ncols()
            }

            pub fn values(&self) -> &DMatrix<f64> {
                &self.values
            }

            pub fn into_inner(self) -> DMatrix<f64> {
                self.values
            }

            /// The orthogonal projector onto the column span.
            pub fn projector(&self) -> DMatrix<f64> {
                linalg::projector(&self.values)
            }
        }
    };
}

orthonormal_matrix!(
    /// `n×k` relaxed cluster assignment with orthonormal columns.
    PartitionMatrix,
    k
);

orthonormal_matrix!(
    /// `n×d` view representation with orthonormal columns; `d` is the tunable
    /// dimension.
    FeatureMatrix,
    d
);

impl From<PartitionMatrix> for FeatureMatrix {
    fn from(h: PartitionMatrix) -> Self {
        FeatureMatrix::new_unchecked(h.values)
    }
}

impl From<FeatureMatrix> for PartitionMatrix {
    fn from(u: FeatureMatrix) -> Self {
        PartitionMatrix::new_unchecked(u.values)
    }
}

/// The `d` leading eigenvectors of `es` as a feature matrix.
///
/// Fails with [`Error::Rank`] when `λ_d` is not above the rank threshold; the
/// error reports the largest admissible `d`.
pub fn truncate_features(es: &EigenSystem, d: usize) -> Result<FeatureMatrix> {
    let n = es.n();
    if d == 0 || d > n {
        return Err(Error::input(alloc::format!(
            "truncation dimension {d} outside [1, {n}]"
        )));
    }
    let rank = es.numerical_rank();
    if d > rank {
        return Err(Error::Rank {
            requested: d,
            max_feasible: rank,
        });
    }
    Ok(FeatureMatrix::new_unchecked(es.vectors.columns(0, d).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::LabelVector;
    use crate::synth;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block_kernel(sizes: &[usize]) -> DMatrix<f64> {
        let n: usize = sizes.iter().sum();
        let mut k = DMatrix::zeros(n, n);
        let mut start = 0;
        for &s in sizes {
            k.view_mut((start, start), (s, s)).fill(1.0 / s as f64);
            start += s;
        }
        k
    }

    #[test]
    fn full_truncation_of_identity() {
        let es = symmetric_eig(&DMatrix::identity(3, 3)).unwrap();
        let u = truncate_features(&es, 3).unwrap();
        assert!((u.projector() - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn full_rank_truncation_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = synth::gaussian_matrix(8, 8, &mut rng);
        let es = symmetric_eig(&(&x * x.transpose())).unwrap();
        let u = truncate_features(&es, 8).unwrap();
        assert!((u.projector() - DMatrix::<f64>::identity(8, 8)).abs().max() <= 1e-8);
    }

    #[test]
    fn block_kernel_truncation_is_block_projector() {
        let k = block_kernel(&[3, 4]);
        let es = symmetric_eig(&k).unwrap();
        let u = truncate_features(&es, 2).unwrap();
        let expect = LabelVector::new(vec![0, 0, 0, 1, 1, 1, 1], 2)
            .unwrap()
            .indicator_partition()
            .unwrap()
            .projector();
        assert!((u.projector() - expect).abs().max() <= 1e-8);
    }

    #[test]
    fn truncation_beyond_rank_reports_limit() {
        let es = symmetric_eig(&block_kernel(&[2, 2])).unwrap();
        assert_eq!(es.numerical_rank(), 2);
        match truncate_features(&es, 3) {
            Err(Error::Rank { requested: 3, max_feasible: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(truncate_features(&es, 0).is_err());
        assert!(truncate_features(&es, 5).is_err());
    }

    #[test]
    fn orthonormal_wrappers_validate() {
        assert!(PartitionMatrix::new(DMatrix::identity(4, 2)).is_ok());
        assert!(PartitionMatrix::new(DMatrix::from_element(3, 1, 1.0)).is_err());
        assert!(FeatureMatrix::new(DMatrix::identity(2, 3)).is_err());
        assert!(FeatureMatrix::new(DMatrix::zeros(2, 0)).is_err());
        let f = FeatureMatrix::new(DMatrix::identity(4, 3)).unwrap();
        assert_eq!((f.n(), f.d()), (4, 3));
    }

    #[test]
    fn eigensystem_from_parts_validates() {
        let v = DMatrix::identity(2, 2);
        assert!(EigenSystem::from_parts(DVector::from_vec(vec![2.0, 1.0]), v.clone()).is_ok());
        assert!(EigenSystem::from_parts(DVector::from_vec(vec![1.0, 2.0]), v.clone()).is_err());
        assert!(EigenSystem::from_parts(DVector::from_vec(vec![2.0, 1.0]), v * 2.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn truncation_is_a_prefix(n in 3usize..20, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = synth::gaussian_matrix(n, n, &mut rng);
            let es = symmetric_eig(&(&x * x.transpose())).unwrap();
            let rank = es.numerical_rank();
            for d in 1..rank {
                let a = truncate_features(&es, d).unwrap();
                let b = truncate_features(&es, d + 1).unwrap();
                prop_assert_eq!(a.values(), &b.values().columns(0, d).into_owned());
            }
        }
    }
}
