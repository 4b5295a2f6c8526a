//! Multiple kernel clustering by dual noise minimization.
//!
//! Each view's kernel is reduced to a feature matrix `U_p` made of its leading
//! eigenvectors. The noise between `U_p·U_pᵀ` and a consensus partition splits
//! into a null-space part, which grows with the dimension `d_p`, and a
//! column-space part, which is ruled out by requiring every pair of views to
//! align: `‖U_pᵀU_q‖_F² ≥ k`. The [`optimizer`] picks the smallest dimensions
//! meeting those constraints and [`fusion`] turns the resulting feature
//! matrices into a consensus clustering.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, reports and the
//! command line live in the companion `dnm` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fusion;
pub mod kernel;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod optimizer;
pub mod spectral;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use kernel::{build_kernel, center_and_normalize, KernelMatrix, KernelSpec, LabelVector};
pub use spectral::{
    symmetric_eig, truncate_features, EigenSystem, FeatureMatrix, KMeansConfig, PartitionMatrix,
};
