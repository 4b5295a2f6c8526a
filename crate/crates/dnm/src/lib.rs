//! File formats, dataset handling, reports and the `dnm` command line for
//! multiple kernel clustering by dual noise minimization.
//!
//! The numerical work lives in [`dnm_core`]; this crate reads kernels from
//! disk, runs the pipeline and writes JSON reports.

pub mod dataset;
pub mod decompose;
pub mod error;
pub mod io;
pub mod json;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use dataset::{load_dataset, Dataset, Manifest, Preprocess};
pub use error::{DnmError, Result, Stage};
pub use pipeline::{run_pipeline, RunConfig};
pub use report::{ClusterReport, Mode, RunReport};
pub use synth::{write_dataset, SynthSpec};
