use alloc::boxed::Box;
use alloc::string::String;

use crate::optimizer::OptimizerTrace;

pub type Result<T> = core::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numeric,
    Infeasible,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("matrix is not symmetric (max deviation {deviation:.3e} exceeds tolerance {tolerance:.3e})")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    #[error("kernel is not positive semi-definite (smallest eigenvalue {min_eigenvalue:.3e}, largest {max_eigenvalue:.3e})")]
    NotPsd {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("sample {index} is degenerate after centering (self-similarity {value:.3e})")]
    DegenerateSample { index: usize, value: f64 },

    #[error("requested dimension {requested} exceeds numerical rank (max feasible {max_feasible})")]
    Rank {
        requested: usize,
        max_feasible: usize,
    },

    #[error("eigensolver failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("view {} cannot reach alignment {k} with partner {partner} (best {best_alignment:.6} at dimension {max_dim})", view.map_or_else(|| alloc::string::String::from("?"), |v| alloc::format!("{v}")))]
    Infeasible {
        view: Option<usize>,
        partner: usize,
        k: usize,
        max_dim: usize,
        best_alignment: f64,
    },

    #[error("no uniform dimension in [{k}, {max_dim}] is jointly feasible")]
    InfeasibleInit { k: usize, max_dim: usize },

    #[error("dimension search did not settle within {iterations} penalty doublings")]
    NotConverged {
        iterations: usize,
        trace: Box<OptimizerTrace>,
    },

    #[error("numeric invariant violated: {0}")]
    Numeric(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Input(_) | Error::NotSymmetric { .. } | Error::NotPsd { .. } => ErrorKind::Input,
            Error::DegenerateSample { .. } => ErrorKind::Input,
            Error::Infeasible { .. } | Error::InfeasibleInit { .. } => ErrorKind::Infeasible,
            Error::Rank { .. }
            | Error::NoConvergence { .. }
            | Error::NotConverged { .. }
            | Error::Numeric(_) => ErrorKind::Numeric,
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
