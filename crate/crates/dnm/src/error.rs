use std::fmt;
use std::path::PathBuf;

use dnm_core::ErrorKind;

pub type Result<T> = std::result::Result<T, DnmError>;

/// Pipeline stage, used to locate numerical failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Preprocess,
    Eigen,
    Optimize,
    Fusion,
    Cluster,
    Metrics,
    Decompose,
    Synth,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Preprocess => "preprocess",
            Stage::Eigen => "eigen",
            Stage::Optimize => "optimize",
            Stage::Fusion => "fusion",
            Stage::Cluster => "cluster",
            Stage::Metrics => "metrics",
            Stage::Decompose => "decompose",
            Stage::Synth => "synth",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DnmError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Config(String),

    #[error("{stage} stage{}: {source}", view.map(|v| format!(" (view {v})")).unwrap_or_default())]
    Stage {
        stage: Stage,
        view: Option<usize>,
        #[source]
        source: dnm_core::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl DnmError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DnmError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        DnmError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for bad input, 3 for numerical failure, 4 for an
    /// infeasible alignment problem.
    pub fn exit_code(&self) -> u8 {
        match self {
            DnmError::Stage { source, .. } => match source.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Numeric => 3,
                ErrorKind::Infeasible => 4,
            },
            _ => 2,
        }
    }
}

/// Attaches a stage (and optionally a view) to core errors.
pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T>;
    fn at_view(self, stage: Stage, view: usize) -> Result<T>;
}

impl<T> AtStage<T> for dnm_core::Result<T> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|source| DnmError::Stage {
            stage,
            view: None,
            source,
        })
    }

    fn at_view(self, stage: Stage, view: usize) -> Result<T> {
        self.map_err(|source| DnmError::Stage {
            stage,
            view: Some(view),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let stage = |source| DnmError::Stage {
            stage: Stage::Optimize,
            view: Some(1),
            source,
        };
        assert_eq!(stage(dnm_core::Error::Input("x".into())).exit_code(), 2);
        assert_eq!(stage(dnm_core::Error::Numeric("x".into())).exit_code(), 3);
        assert_eq!(stage(dnm_core::Error::InfeasibleInit { k: 2, max_dim: 3 }).exit_code(), 4);
        assert_eq!(DnmError::format("a.mkck", "bad").exit_code(), 2);
        assert_eq!(DnmError::Config("x".into()).exit_code(), 2);
    }

    #[test]
    fn stage_errors_name_stage_and_view() {
        let e = DnmError::Stage {
            stage: Stage::Eigen,
            view: Some(2),
            source: dnm_core::Error::NoConvergence { iterations: 30 },
        };
        let msg = e.to_string();
        assert!(msg.starts_with("eigen stage (view 2):"), "{msg}");
    }
}
