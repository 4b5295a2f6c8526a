//! Dataset directories: `view_*.mkck` or `view_*.csv` kernels, an optional
//! `labels.txt` and an optional `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use dnm_core::{KernelMatrix, LabelVector};
use serde::{Deserialize, Serialize};

use crate::error::{DnmError, Result};
use crate::io::{self, KernelFormat};
use crate::synth::SynthSpec;

pub const LABELS_FILE: &str = "labels.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Kernel preprocessing applied before the eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocess {
    /// Double-center and rescale to unit diagonal.
    CenterNormalize,
    /// Use the kernels as stored.
    None,
}

/// Optional dataset metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preprocess: Option<Preprocess>,
    /// Generator settings, present for synthetic datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DnmError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| DnmError::format(path, e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub view_files: Vec<PathBuf>,
    pub kernels: Vec<KernelMatrix>,
    pub labels: Option<LabelVector>,
    pub manifest: Option<Manifest>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.kernels.first().map_or(0, KernelMatrix::n)
    }

    pub fn view_names(&self) -> Vec<String> {
        self.view_files
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect()
    }
}

/// Kernel files of a dataset directory in lexicographic order.
pub fn discover_views(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| DnmError::io(dir, e))?;
    let mut views = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| DnmError::io(dir, e))?.path();
        let is_view = path
            .file_name()
            .and_then(|f| f.to_str())
            .is_some_and(|f| f.starts_with("view_"));
        if is_view && path.is_file() && KernelFormat::from_path(&path).is_some() {
            views.push(path);
        }
    }
    views.sort();
    if views.is_empty() {
        return Err(DnmError::format(dir, "no view_*.mkck or view_*.csv kernel files"));
    }
    Ok(views)
}

/// Loads every kernel plus labels and manifest when present; all kernels and
/// the labels must agree on `n`.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let view_files = discover_views(dir)?;
    let kernels = view_files
        .iter()
        .map(|p| io::load_kernel(p))
        .collect::<Result<Vec<_>>>()?;
    let n = kernels[0].n();
    for (path, k) in view_files.iter().zip(&kernels) {
        if k.n() != n {
            return Err(DnmError::format(
                path,
                format!("kernel has n = {} but {} has n = {n}", k.n(), view_files[0].display()),
            ));
        }
    }
    let labels_path = dir.join(LABELS_FILE);
    let labels = if labels_path.is_file() {
        let labels = io::load_labels(&labels_path)?;
        if labels.n() != n {
            return Err(DnmError::format(
                &labels_path,
                format!("{} labels for n = {n} samples", labels.n()),
            ));
        }
        Some(labels)
    } else {
        None
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = if manifest_path.is_file() {
        Some(Manifest::load(&manifest_path)?)
    } else {
        None
    };
    Ok(Dataset {
        dir: dir.to_path_buf(),
        view_files,
        kernels,
        labels,
        manifest,
    })
}
