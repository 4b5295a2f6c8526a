#![allow(dead_code)]

use std::path::Path;

use dnm::io;
use dnm_core::LabelVector;
use nalgebra::DMatrix;

/// Kernel with all-ones blocks on the given contiguous cluster sizes.
pub fn block_kernel(sizes: &[usize]) -> DMatrix<f64> {
    let n = sizes.iter().sum();
    let mut k = DMatrix::zeros(n, n);
    let mut start = 0;
    for &s in sizes {
        k.view_mut((start, start), (s, s)).fill(1.0);
        start += s;
    }
    k
}

pub fn block_labels(sizes: &[usize]) -> LabelVector {
    let labels = sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| std::iter::repeat(c).take(s))
        .collect();
    LabelVector::new(labels, sizes.len()).unwrap()
}

/// Writes `view_XX.mkck` files plus labels (when given).
pub fn write_views(dir: &Path, kernels: &[DMatrix<f64>], labels: Option<&LabelVector>) {
    std::fs::create_dir_all(dir).unwrap();
    for (p, k) in kernels.iter().enumerate() {
        io::save_kernel(&dir.join(format!("view_{p:02}.mkck")), k).unwrap();
    }
    if let Some(l) = labels {
        io::save_labels(&dir.join("labels.txt"), l).unwrap();
    }
}

/// Projector onto the coordinate axes `axes`.
pub fn axis_projector(n: usize, axes: std::ops::Range<usize>) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for i in axes {
        p[(i, i)] = 1.0;
    }
    p
}
