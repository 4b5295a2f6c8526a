//! Dual-noise analysis of a view against a consensus partition.
//!
//! With `P = H·Hᵀ` and `Q = I − P`, the noise `E = U·Uᵀ − P` splits into the
//! column-space part `E_C = P·E·P`, the null-space part `E_N = Q·E·Q` and the
//! traceless cross residual `R = P·E·Q + Q·E·P`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{symmetric_eig, FeatureMatrix, PartitionMatrix};
use crate::synth;

/// Absolute tolerance for the reconstruction `E_N + E_C + R = E`.
pub const SPLIT_TOLERANCE: f64 = 1e-10;
/// Absolute tolerance for subspace membership of `E_N` and `E_C`.
pub const SUBSPACE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct NoiseDecomposition {
    pub total: DMatrix<f64>,
    pub null_space: DMatrix<f64>,
    pub column_space: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub traces: NoiseTraces,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseTraces {
    pub total: f64,
    pub null_space: f64,
    pub column_space: f64,
    pub cross: f64,
}

/// Splits `U·Uᵀ − H·Hᵀ` into N-noise, C-noise and cross residual.
pub fn decompose_noise(u: &FeatureMatrix, h: &PartitionMatrix) -> Result<NoiseDecomposition> {
    if u.n() != h.n() {
        return Err(Error::input(format!(
            "feature matrix has {} rows but partition has {}",
            u.n(),
            h.n()
        )));
    }
    let u = u.values();
    let h = h.values();

    // A = HᵀU, QU = U − H·A; every block is then a product of thin factors.
    let a = h.transpose() * u;
    let ha = h * &a;
    let qu = u - &ha;

    let p = linalg::projector(h);
    let mut total = linalg::projector(u) - &p;
    linalg::symmetrize(&mut total);
    let mut column_space = &ha * ha.transpose() - &p;
    linalg::symmetrize(&mut column_space);
    let mut null_space = &qu * qu.transpose();
    linalg::symmetrize(&mut null_space);
    let pq = &ha * qu.transpose();
    let cross = &pq + pq.transpose();

    let split_err = linalg::max_abs(&(&null_space + &column_space + &cross - &total));
    if split_err > SPLIT_TOLERANCE {
        return Err(Error::Numeric(format!(
            "noise split does not reconstruct E (error {split_err:.3e})"
        )));
    }
    let n_err = linalg::max_abs(&(h.transpose() * &null_space));
    if n_err > SUBSPACE_TOLERANCE {
        return Err(Error::Numeric(format!(
            "N-noise leaks into col(H) (‖Hᵀ·E_N‖ = {n_err:.3e})"
        )));
    }
    let c_err = linalg::max_abs(&(&column_space - &p * &column_space));
    if c_err > SUBSPACE_TOLERANCE {
        return Err(Error::Numeric(format!(
            "C-noise leaves col(H) (‖Q·E_C‖ = {c_err:.3e})"
        )));
    }

    let traces = NoiseTraces {
        total: total.trace(),
        null_space: null_space.trace(),
        column_space: column_space.trace(),
        cross: cross.trace(),
    };
    Ok(NoiseDecomposition {
        total,
        null_space,
        column_space,
        cross,
        traces,
    })
}

/// `|Tr(E_N·H·Hᵀ)|`; zero for an exact split.
pub fn check_lemma1(dec: &NoiseDecomposition, h: &PartitionMatrix) -> f64 {
    let h = h.values();
    (h.transpose() * &dec.null_space * h).trace().abs()
}

/// `|Tr(E_C·H·Hᵀ) − Tr(E_C)|`.
pub fn check_lemma2(dec: &NoiseDecomposition, h: &PartitionMatrix) -> f64 {
    let h = h.values();
    ((h.transpose() * &dec.column_space * h).trace() - dec.traces.column_space).abs()
}

/// Smallest eigenvalue of `E_N` and largest eigenvalue of `E_C`.
pub fn check_lemma3(dec: &NoiseDecomposition) -> Result<(f64, f64)> {
    let min_n = symmetric_eig(&dec.null_space)?.eigenvalues().min();
    let max_c = symmetric_eig(&dec.column_space)?.eigenvalues().max();
    Ok((min_n, max_c))
}

/// Pairwise alignment scores `‖U_pᵀ·U_q‖_F²`.
pub fn check_theorem1(views: &[FeatureMatrix]) -> Result<DMatrix<f64>> {
    if let Some(first) = views.first() {
        if let Some((p, v)) = views.iter().enumerate().find(|(_, v)| v.n() != first.n()) {
            return Err(Error::input(format!(
                "view {p} has {} rows, view 0 has {}",
                v.n(),
                first.n()
            )));
        }
    }
    let m = views.len();
    let mut scores = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            let s = linalg::cross_gram_frobenius_sq(views[p].values(), views[q].values());
            scores[(p, q)] = s;
            scores[(q, p)] = s;
        }
    }
    Ok(scores)
}

/// `|Σ_p Tr(E_p^N) − (Σ_p d_p − Σ_p (k + Tr(E_p^C)))|`.
pub fn check_theorem2(decs: &[NoiseDecomposition], dims: &[usize], k: usize) -> Result<f64> {
    if decs.len() != dims.len() {
        return Err(Error::input("one dimension per decomposition is required"));
    }
    let lhs: f64 = decs.iter().map(|d| d.traces.null_space).sum();
    let total_dim: f64 = dims.iter().map(|&d| d as f64).sum();
    let offset: f64 = decs
        .iter()
        .map(|d| k as f64 + d.traces.column_space)
        .sum();
    Ok((lhs - (total_dim - offset)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiseMode {
    None,
    RemoveN,
    RemoveC,
    RemoveBoth,
}

impl DenoiseMode {
    pub const ALL: [DenoiseMode; 4] = [
        DenoiseMode::None,
        DenoiseMode::RemoveN,
        DenoiseMode::RemoveC,
        DenoiseMode::RemoveBoth,
    ];
}

/// `U·Uᵀ` with the selected noise components subtracted.
pub fn denoise_kernel(u: &FeatureMatrix, h: &PartitionMatrix, mode: DenoiseMode) -> Result<DMatrix<f64>> {
    if mode == DenoiseMode::None {
        return Ok(u.projector());
    }
    let dec = decompose_noise(u, h)?;
    let mut out = u.projector();
    if matches!(mode, DenoiseMode::RemoveN | DenoiseMode::RemoveBoth) {
        out -= &dec.null_space;
    }
    if matches!(mode, DenoiseMode::RemoveC | DenoiseMode::RemoveBoth) {
        out -= &dec.column_space;
    }
    linalg::symmetrize(&mut out);
    Ok(out)
}

/// Builds a view with controlled noise against `h_true`.
///
/// A random orthonormal basis `B` of `col(h_true)` is drawn; its first
/// `tilt_angles.len()` columns are rotated by the given angles towards fresh
/// directions orthogonal to `col(h_true)`, and `n_extra` further orthogonal
/// directions are appended. Against `h_true` this gives
/// `Tr(E_C) = Σ(cos²θ − 1)` and `Tr(E_N) = n_extra + Σ sin²θ`.
pub fn make_noisy_view(
    h_true: &PartitionMatrix,
    n_extra: usize,
    tilt_angles: &[f64],
    seed: u64,
) -> Result<FeatureMatrix> {
    let n = h_true.n();
    let k = h_true.k();
    let tilts = tilt_angles.len();
    if tilts > k {
        return Err(Error::input(format!(
            "{tilts} tilt angles given but the partition has only {k} columns"
        )));
    }
    if let Some(bad) = tilt_angles
        .iter()
        .find(|&&t| !(0.0..core::f64::consts::FRAC_PI_2).contains(&t))
    {
        return Err(Error::input(format!("tilt angle {bad} outside [0, π/2)")));
    }
    let outside = tilts + n_extra;
    if k + outside > n {
        return Err(Error::input(format!(
            "view needs {} orthogonal directions but n = {n}",
            k + outside
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation = synth::random_orthonormal(k, k, None, &mut rng)?;
    let basis = h_true.values() * rotation;
    let fresh = if outside > 0 {
        Some(synth::random_orthonormal(n, outside, Some(h_true.values()), &mut rng)?)
    } else {
        None
    };

    let mut cols = Vec::with_capacity(k + n_extra);
    for (i, &theta) in tilt_angles.iter().enumerate() {
        let w = fresh.as_ref().map(|f| f.column(i)).expect("tilts imply fresh directions");
        cols.push(basis.column(i) * theta.cos() + w * theta.sin());
    }
    for i in tilts..k {
        cols.push(basis.column(i).into_owned());
    }
    if let Some(f) = &fresh {
        for j in tilts..outside {
            cols.push(f.column(j).into_owned());
        }
    }
    FeatureMatrix::new(DMatrix::from_columns(&cols))
}
