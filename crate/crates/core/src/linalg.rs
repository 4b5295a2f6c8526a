//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};

/// `U·Uᵀ` for a matrix with orthonormal columns.
pub fn projector(u: &DMatrix<f64>) -> DMatrix<f64> {
    u * u.transpose()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Largest entry of `|A − Aᵀ|`.
pub fn symmetry_deviation(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            dev = dev.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    dev
}

/// Replaces `m` by `(m + mᵀ)/2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `‖UᵀU − I‖_max`.
pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let mut g = u.transpose() * u;
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    max_abs(&g)
}

/// Squared Frobenius norm of `Aᵀ·B`, computed without forming `A·Aᵀ`.
pub fn cross_gram_frobenius_sq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.tr_mul(b).norm_squared()
}

/// `Tr(A·B)` for square matrices of equal size.
pub fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    // Tr(AB) = Σ_ij A_ij B_ji
    a.iter()
        .zip(b.transpose().iter())
        .map(|(x, y)| x * y)
        .sum()
}

/// Orthonormalizes the columns of `m` in place with two passes of modified
/// Gram–Schmidt, first against the (already orthonormal) columns of `basis`.
/// Columns that collapse below `1e-10` are reported as `None`.
pub fn orthonormalize_against(m: &DMatrix<f64>, basis: Option<&DMatrix<f64>>) -> Option<DMatrix<f64>> {
    if m.ncols() == 0 {
        return Some(DMatrix::zeros(m.nrows(), 0));
    }
    let mut cols: alloc::vec::Vec<DVector<f64>> = alloc::vec::Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        for _ in 0..2 {
            if let Some(b) = basis {
                for c in b.column_iter() {
                    let p = c.dot(&v);
                    v.axpy(-p, &c, 1.0);
                }
            }
            for c in &cols {
                let p = c.dot(&v);
                v.axpy(-p, c, 1.0);
            }
        }
        let norm = v.norm();
        if norm < 1e-10 {
            return None;
        }
        v /= norm;
        cols.push(v);
    }
    Some(DMatrix::from_columns(&cols))
}

pub(crate) fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
