//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL, with eigenvector accumulation.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg;

use super::EigenSystem;

/// Relative symmetry tolerance accepted by [`symmetric_eig`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Per-eigenvalue cap on QL sweeps before giving up.
const MAX_QL_ITERATIONS: usize = 64;

/// Full eigendecomposition of a symmetric matrix.
///
/// Eigenvalues come back in descending order. Equal eigenvalues keep the order
/// in which the QL iteration produced them, so results are reproducible for a
/// given input.
pub fn symmetric_eig(a: &DMatrix<f64>) -> Result<EigenSystem> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::input("eigendecomposition needs a non-empty square matrix"));
    }
    if !linalg::is_finite(a) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let scale = linalg::max_abs(a);
    let deviation = linalg::symmetry_deviation(a);
    let tolerance = SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    if deviation > tolerance {
        return Err(Error::NotSymmetric { deviation, tolerance });
    }

    // Column-major working copy: v[col * n + row].
    let mut v: Vec<f64> = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            v.push(0.5 * (a[(i, j)] + a[(j, i)]));
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    ql_implicit(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: ties keep solver order.
    order.sort_by(|&x, &y| d[y].partial_cmp(&d[x]).unwrap_or(core::cmp::Ordering::Equal));

    let values = DVector::from_iterator(n, order.iter().map(|&i| d[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors
            .column_mut(dst)
            .copy_from_slice(&v[src * n..(src + 1) * n]);
    }
    Ok(EigenSystem::from_sorted(values, vectors))
}

#[inline(always)]
fn at(n: usize, row: usize, col: usize) -> usize {
    col * n + row
}

fn tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
    }

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(n, i - 1, j)];
                v[at(n, i, j)] = 0.0;
                v[at(n, j, i)] = 0.0;
            }
        } else {
            for x in d[..i].iter_mut() {
                *x /= scale;
                h += *x * *x;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for x in e[..i].iter_mut() {
                *x = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[at(n, j, i)] = f;
                g = e[j] + v[at(n, j, j)] * f;
                let col = &v[at(n, 0, j)..at(n, 0, j) + n];
                for k in (j + 1)..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut v[at(n, 0, j)..at(n, 0, j) + n];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = col[i - 1];
                col[i] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the Householder transforms.
    for i in 0..n.saturating_sub(1) {
        v[at(n, n - 1, i)] = v[at(n, i, i)];
        v[at(n, i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(n, k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(n, k, i + 1)] * v[at(n, k, j)];
                }
                for k in 0..=i {
                    v[at(n, k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(n, k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n, n - 1, j)];
        v[at(n, n - 1, j)] = 0.0;
    }
    v[at(n, n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn ql_implicit(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    let mut total_iterations = 0usize;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] is zero, so m < n always holds here.
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                total_iterations += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::NoConvergence {
                        iterations: total_iterations,
                    });
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in d[(l + 2)..n].iter_mut() {
                    *x -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = v.split_at_mut(at(n, 0, i + 1));
                    let ci = &mut lo[at(n, 0, i)..at(n, 0, i) + n];
                    let ci1 = &mut hi[..n];
                    for (a, b) in ci.iter_mut().zip(ci1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
