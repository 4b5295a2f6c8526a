//! External clustering metrics: accuracy under the best label matching,
//! normalized mutual information, purity and the adjusted Rand index.
//!
//! Conventions: NMI uses natural logarithms and the geometric normalization
//! `I/√(H_pred·H_true)`. When an entropy (NMI) or the ARI denominator vanishes,
//! the score is 1 for identical set partitions and 0 otherwise.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::LabelVector;

/// Counts `C[i][j] = |{s : pred_s = i, truth_s = j}|`, `k_pred × k_true`.
pub fn confusion_matrix(pred: &LabelVector, truth: &LabelVector) -> Result<Vec<Vec<usize>>> {
    if pred.n() != truth.n() {
        return Err(Error::input(alloc::format!(
            "label vectors differ in length ({} vs {})",
            pred.n(),
            truth.n()
        )));
    }
    let mut c = vec![vec![0usize; truth.k()]; pred.k()];
    for (&p, &t) in pred.as_slice().iter().zip(truth.as_slice()) {
        c[p][t] += 1;
    }
    Ok(c)
}

/// Minimum-cost assignment of rows to distinct columns (rows ≤ columns),
/// Hungarian method with potentials. Returns the column of each row.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    debug_assert!(rows <= cols);
    const INF: i64 = i64::MAX / 4;
    // 1-based with a virtual column 0.
    let mut u = vec![0i64; rows + 1];
    let mut v = vec![0i64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![INF; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=cols {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < min_v[j] {
                        min_v[j] = cur;
                        way[j] = j0;
                    }
                    if min_v[j] < delta {
                        delta = min_v[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Fraction of samples correctly labeled under the best one-to-one matching
/// of predicted to true clusters. Unequal cluster counts are padded with
/// empty clusters.
pub fn accuracy(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let c = confusion_matrix(pred, truth)?;
    let size = pred.k().max(truth.k());
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| {
                    let count = c.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0);
                    -(count as i64)
                })
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| -cost[i][j])
        .sum();
    Ok(matched as f64 / pred.n() as f64)
}

fn marginals(c: &[Vec<usize>]) -> (Vec<usize>, Vec<usize>) {
    let rows: Vec<usize> = c.iter().map(|r| r.iter().sum()).collect();
    let cols_n = c.first().map_or(0, Vec::len);
    let cols: Vec<usize> = (0..cols_n).map(|j| c.iter().map(|r| r[j]).sum()).collect();
    (rows, cols)
}

/// Both labelings induce the same set partition.
fn same_partition(c: &[Vec<usize>]) -> bool {
    let (rows, cols) = marginals(c);
    c.iter()
        .enumerate()
        .all(|(i, r)| r.iter().enumerate().all(|(j, &v)| v == 0 || (v == rows[i] && v == cols[j])))
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn nmi(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let c = confusion_matrix(pred, truth)?;
    let n = pred.n() as f64;
    let (a, b) = marginals(&c);
    let occupied = |v: &[usize]| v.iter().filter(|&&x| x > 0).count();
    if occupied(&a) <= 1 || occupied(&b) <= 1 {
        return Ok(if same_partition(&c) { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (i, row) in c.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (a[i] as f64 * b[j] as f64)).ln();
            }
        }
    }
    let h = (entropy(&a, n) * entropy(&b, n)).sqrt();
    Ok((mi / h).clamp(0.0, 1.0))
}

pub fn purity(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let c = confusion_matrix(pred, truth)?;
    let hits: usize = c.iter().map(|r| r.iter().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / pred.n() as f64)
}

fn pairs(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index.
pub fn ari(pred: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let c = confusion_matrix(pred, truth)?;
    let (a, b) = marginals(&c);
    let index: f64 = c.iter().flatten().map(|&v| pairs(v)).sum();
    let sum_a: f64 = a.iter().map(|&v| pairs(v)).sum();
    let sum_b: f64 = b.iter().map(|&v| pairs(v)).sum();
    let expected = sum_a * sum_b / pairs(pred.n());
    let denom = 0.5 * (sum_a + sum_b) - expected;
    if denom == 0.0 {
        return Ok(if same_partition(&c) { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
    pub ari: f64,
    /// `k_pred × k_true` contingency table.
    pub confusion: Vec<Vec<usize>>,
}

impl ClusteringReport {
    pub fn evaluate(pred: &LabelVector, truth: &LabelVector) -> Result<Self> {
        Ok(ClusteringReport {
            acc: accuracy(pred, truth)?,
            nmi: nmi(pred, truth)?,
            purity: purity(pred, truth)?,
            ari: ari(pred, truth)?,
            confusion: confusion_matrix(pred, truth)?,
        })
    }
}
