//! Penalty-method search for the per-view feature dimensions.
//!
//! The target problem is
//!
//! ```text
//! min Σ_p d_p   s.t.  ‖U_p(d_p)ᵀ·U_q(d_q)‖_F² ≥ k  for all p, q
//! ```
//!
//! where `U_p(d)` holds the `d` leading eigenvectors of view `p`. It is relaxed
//! into a pair of dimension vectors `d`, `d̂` coupled by a quadratic penalty
//!
//! ```text
//! G_M(d, d̂) = ½·(d + d̂)ᵀ1 + (M/2)·‖d − d̂‖²,   ‖U_p(d_p)ᵀ·U_q(d̂_q)‖_F² ≥ k,
//! ```
//!
//! minimized alternately over `d` and `d̂`, doubling `M` after every sweep
//! until the two vectors agree. Both half-updates separate into independent
//! one-dimensional problems; each is a convex quadratic over an interval of
//! integers whose lower end is found by searching the monotone alignment
//! profile.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DMatrixView};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{EigenSystem, FeatureMatrix};

/// Slack allowed when testing `alignment ≥ k`.
pub const ALIGNMENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    #[serde(rename = "initial_M")]
    pub initial_m: f64,
    pub max_outer_iters: usize,
    pub alignment_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            initial_m: 0.5,
            max_outer_iters: 200,
            alignment_tolerance: ALIGNMENT_TOLERANCE,
        }
    }
}

/// Current dimension vectors and penalty weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionState {
    pub d: Vec<usize>,
    pub d_hat: Vec<usize>,
    pub penalty: f64,
    pub iteration: usize,
}

impl DimensionState {
    pub fn uniform(m: usize, c: usize, penalty: f64) -> Self {
        DimensionState {
            d: vec![c; m],
            d_hat: vec![c; m],
            penalty,
            iteration: 0,
        }
    }

    /// `G_M(d, d̂)` at the current penalty.
    pub fn objective(&self) -> f64 {
        penalized_objective(&self.d, &self.d_hat, self.penalty)
    }

    pub fn converged(&self) -> bool {
        self.d == self.d_hat
    }
}

/// `½·(d + d̂)ᵀ1 + (M/2)·‖d − d̂‖²`.
pub fn penalized_objective(d: &[usize], d_hat: &[usize], penalty: f64) -> f64 {
    d.iter()
        .zip(d_hat)
        .map(|(&a, &b)| {
            let (a, b) = (a as f64, b as f64);
            0.5 * (a + b) + 0.5 * penalty * (a - b) * (a - b)
        })
        .sum()
}

/// One sweep (update `d`, then update `d̂`) at a fixed penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub iteration: usize,
    pub penalty: f64,
    pub d: Vec<usize>,
    pub d_hat: Vec<usize>,
    /// `G_M` before the sweep, after the `d` update and after the `d̂` update.
    pub objective_start: f64,
    pub objective_after_d: f64,
    pub objective_after_d_hat: f64,
    /// Whether `d` alone satisfies every pairwise alignment constraint.
    pub d_pairwise_feasible: bool,
    pub d_hat_pairwise_feasible: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    /// Starting point, uniform across views.
    pub initial: Vec<usize>,
    pub sweeps: Vec<SweepRecord>,
}

/// Final state of [`run_algorithm1`].
#[derive(Debug, Clone)]
pub struct DimensionSolution {
    pub state: DimensionState,
    pub features: Vec<FeatureMatrix>,
    pub trace: OptimizerTrace,
}

impl DimensionSolution {
    pub fn dims(&self) -> &[usize] {
        &self.state.d
    }
}

/// `‖Uᵀ·V‖_F²`.
pub fn alignment(u: &FeatureMatrix, v: &FeatureMatrix) -> Result<f64> {
    if u.n() != v.n() {
        return Err(Error::input(alloc::format!(
            "alignment of {}-row and {}-row matrices",
            u.n(),
            v.n()
        )));
    }
    Ok(linalg::cross_gram_frobenius_sq(u.values(), v.values()))
}

/// Cumulative alignment of a view's leading eigenvectors with a fixed
/// partner: entry `d` is `‖U(d)ᵀ·V‖_F² = Σ_{i<d} ‖u_iᵀ·V‖²`. Columns are
/// projected lazily, so probing dimension `d` costs `O(n·d·dim V)` in total.
struct AlignmentProfile<'a> {
    basis: &'a DMatrix<f64>,
    partner: DMatrixView<'a, f64>,
    cumulative: Vec<f64>,
}

impl<'a> AlignmentProfile<'a> {
    fn new(basis: &'a DMatrix<f64>, partner: DMatrixView<'a, f64>) -> Self {
        AlignmentProfile {
            basis,
            partner,
            cumulative: vec![0.0],
        }
    }

    fn at(&mut self, d: usize) -> f64 {
        let have = self.cumulative.len() - 1;
        if d > have {
            let block = self.basis.columns(have, d - have).tr_mul(&self.partner);
            let mut acc = self.cumulative[have];
            for row in block.row_iter() {
                acc += row.norm_squared();
                self.cumulative.push(acc);
            }
        }
        self.cumulative[d]
    }

    /// Smallest `d ∈ [lo, hi]` whose alignment reaches `target`. Probes
    /// `lo, 2·lo, 4·lo, …` before bisecting, so the cost tracks the answer
    /// rather than `hi`.
    fn smallest_reaching(&mut self, lo: usize, hi: usize, target: f64) -> Option<usize> {
        if lo > hi {
            return None;
        }
        if self.at(lo) >= target {
            return Some(lo);
        }
        let mut below = lo;
        let mut probe = lo;
        loop {
            if probe >= hi {
                return None;
            }
            probe = (probe.max(1) * 2).min(hi);
            if self.at(probe) >= target {
                break;
            }
            below = probe;
        }
        // Invariant: at(below) < target ≤ at(probe).
        while probe - below > 1 {
            let mid = below + (probe - below) / 2;
            if self.at(mid) >= target {
                probe = mid;
            } else {
                below = mid;
            }
        }
        Some(probe)
    }
}

fn leading(es: &EigenSystem, d: usize) -> DMatrixView<'_, f64> {
    es.eigenvectors().columns(0, d)
}

fn min_feasible_dim_impl(
    view: Option<usize>,
    es: &EigenSystem,
    partners: &[DMatrixView<'_, f64>],
    k: usize,
    d_max: usize,
    tolerance: f64,
) -> Result<usize> {
    if partners.is_empty() {
        return Err(Error::input("at least one partner is required"));
    }
    let target = k as f64 - tolerance;
    let mut needed = k;
    for (q, partner) in partners.iter().enumerate() {
        if partner.nrows() != es.n() {
            return Err(Error::input(alloc::format!(
                "partner {q} has {} rows, view has {}",
                partner.nrows(),
                es.n()
            )));
        }
        let mut profile = AlignmentProfile::new(es.eigenvectors(), partner.columns(0, partner.ncols()));
        // Feasible sets are upward closed, so the answer is the largest
        // per-partner threshold; start each search from the running maximum.
        match profile.smallest_reaching(needed, d_max, target) {
            Some(d) => needed = d,
            None => {
                return Err(Error::Infeasible {
                    view,
                    partner: q,
                    k,
                    max_dim: d_max,
                    best_alignment: profile.at(d_max.min(es.n())),
                })
            }
        }
    }
    Ok(needed)
}

/// Smallest `d ∈ [k, d_max]` such that the `d` leading eigenvectors of `es`
/// reach alignment `k` with every partner.
pub fn min_feasible_dim(
    es: &EigenSystem,
    partners: &[FeatureMatrix],
    k: usize,
    d_max: usize,
) -> Result<usize> {
    let rank = es.numerical_rank();
    if d_max > rank {
        return Err(Error::Rank {
            requested: d_max,
            max_feasible: rank,
        });
    }
    let views: Vec<DMatrixView<'_, f64>> = partners.iter().map(|p| p.values().columns(0, p.d())).collect();
    min_feasible_dim_impl(None, es, &views, k, d_max, ALIGNMENT_TOLERANCE)
}

/// Integer minimizer of `½(d + d̂) + (M/2)(d − d̂)²` over `[d_min, d_max]`;
/// ties go to the smaller `d`.
pub fn solve_coordinate(d_hat: usize, d_min: usize, d_max: usize, penalty: f64) -> Result<usize> {
    if d_min > d_max {
        return Err(Error::Numeric(alloc::format!(
            "empty dimension range [{d_min}, {d_max}]"
        )));
    }
    if !(penalty > 0.0) {
        return Err(Error::input("penalty must be positive"));
    }
    let target = d_hat as f64;
    let f = |d: usize| {
        let x = d as f64;
        0.5 * (x + target) + 0.5 * penalty * (x - target) * (x - target)
    };
    let clamp = |x: f64| -> usize {
        if x <= d_min as f64 {
            d_min
        } else if x >= d_max as f64 {
            d_max
        } else {
            x as usize
        }
    };
    let unconstrained = target - 1.0 / (2.0 * penalty);
    let lo = clamp(unconstrained.floor());
    let hi = clamp(unconstrained.ceil());
    Ok(if f(hi) < f(lo) { hi } else { lo })
}

/// Validated view collection shared by the update steps.
struct Views<'a> {
    systems: &'a [EigenSystem],
    ranks: Vec<usize>,
}

impl<'a> Views<'a> {
    fn new(systems: &'a [EigenSystem], k: usize) -> Result<Self> {
        let first = systems
            .first()
            .ok_or_else(|| Error::input("at least one view is required"))?;
        if let Some((p, es)) = systems.iter().enumerate().find(|(_, es)| es.n() != first.n()) {
            return Err(Error::input(alloc::format!(
                "view {p} has {} samples, view 0 has {}",
                es.n(),
                first.n()
            )));
        }
        if k == 0 {
            return Err(Error::input("cluster count must be at least 1"));
        }
        let ranks: Vec<usize> = systems.iter().map(EigenSystem::numerical_rank).collect();
        if let Some(&r) = ranks.iter().filter(|&&r| r < k).min() {
            return Err(Error::Rank {
                requested: k,
                max_feasible: r,
            });
        }
        Ok(Views { systems, ranks })
    }

    fn check_dims(&self, dims: &[usize], k: usize) -> Result<()> {
        if dims.len() != self.systems.len() {
            return Err(Error::input("one dimension per view is required"));
        }
        for (p, (&d, &r)) in dims.iter().zip(&self.ranks).enumerate() {
            if d < k || d > r {
                return Err(Error::input(alloc::format!(
                    "dimension {d} of view {p} outside [{k}, {r}]"
                )));
            }
        }
        Ok(())
    }

    /// Solves every coordinate against the fixed `counterpart` dimensions.
    fn sweep(&self, counterpart: &[usize], k: usize, penalty: f64, tolerance: f64) -> Result<Vec<usize>> {
        let partners: Vec<DMatrixView<'_, f64>> = self
            .systems
            .iter()
            .zip(counterpart)
            .map(|(es, &d)| leading(es, d))
            .collect();
        (0..self.systems.len())
            .map(|p| {
                let d_min = min_feasible_dim_impl(
                    Some(p),
                    &self.systems[p],
                    &partners,
                    k,
                    self.ranks[p],
                    tolerance,
                )?;
                solve_coordinate(counterpart[p], d_min, self.ranks[p], penalty)
            })
            .collect()
    }

    fn pairwise_feasible(&self, dims: &[usize], k: usize, tolerance: f64) -> bool {
        let m = self.systems.len();
        (0..m).all(|p| {
            (p..m).all(|q| {
                let a = leading(&self.systems[p], dims[p]).tr_mul(&leading(&self.systems[q], dims[q]));
                a.norm_squared() >= k as f64 - tolerance
            })
        })
    }
}

/// Updates `d` with `d̂` fixed.
pub fn update_d(
    state: &DimensionState,
    systems: &[EigenSystem],
    k: usize,
    tolerance: f64,
) -> Result<DimensionState> {
    let views = Views::new(systems, k)?;
    views.check_dims(&state.d_hat, k)?;
    let d = views.sweep(&state.d_hat, k, state.penalty, tolerance)?;
    Ok(DimensionState { d, ..state.clone() })
}

/// Updates `d̂` with `d` fixed.
pub fn update_d_hat(
    state: &DimensionState,
    systems: &[EigenSystem],
    k: usize,
    tolerance: f64,
) -> Result<DimensionState> {
    let views = Views::new(systems, k)?;
    views.check_dims(&state.d, k)?;
    let d_hat = views.sweep(&state.d, k, state.penalty, tolerance)?;
    Ok(DimensionState {
        d_hat,
        ..state.clone()
    })
}

/// Smallest `c ∈ [k, min rank]` with the all-`c` vector pairwise feasible.
pub fn uniform_start(systems: &[EigenSystem], k: usize, tolerance: f64) -> Result<usize> {
    let views = Views::new(systems, k)?;
    uniform_start_impl(&views, k, tolerance)
}

fn uniform_start_impl(views: &Views<'_>, k: usize, tolerance: f64) -> Result<usize> {
    let m = views.systems.len();
    let max_dim = *views.ranks.iter().min().expect("non-empty");
    let feasible = |c: usize| views.pairwise_feasible(&vec![c; m], k, tolerance);
    if !feasible(max_dim) {
        return Err(Error::InfeasibleInit { k, max_dim });
    }
    let (mut lo, mut hi) = (k, max_dim);
    if feasible(lo) {
        return Ok(lo);
    }
    // feasible(hi) && !feasible(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Alternating minimization with penalty doubling.
///
/// Starts from the smallest uniform feasible dimension, then repeats
/// `update d → update d̂`, doubling the penalty after each sweep, until
/// `d = d̂`. Returns the final dimensions, the truncated feature matrices
/// `U_p(d_p)` and a per-sweep trace.
pub fn run_algorithm1(systems: &[EigenSystem], k: usize, config: &OptimizerConfig) -> Result<DimensionSolution> {
    if !(config.initial_m > 0.0) || !config.initial_m.is_finite() {
        return Err(Error::input("initial penalty must be positive and finite"));
    }
    let tolerance = config.alignment_tolerance;
    let views = Views::new(systems, k)?;
    let start = vec![uniform_start_impl(&views, k, tolerance)?; systems.len()];
    let mut state = DimensionState {
        d: start.clone(),
        d_hat: start.clone(),
        penalty: config.initial_m,
        iteration: 0,
    };
    let mut trace = OptimizerTrace {
        initial: start,
        sweeps: Vec::new(),
    };

    for iteration in 1..=config.max_outer_iters {
        state.iteration = iteration;
        let objective_start = state.objective();
        state.d = views.sweep(&state.d_hat, k, state.penalty, tolerance)?;
        let objective_after_d = state.objective();
        state.d_hat = views.sweep(&state.d, k, state.penalty, tolerance)?;
        let objective_after_d_hat = state.objective();
        trace.sweeps.push(SweepRecord {
            iteration,
            penalty: state.penalty,
            d: state.d.clone(),
            d_hat: state.d_hat.clone(),
            objective_start,
            objective_after_d,
            objective_after_d_hat,
            d_pairwise_feasible: views.pairwise_feasible(&state.d, k, tolerance),
            d_hat_pairwise_feasible: views.pairwise_feasible(&state.d_hat, k, tolerance),
        });
        log::debug!(
            "sweep {iteration}: M = {}, d = {:?}, d̂ = {:?}",
            state.penalty,
            state.d,
            state.d_hat
        );
        if state.converged() {
            let features = systems
                .iter()
                .zip(&state.d)
                .map(|(es, &d)| FeatureMatrix::new_unchecked(leading(es, d).into_owned()))
                .collect();
            return Ok(DimensionSolution {
                state,
                features,
                trace,
            });
        }
        state.penalty *= 2.0;
    }
    Err(Error::NotConverged {
        iterations: config.max_outer_iters,
        trace: alloc::boxed::Box::new(trace),
    })
}
