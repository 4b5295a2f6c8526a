use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{KernelMatrix, LabelVector};

use super::{symmetric_eig, truncate_features, EigenSystem, PartitionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 50,
            max_iterations: 300,
            seed: 0,
        }
    }
}

impl KMeansConfig {
    pub fn with_seed(seed: u64) -> Self {
        KMeansConfig {
            seed,
            ..Default::default()
        }
    }

    /// Independent generator for one restart: the stream id is the restart
    /// index, so restarts can be evaluated in any order.
    pub fn restart_rng(&self, restart: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(restart as u64);
        rng
    }
}

/// One Lloyd run.
#[derive(Debug, Clone)]
pub struct LloydOutcome {
    pub labels: Vec<usize>,
    pub centroids: DMatrix<f64>,
    /// Within-cluster sum of squares at termination.
    pub wcss: f64,
    pub iterations: usize,
    /// WCSS after every centroid update.
    pub history: Vec<f64>,
}

/// All restarts of a seeded k-means, with the index of the best one.
#[derive(Debug, Clone)]
pub struct KMeansRun {
    pub runs: Vec<LloydOutcome>,
    pub best: usize,
}

impl KMeansRun {
    pub fn best_run(&self) -> &LloydOutcome {
        &self.runs[self.best]
    }
}

fn squared_distance(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols())
        .map(|j| {
            let d = points[(i, j)] - centroids[(c, j)];
            d * d
        })
        .sum()
}

fn nearest(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.nrows() {
        let d = squared_distance(points, i, centroids, c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm on the rows of `points`, initialized with `k` distinct
/// rows drawn uniformly at random.
///
/// Stops when assignments stop changing or after `max_iterations`. A cluster
/// left empty by an assignment step is re-seeded at the point farthest from
/// its current centroid, so the run never fails.
pub fn lloyd(
    points: &DMatrix<f64>,
    k: usize,
    max_iterations: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LloydOutcome> {
    let n = points.nrows();
    let dim = points.ncols();
    if k == 0 || k > n {
        return Err(Error::input(alloc::format!("cannot form {k} clusters from {n} points")));
    }
    let mut centroids = DMatrix::zeros(k, dim);
    for (c, i) in index::sample(rng, n, k).into_iter().enumerate() {
        centroids.row_mut(c).copy_from(&points.row(i));
    }

    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;

    while iterations < max_iterations.max(1) {
        iterations += 1;
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(points, i, &centroids);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dists[i] = d;
        }

        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            // Farthest point among clusters that can spare one.
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                .expect("k ≤ n guarantees a cluster with two members");
            sizes[labels[far]] -= 1;
            labels[far] = empty;
            sizes[empty] = 1;
            dists[far] = 0.0;
            changed = true;
        }

        centroids.fill(0.0);
        for i in 0..n {
            let mut row = centroids.row_mut(labels[i]);
            row += points.row(i);
        }
        for c in 0..k {
            let mut row = centroids.row_mut(c);
            row /= sizes[c] as f64;
        }

        let wcss = (0..n)
            .map(|i| squared_distance(points, i, &centroids, labels[i]))
            .sum();
        history.push(wcss);

        if !changed {
            break;
        }
    }

    Ok(LloydOutcome {
        wcss: *history.last().unwrap_or(&0.0),
        labels,
        centroids,
        iterations,
        history,
    })
}

/// Runs [`lloyd`] once per restart, each with its own generator, and keeps
/// the lowest WCSS (earliest restart on ties).
pub fn lloyd_restarts(points: &DMatrix<f64>, k: usize, config: &KMeansConfig) -> Result<KMeansRun> {
    if config.restarts == 0 {
        return Err(Error::input("k-means needs at least one restart"));
    }
    let mut runs = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let mut rng = config.restart_rng(r);
        runs.push(lloyd(points, k, config.max_iterations, &mut rng)?);
    }
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.wcss.total_cmp(&b.1.wcss).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(KMeansRun { runs, best })
}

/// Result of kernel k-means.
#[derive(Debug, Clone)]
pub struct KernelKMeans {
    pub partition: PartitionMatrix,
    pub labels: LabelVector,
    /// `Tr((I − H·Hᵀ)·K)`.
    pub objective: f64,
    pub runs: KMeansRun,
}

/// Relaxed kernel k-means: `H` is the top-`k` eigenvectors of `K`, labels come
/// from Lloyd's k-means on the rows of `H`.
pub fn kernel_kmeans(kernel: &KernelMatrix, k: usize, config: &KMeansConfig) -> Result<KernelKMeans> {
    let es = symmetric_eig(kernel.values())?;
    kernel_kmeans_from_eigen(&es, kernel.trace(), k, config)
}

/// [`kernel_kmeans`] on a precomputed eigensystem of a kernel with trace
/// `trace`.
pub fn kernel_kmeans_from_eigen(
    es: &EigenSystem,
    trace: f64,
    k: usize,
    config: &KMeansConfig,
) -> Result<KernelKMeans> {
    let h: PartitionMatrix = truncate_features(es, k)?.into();
    let objective = trace - es.leading_sum(k);
    let (labels, runs) = cluster_rows(h.values(), k, config)?;
    Ok(KernelKMeans {
        partition: h,
        labels,
        objective,
        runs,
    })
}

/// Lloyd with restarts on the rows of an embedding, returning the best labels.
pub fn cluster_rows(
    embedding: &DMatrix<f64>,
    k: usize,
    config: &KMeansConfig,
) -> Result<(LabelVector, KMeansRun)> {
    let runs = lloyd_restarts(embedding, k, config)?;
    let labels = LabelVector::new(runs.best_run().labels.clone(), k)?;
    Ok((labels, runs))
}

/// Kernel k-means on the elementwise mean of `kernels`.
pub fn average_kernel_kmeans(
    kernels: &[KernelMatrix],
    k: usize,
    config: &KMeansConfig,
) -> Result<KernelKMeans> {
    let mean = KernelMatrix::mean(kernels)?;
    kernel_kmeans(&mean, k, config)
}
