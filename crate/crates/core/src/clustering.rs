//! k-means++ seeding and Lloyd iterations with seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, DenseMatrix};
use crate::metrics::Partition;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    pub n_restarts: usize,
    /// Stop once the relative inertia improvement of an iteration drops below this.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub const DEFAULT_MAX_ITERS: usize = 300;
    pub const DEFAULT_RESTARTS: usize = 10;
    pub const DEFAULT_TOL: f64 = 1e-6;

    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: Self::DEFAULT_MAX_ITERS,
            n_restarts: Self::DEFAULT_RESTARTS,
            tol: Self::DEFAULT_TOL,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_k(self.k, n)?;
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if self.n_restarts == 0 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::param("tol", format!("must be finite and >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::param("k", format!("must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::param("k", format!("k={k} exceeds the {n} data rows")));
    }
    Ok(())
}

/// Outcome of one seeded restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after every Lloyd iteration, in order. Non-increasing.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: Partition,
    pub centroids: DenseMatrix,
    pub inertia: f64,
    pub iterations: usize,
    pub restart_index: usize,
    pub restarts: Vec<RestartSummary>,
}

/// k-means++ seeding: the first centroid is a uniformly drawn row, each later
/// one is drawn with probability proportional to its squared distance from
/// the nearest centroid chosen so far. When every remaining weight is zero
/// (duplicate points) the pick is uniform over rows not yet chosen.
pub fn kmeans_pp_init(data: &DenseMatrix, k: usize, seed: u64) -> Result<DenseMatrix> {
    let n = data.rows();
    check_k(k, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let mut order = Vec::with_capacity(k);

    let first = rng.random_range(0..n);
    chosen[first] = true;
    order.push(first);
    let mut nearest: Vec<f64> = data
        .iter_rows()
        .map(|r| squared_distance(r, data.row(first)))
        .collect();

    while order.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in nearest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        order.push(next);
        let c = data.row(next);
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(squared_distance(data.row(i), c));
        }
    }
    data.select_rows(&order)
}

/// Sum of squared distances from each row to its assigned centroid.
pub fn inertia(data: &DenseMatrix, centroids: &DenseMatrix, assignment: &Partition) -> Result<f64> {
    if centroids.cols() != data.cols() {
        return Err(Error::ShapeMismatch(format!(
            "centroids have {} columns, data has {}",
            centroids.cols(),
            data.cols()
        )));
    }
    if assignment.len() != data.rows() {
        return Err(Error::ShapeMismatch(format!(
            "assignment has {} entries, data has {} rows",
            assignment.len(),
            data.rows()
        )));
    }
    if assignment.k() > centroids.rows() {
        return Err(Error::ShapeMismatch(format!(
            "assignment uses {} parts but only {} centroids",
            assignment.k(),
            centroids.rows()
        )));
    }
    Ok(objective(data, centroids.as_slice(), assignment.labels()))
}

fn objective(data: &DenseMatrix, centroids: &[f64], assignment: &[usize]) -> f64 {
    let d = data.cols();
    data.iter_rows()
        .zip(assignment)
        .map(|(x, &c)| squared_distance(x, &centroids[c * d..(c + 1) * d]))
        .sum()
}

/// Nearest centroid for every row; distance ties go to the lower centroid index.
fn assign(data: &DenseMatrix, centroids: &[f64], k: usize) -> Vec<(usize, f64)> {
    let d = data.cols();
    par::map_range(data.rows(), |i| {
        let x = data.row(i);
        let mut best = (0, squared_distance(x, &centroids[..d]));
        for c in 1..k {
            let dist = squared_distance(x, &centroids[c * d..(c + 1) * d]);
            if dist < best.1 {
                best = (c, dist);
            }
        }
        best
    })
}

/// Moves the point farthest from its centroid into each empty cluster and
/// places that cluster's centroid on it. Donors must keep at least one member.
fn repair_empty(data: &DenseMatrix, centroids: &mut [f64], assigned: &mut [(usize, f64)], k: usize) {
    let d = data.cols();
    let mut sizes = vec![0usize; k];
    for &(c, _) in assigned.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for (i, &(c, dist)) in assigned.iter().enumerate() {
            if sizes[c] < 2 {
                continue;
            }
            if donor.is_none_or(|b| dist > assigned[b].1) {
                donor = Some(i);
            }
        }
        // k <= n guarantees some cluster holds two or more points
        let p = donor.expect("a cluster with at least two members exists");
        sizes[assigned[p].0] -= 1;
        sizes[empty] = 1;
        assigned[p] = (empty, 0.0);
        centroids[empty * d..(empty + 1) * d].copy_from_slice(data.row(p));
    }
}

fn means(data: &DenseMatrix, assignment: &[usize], k: usize) -> Vec<f64> {
    let d = data.cols();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (x, &c) in data.iter_rows().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        debug_assert!(count > 0, "cluster {c} empty after repair");
        let inv = count as f64;
        for s in &mut sums[c * d..(c + 1) * d] {
            *s /= inv;
        }
    }
    sums
}

struct RestartRun {
    assignment: Vec<usize>,
    centroids: Vec<f64>,
    summary: RestartSummary,
}

fn run_restart(data: &DenseMatrix, config: &KMeansConfig, seed: u64) -> Result<RestartRun> {
    let k = config.k;
    let mut centroids = kmeans_pp_init(data, k, seed)?.into_vec();
    let mut previous: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut current = f64::INFINITY;
    let mut assignment = Vec::new();
    let mut iterations = 0;

    for it in 1..=config.max_iters {
        let mut assigned = assign(data, &centroids, k);
        repair_empty(data, &mut centroids, &mut assigned, k);
        assignment = assigned.into_iter().map(|(c, _)| c).collect();
        centroids = means(data, &assignment, k);
        let next = objective(data, &centroids, &assignment);
        debug_assert!(
            next <= current,
            "inertia increased from {current} to {next} at iteration {it}"
        );
        trace.push(next);
        iterations = it;

        let unchanged = previous.as_deref() == Some(assignment.as_slice());
        let converged = current.is_finite()
            && (current == 0.0 || (current - next) / current < config.tol);
        current = next;
        if unchanged || converged || next == 0.0 {
            break;
        }
        previous = Some(assignment.clone());
    }

    Ok(RestartRun {
        assignment,
        centroids,
        summary: RestartSummary {
            seed,
            inertia: current,
            iterations,
            trace,
        },
    })
}

/// Runs `n_restarts` seeded k-means++/Lloyd restarts (restart `r` uses seed
/// `seed + r`) and keeps the one with the lowest final inertia, ties going to
/// the earliest restart.
pub fn kmeans_fit(data: &DenseMatrix, config: &KMeansConfig) -> Result<KMeansResult> {
    config.validate(data.rows())?;
    let runs = par::try_map_range(config.n_restarts, |r| {
        run_restart(data, config, config.seed.wrapping_add(r as u64))
    })?;

    let mut best = 0;
    for (r, run) in runs.iter().enumerate().skip(1) {
        if run.summary.inertia < runs[best].summary.inertia {
            best = r;
        }
    }
    let restarts: Vec<RestartSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    let winner = runs.into_iter().nth(best).expect("at least one restart");
    Ok(KMeansResult {
        assignment: Partition::with_parts(winner.assignment, config.k)?,
        centroids: DenseMatrix::new(config.k, data.cols(), winner.centroids)?,
        inertia: winner.summary.inertia,
        iterations: winner.summary.iterations,
        restart_index: best,
        restarts,
    })
}
