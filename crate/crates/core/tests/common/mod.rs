//! Independent reference implementations used as test oracles. None of these
//! call into the library's metric code.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// -sum p ln p over the empirical distribution of `keys`.
fn plug_in_entropy<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> f64 {
    let mut counts: HashMap<K, usize> = HashMap::new();
    let mut n = 0usize;
    for k in keys {
        *counts.entry(k).or_default() += 1;
        n += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// NMI through the joint-entropy identity I = H(a) + H(b) - H(a, b).
pub fn nmi_oracle(a: &[usize], b: &[usize]) -> f64 {
    let ha = plug_in_entropy(a.iter().copied());
    let hb = plug_in_entropy(b.iter().copied());
    if ha + hb == 0.0 {
        return 1.0;
    }
    let hab = plug_in_entropy(a.iter().copied().zip(b.iter().copied()));
    (2.0 * (ha + hb - hab) / (ha + hb)).clamp(0.0, 1.0)
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// kNN purity by fully sorting every other point by (distance, index).
pub fn knn_oracle(rows: &[Vec<f64>], labels: &[usize], k_of: impl Fn(usize) -> usize) -> f64 {
    let n = rows.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(&rows[i], &rows[j]), j))
            .collect();
        others.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        let k = k_of(i).min(n - 1).max(1);
        let same = others[..k].iter().filter(|(_, j)| labels[*j] == labels[i]).count();
        total += same as f64 / k as f64;
    }
    total / n as f64
}

/// Minimum 2-means objective over every bipartition of the rows.
pub fn best_bipartition(rows: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut best = (f64::INFINITY, vec![]);
    // fix point 0 in part 0 to skip mirrored labelings
    for mask in 0u32..(1 << (n - 1)) {
        let assign: Vec<usize> = (0..n)
            .map(|i| if i == 0 { 0 } else { ((mask >> (i - 1)) & 1) as usize })
            .collect();
        if !assign.contains(&1) {
            continue;
        }
        let mut cost = 0.0;
        for part in 0..2 {
            let members: Vec<&Vec<f64>> = rows.iter().zip(&assign).filter(|(_, &a)| a == part).map(|(r, _)| r).collect();
            let mean: Vec<f64> = (0..d)
                .map(|t| members.iter().map(|r| r[t]).sum::<f64>() / members.len() as f64)
                .collect();
            cost += members.iter().map(|r| sq_dist(r, &mean)).sum::<f64>();
        }
        if cost < best.0 {
            best = (cost, assign);
        }
    }
    best
}

/// Random orthogonal matrix (rows) from Gram-Schmidt on Gaussian vectors.
pub fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

pub fn rotate(rows: &[Vec<f64>], rot: &[Vec<f64>], shift: &[f64]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            rot.iter()
                .zip(shift)
                .map(|(q, s)| q.iter().zip(r).map(|(a, b)| a * b).sum::<f64>() + s)
                .collect()
        })
        .collect()
}

pub fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Sample variance with divisor n - 1.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}
