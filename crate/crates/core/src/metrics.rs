//! Partition comparison: contingency tables, entropy, normalized mutual
//! information, and kNN class purity of an embedding.
//!
//! All logarithms are natural.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, DenseMatrix};
use crate::par;

/// An assignment of `n` samples to parts `0..k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Partition with `k = max(label) + 1`.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels
            .iter()
            .max()
            .map(|m| m + 1)
            .ok_or(Error::EmptyInput("partition"))?;
        Ok(Self { labels, k })
    }

    pub fn with_parts(labels: Vec<usize>, k: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("partition"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::param("partition", format!("label {bad} not below k={k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Relabels parts in order of first appearance, dropping empty parts.
    fn canonical(&self) -> Vec<usize> {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        self.labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect()
    }
}

/// Joint counts of two partitions over the same samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<usize>>,
    n: usize,
}

impl ContingencyTable {
    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let cols = self.counts.first().map_or(0, Vec::len);
        (0..cols)
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Mutual information of the two partitions, accumulated row-major over
    /// nonzero cells.
    fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        let rows = self.row_sums();
        let cols = self.col_sums();
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &nij) in row.iter().enumerate() {
                if nij == 0 {
                    continue;
                }
                let nij = nij as f64;
                mi += (nij / n) * ((n * nij) / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
        mi
    }
}

pub fn contingency_table(a: &Partition, b: &Partition) -> Result<ContingencyTable> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut counts = vec![vec![0usize; b.k()]; a.k()];
    for (&i, &j) in a.labels().iter().zip(b.labels()) {
        counts[i][j] += 1;
    }
    Ok(ContingencyTable { counts, n: a.len() })
}

fn entropy_of_sizes(sizes: &[usize], n: usize) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            // same algebraic form as the mutual-information terms, so that
            // I(a, a) and H(a) agree bit for bit
            (c / n) * ((n * c) / (c * c)).ln()
        })
        .sum()
}

/// Shannon entropy of the part-size distribution, in nats.
pub fn entropy(p: &Partition) -> f64 {
    entropy_of_sizes(&p.part_sizes(), p.len())
}

/// How mutual information is normalized into `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `2I / (H(a) + H(b))`.
    #[default]
    Arithmetic,
    /// `I / sqrt(H(a) H(b))`.
    Geometric,
    /// `I / max(H(a), H(b))`.
    Max,
}

/// Normalized mutual information with the arithmetic-mean normalization
/// `2I / (H(a) + H(b))`.
///
/// Two constant partitions are identical, so their NMI is 1.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    nmi_with(a, b, NmiNormalization::Arithmetic)
}

pub fn nmi_with(a: &Partition, b: &Partition, norm: NmiNormalization) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    // Canonical labels plus a canonical orientation make the result exactly
    // invariant to argument order and to relabeling.
    let ca = a.canonical();
    let cb = b.canonical();
    let (rows, cols) = if ca <= cb { (ca, cb) } else { (cb, ca) };
    let rows = Partition::new(rows)?;
    let cols = Partition::new(cols)?;
    let table = contingency_table(&rows, &cols)?;

    let h_rows = entropy(&rows);
    let h_cols = entropy(&cols);
    let mi = table.mutual_information();

    let value = match norm {
        NmiNormalization::Arithmetic => {
            let denom = h_rows + h_cols;
            if denom == 0.0 {
                return Ok(1.0);
            }
            2.0 * mi / denom
        }
        NmiNormalization::Geometric => {
            if h_rows == 0.0 && h_cols == 0.0 {
                return Ok(1.0);
            }
            let denom = (h_rows * h_cols).sqrt();
            if denom == 0.0 {
                return Ok(0.0);
            }
            mi / denom
        }
        NmiNormalization::Max => {
            let denom = h_rows.max(h_cols);
            if denom == 0.0 {
                return Ok(1.0);
            }
            mi / denom
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Indices of the `k` nearest other rows to row `i`, distance ties broken by
/// lower index. Returned in no particular order.
fn nearest_others(data: &DenseMatrix, i: usize, k: usize) -> Vec<usize> {
    let xi = data.row(i);
    let mut cand: Vec<(f64, usize)> = (0..data.rows())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(xi, data.row(j)), j))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
    };
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.into_iter().map(|(_, j)| j).collect()
}

fn purity_with<K>(data: &DenseMatrix, labels: &Partition, k_of: K) -> Result<f64>
where
    K: Fn(usize) -> usize + Sync + Send,
{
    let n = data.rows();
    if n < 2 {
        return Err(Error::param("data", format!("kNN purity needs n >= 2, got {n}")));
    }
    if labels.len() != n {
        return Err(Error::LabelLengthMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    let lab = labels.labels();
    let fractions = par::map_range(n, |i| {
        let k = k_of(i).clamp(1, n - 1);
        let same = nearest_others(data, i, k)
            .into_iter()
            .filter(|&j| lab[j] == lab[i])
            .count();
        same as f64 / k as f64
    });
    // ascending point index
    let total: f64 = fractions.iter().sum();
    Ok(total / n as f64)
}

/// Mean over points of the fraction of the point's `k` nearest neighbors
/// (itself excluded) sharing its class. `k` is capped at `n - 1`.
pub fn knn_purity(data: &DenseMatrix, labels: &Partition, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    purity_with(data, labels, |_| k)
}

/// kNN purity where each point uses `k` equal to the size of its own class
/// (capped at `n - 1`).
pub fn knn_purity_per_class(data: &DenseMatrix, labels: &Partition) -> Result<f64> {
    let sizes = labels.part_sizes();
    let lab = labels.labels();
    purity_with(data, labels, |i| sizes[lab[i]])
}
