//! PCA for inspection plots and per-class representative selection.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, DenseMatrix};
use crate::tensor_io::LabelVector;

/// A fitted principal-component basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// Column means of the fitted data.
    pub mean: Vec<f64>,
    /// `p x d`, orthonormal rows, largest-magnitude entry of each row positive.
    pub components: DenseMatrix,
    /// Sample-covariance eigenvalues (divisor `n - 1`), descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.eigenvalues.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coords: DenseMatrix,
    pub layer_id: String,
}

impl Projection {
    pub fn for_layer(mut self, layer_id: impl Into<String>) -> Self {
        self.layer_id = layer_id.into();
        self
    }
}

fn column_means(data: &DenseMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; data.cols()];
    for row in data.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = data.rows() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Fits the top `p` principal components of `data`.
pub fn pca_fit(data: &DenseMatrix, p: usize) -> Result<PcaModel> {
    let (n, d) = (data.rows(), data.cols());
    let max_p = (n.saturating_sub(1)).min(d);
    if p == 0 || p > max_p {
        return Err(Error::param(
            "p",
            format!("must be in 1..={max_p} for {n} rows and {d} columns, got {p}"),
        ));
    }
    let mean = column_means(data);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in data.iter_rows() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&mean) {
            *c = v - m;
        }
        for a in 0..d {
            let ca = centered[a];
            for b in a..d {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });

    let mut components = Vec::with_capacity(p * d);
    let mut eigenvalues = Vec::with_capacity(p);
    for &idx in order.iter().take(p) {
        let col = eig.eigenvectors.column(idx);
        let mut pivot = 0;
        for i in 1..d {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        components.extend(col.iter().map(|v| sign * v));
        // rank-deficient data can produce tiny negative round-off
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }

    Ok(PcaModel {
        mean,
        components: DenseMatrix::new(p, d, components)?,
        eigenvalues,
    })
}

/// Projects rows onto the model's components: `(x - mean) . componentsᵀ`.
pub fn pca_transform(model: &PcaModel, data: &DenseMatrix) -> Result<Projection> {
    let d = model.dims();
    if data.cols() != d {
        return Err(Error::ShapeMismatch(format!(
            "model expects {d} columns, data has {}",
            data.cols()
        )));
    }
    let p = model.n_components();
    let mut coords = Vec::with_capacity(data.rows() * p);
    let mut centered = vec![0.0; d];
    for row in data.iter_rows() {
        for ((c, v), m) in centered.iter_mut().zip(row).zip(&model.mean) {
            *c = v - m;
        }
        for comp in model.components.iter_rows() {
            coords.push(centered.iter().zip(comp).map(|(a, b)| a * b).sum());
        }
    }
    Ok(Projection {
        coords: DenseMatrix::new(data.rows(), p, coords)?,
        layer_id: String::new(),
    })
}

/// For each class, the indices of up to `count` members nearest to the class
/// centroid in the full embedding space, nearest first. Distance ties go to
/// the lower index.
pub fn representatives(
    data: &DenseMatrix,
    labels: &LabelVector,
    count: usize,
) -> Result<Vec<Vec<usize>>> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    if labels.len() != data.rows() {
        return Err(Error::LabelLengthMismatch {
            expected: data.rows(),
            found: labels.len(),
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); labels.class_count()];
    for (i, &c) in labels.labels().iter().enumerate() {
        members[c].push(i);
    }
    members
        .iter()
        .enumerate()
        .map(|(class, idx)| {
            if idx.is_empty() {
                return Err(Error::param("labels", format!("class {class} has no members")));
            }
            let centroid = column_means(&data.select_rows(idx)?);
            let mut ranked: Vec<(f64, usize)> = idx
                .iter()
                .map(|&i| (squared_distance(data.row(i), &centroid), i))
                .collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            Ok(ranked.into_iter().take(count).map(|(_, i)| i).collect())
        })
        .collect()
}
