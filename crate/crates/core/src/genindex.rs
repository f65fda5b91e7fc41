//! The generalization index: per-layer k-means/NMI and kNN purity, the
//! maximum over layers, epoch sweeps, and cross-network ranking.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans_fit, KMeansConfig};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::metrics::{knn_purity, knn_purity_per_class, nmi, NmiNormalization};
use crate::par;
use crate::tensor_io::{DatasetBundle, LabelVector, LayerStack, Split};

/// How the neighbor count of the kNN purity metric is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnnRule {
    /// `k` = the common class size. Classes must be balanced.
    Balanced,
    /// Each point uses `k` = the size of its own class.
    #[default]
    PerPoint,
}

impl fmt::Display for KnnRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KnnRule::Balanced => "balanced",
            KnnRule::PerPoint => "per-point",
        })
    }
}

impl std::str::FromStr for KnnRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" => Ok(KnnRule::Balanced),
            "per-point" => Ok(KnnRule::PerPoint),
            other => Err(Error::param(
                "knn_rule",
                format!("expected balanced or per-point, got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMetrics {
    #[serde(rename = "id")]
    pub layer_id: String,
    #[serde(rename = "index")]
    pub layer_index: usize,
    pub nmi: f64,
    pub knn_purity: f64,
    #[serde(rename = "inertia")]
    pub kmeans_inertia: f64,
    #[serde(rename = "iterations")]
    pub kmeans_iterations: usize,
    /// Restarts run for this layer; echoed once in the report config.
    #[serde(skip)]
    pub restarts_used: usize,
}

/// Every stochastic or tunable input behind a report's numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub knn_rule: KnnRule,
    pub nmi_normalization: NmiNormalization,
}

impl ReportConfig {
    pub fn from_kmeans(config: &KMeansConfig, rule: KnnRule) -> Self {
        Self {
            k: config.k,
            restarts: config.n_restarts,
            max_iters: config.max_iters,
            tol: config.tol,
            seed: config.seed,
            knn_rule: rule,
            nmi_normalization: NmiNormalization::Arithmetic,
        }
    }

    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            max_iters: self.max_iters,
            n_restarts: self.restarts,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub model: String,
    pub epoch: u64,
    pub split: Split,
    pub g: f64,
    pub g_layer: String,
    pub g_knn: f64,
    pub g_knn_layer: String,
    pub config: ReportConfig,
    pub layers: Vec<LayerMetrics>,
}

impl GeneralizationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text).map_err(|e| Error::Manifest {
            field: "<report>".into(),
            message: e.to_string(),
        })?;
        if report.model.is_empty() {
            return Err(Error::Manifest {
                field: "model".into(),
                message: "must not be empty".into(),
            });
        }
        if !report.g.is_finite() {
            return Err(Error::Manifest {
                field: "g".into(),
                message: "must be finite".into(),
            });
        }
        Ok(report)
    }
}

fn knn_for(embedding: &DenseMatrix, labels: &LabelVector, rule: KnnRule) -> Result<f64> {
    let part = labels.as_partition();
    match rule {
        KnnRule::PerPoint => knn_purity_per_class(embedding, &part),
        KnnRule::Balanced => {
            let sizes = labels.class_sizes();
            if sizes.iter().any(|&s| s != sizes[0]) {
                return Err(Error::param(
                    "knn_rule",
                    format!("balanced rule needs equal class sizes, got {sizes:?}"),
                ));
            }
            knn_purity(embedding, &part, sizes[0])
        }
    }
}

/// Clusters one layer's embedding with k-means and scores it against the
/// ground truth with NMI and kNN purity.
pub fn evaluate_layer(
    layer_id: &str,
    layer_index: usize,
    embedding: &DenseMatrix,
    labels: &LabelVector,
    config: &KMeansConfig,
    rule: KnnRule,
) -> Result<LayerMetrics> {
    if labels.class_count() < 2 {
        return Err(Error::SingleClass(labels.class_count()));
    }
    if config.k != labels.class_count() {
        return Err(Error::param(
            "k",
            format!(
                "k={} must equal the {} classes of the evaluated labels",
                config.k,
                labels.class_count()
            ),
        ));
    }
    if labels.len() != embedding.rows() {
        return Err(Error::LabelLengthMismatch {
            expected: embedding.rows(),
            found: labels.len(),
        });
    }
    let fit = kmeans_fit(embedding, config)?;
    Ok(LayerMetrics {
        layer_id: layer_id.to_string(),
        layer_index,
        nmi: nmi(&fit.assignment, &labels.as_partition())?,
        knn_purity: knn_for(embedding, labels, rule)?,
        kmeans_inertia: fit.inertia,
        kmeans_iterations: fit.iterations,
        restarts_used: config.n_restarts,
    })
}

/// First index holding the maximum value.
fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values.enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if v <= b => best,
        _ => Some((i, v)),
    })
}

/// Evaluates every layer of the bundle and takes `g` as the best layer's NMI.
pub fn generalization_index(
    bundle: &DatasetBundle,
    config: &KMeansConfig,
    rule: KnnRule,
) -> Result<GeneralizationReport> {
    let layers = bundle.stack.layers();
    let per_layer = par::try_map_range(layers.len(), |i| {
        let (id, m) = &layers[i];
        evaluate_layer(id, i, m, &bundle.labels, config, rule)
    })?;
    let (gi, g) = argmax(per_layer.iter().map(|l| l.nmi)).ok_or(Error::EmptyInput("layers"))?;
    let (ki, g_knn) =
        argmax(per_layer.iter().map(|l| l.knn_purity)).ok_or(Error::EmptyInput("layers"))?;
    Ok(GeneralizationReport {
        model: bundle.model.clone(),
        epoch: bundle.epoch,
        split: bundle.split,
        g,
        g_layer: per_layer[gi].layer_id.clone(),
        g_knn,
        g_knn_layer: per_layer[ki].layer_id.clone(),
        config: ReportConfig::from_kmeans(config, rule),
        layers: per_layer,
    })
}

/// One report per bundle, in epoch order. Bundles must share model and split
/// and have strictly increasing epochs.
pub fn epoch_sweep(
    bundles: &[DatasetBundle],
    config: &KMeansConfig,
    rule: KnnRule,
) -> Result<Vec<GeneralizationReport>> {
    let first = bundles.first().ok_or(Error::EmptyInput("sweep"))?;
    for pair in bundles.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.model != first.model {
            return Err(Error::MixedSweep {
                what: "model",
                first: first.model.clone(),
                other: next.model.clone(),
            });
        }
        if next.split != first.split {
            return Err(Error::MixedSweep {
                what: "split",
                first: first.split.to_string(),
                other: next.split.to_string(),
            });
        }
        if next.epoch <= prev.epoch {
            return Err(Error::EpochOrder {
                previous: prev.epoch,
                next: next.epoch,
            });
        }
    }
    par::try_map_range(bundles.len(), |i| {
        generalization_index(&bundles[i], config, rule)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub model: String,
    pub g: f64,
    pub g_layer: String,
    pub g_knn: f64,
}

/// Orders networks by descending `g`, ties broken by ascending model name.
pub fn rank_networks(reports: &[GeneralizationReport]) -> Result<Vec<RankEntry>> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("reports"));
    }
    let mut seen = HashSet::new();
    for r in reports {
        if !seen.insert(r.model.as_str()) {
            return Err(Error::DuplicateModel(r.model.clone()));
        }
    }
    let mut entries: Vec<RankEntry> = reports
        .iter()
        .map(|r| RankEntry {
            model: r.model.clone(),
            g: r.g,
            g_layer: r.g_layer.clone(),
            g_knn: r.g_knn,
        })
        .collect();
    entries.sort_by(|a, b| match b.g.total_cmp(&a.g) {
        Ordering::Equal => a.model.cmp(&b.model),
        o => o,
    });
    Ok(entries)
}

/// Vertices of a regular simplex with unit edge length, in `n - 1` dimensions.
fn simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    // Helmert basis of the sum-zero hyperplane: vertex c has coordinate
    // h_j[c] on axis j - 1, giving pairwise distance sqrt(2) before scaling.
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|c| {
            (1..n)
                .map(|j| {
                    let norm = ((j * (j + 1)) as f64).sqrt();
                    let h = match c.cmp(&j) {
                        Ordering::Less => 1.0,
                        Ordering::Equal => -(j as f64),
                        Ordering::Greater => 0.0,
                    };
                    scale * h / norm
                })
                .collect()
        })
        .collect()
}

/// Gaussian blobs with one layer per separation. Every layer shares the
/// labels (class-major row order); layer `l` draws its noise from seed
/// `seed + l`, so a one-layer stack matches [`synth_blobs`].
pub fn synth_stack(
    n_classes: usize,
    per_class: usize,
    dims: usize,
    separations: &[f64],
    seed: u64,
) -> Result<DatasetBundle> {
    if n_classes < 2 {
        return Err(Error::param("classes", format!("must be at least 2, got {n_classes}")));
    }
    if per_class < 2 {
        return Err(Error::param("per_class", format!("must be at least 2, got {per_class}")));
    }
    if dims == 0 || dims < n_classes - 1 {
        return Err(Error::param(
            "dims",
            format!("need at least {} dimensions for {n_classes} equidistant centers, got {dims}", (n_classes - 1).max(1)),
        ));
    }
    if separations.is_empty() {
        return Err(Error::param("separations", "need at least one separation"));
    }
    if let Some(bad) = separations.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::param("separations", format!("must be finite and >= 0, got {bad}")));
    }

    let unit = simplex_vertices(n_classes);
    let n = n_classes * per_class;
    let layers = separations
        .iter()
        .enumerate()
        .map(|(l, &sep)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(l as u64));
            let mut data = Vec::with_capacity(n * dims);
            for vertex in &unit {
                for _ in 0..per_class {
                    for t in 0..dims {
                        let center = vertex.get(t).map_or(0.0, |v| v * sep);
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        data.push(center + noise);
                    }
                }
            }
            Ok((format!("layer_{l}"), DenseMatrix::new(n, dims, data)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let labels: Vec<usize> = (0..n_classes)
        .flat_map(|c| std::iter::repeat_n(c, per_class))
        .collect();
    DatasetBundle::new(
        LayerStack::new(layers)?,
        LabelVector::from_canonical(labels)?,
        "synthetic",
        0,
        Split::Unseen,
    )
}

/// Isotropic unit-variance Gaussian blobs around equidistant centers whose
/// pairwise distance is `separation`.
pub fn synth_blobs(
    n_classes: usize,
    per_class: usize,
    dims: usize,
    separation: f64,
    seed: u64,
) -> Result<DatasetBundle> {
    synth_stack(n_classes, per_class, dims, &[separation], seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::squared_distance;

    fn report(model: &str, g: f64) -> GeneralizationReport {
        GeneralizationReport {
            model: model.into(),
            epoch: 0,
            split: Split::Unseen,
            g,
            g_layer: "l0".into(),
            g_knn: 0.5,
            g_knn_layer: "l0".into(),
            config: ReportConfig::from_kmeans(&KMeansConfig::new(5, 0), KnnRule::PerPoint),
            layers: vec![],
        }
    }

    #[test]
    fn simplex_is_equilateral() {
        for n in 2..8 {
            let v = simplex_vertices(n);
            for i in 0..n {
                for j in 0..i {
                    let d = squared_distance(&v[i], &v[j]).sqrt();
                    assert!((d - 1.0).abs() < 1e-12, "n={n} ({i},{j}) -> {d}");
                }
            }
        }
    }

    #[test]
    fn synth_shape_and_determinism() {
        let b = synth_blobs(5, 100, 8, 10.0, 7).unwrap();
        assert_eq!(b.stack.rows(), 500);
        assert_eq!(b.stack.layers()[0].1.cols(), 8);
        assert_eq!(b.labels.class_sizes(), vec![100; 5]);
        assert_eq!(b, synth_blobs(5, 100, 8, 10.0, 7).unwrap());
        assert_ne!(b, synth_blobs(5, 100, 8, 10.0, 8).unwrap());
        let stack = synth_stack(5, 100, 8, &[10.0, 3.0], 7).unwrap();
        assert_eq!(stack.stack.layers()[0], b.stack.layers()[0]);
    }

    #[test]
    fn synth_rejects_bad_counts() {
        assert!(synth_blobs(1, 10, 4, 1.0, 0).is_err());
        assert!(synth_blobs(3, 1, 4, 1.0, 0).is_err());
        assert!(synth_blobs(5, 10, 3, 1.0, 0).is_err());
        assert!(synth_blobs(3, 10, 2, -1.0, 0).is_err());
        assert!(synth_stack(3, 10, 2, &[], 0).is_err());
    }

    #[test]
    fn evaluate_rejects_single_class_and_k_mismatch() {
        let data = DenseMatrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let one = LabelVector::from_canonical(vec![0; 4]).unwrap();
        let cfg = KMeansConfig::new(2, 0);
        assert!(matches!(
            evaluate_layer("a", 0, &data, &one, &cfg, KnnRule::PerPoint),
            Err(Error::SingleClass(1))
        ));
        let two = LabelVector::from_canonical(vec![0, 0, 1, 1]).unwrap();
        let cfg3 = KMeansConfig::new(3, 0);
        assert!(evaluate_layer("a", 0, &data, &two, &cfg3, KnnRule::PerPoint).is_err());
    }

    #[test]
    fn balanced_rule_requires_balance() {
        let data = DenseMatrix::new(5, 1, vec![0.0, 0.1, 5.0, 5.1, 5.2]).unwrap();
        let labels = LabelVector::from_canonical(vec![0, 0, 1, 1, 1]).unwrap();
        let cfg = KMeansConfig::new(2, 0);
        assert!(evaluate_layer("a", 0, &data, &labels, &cfg, KnnRule::Balanced).is_err());
        let m = evaluate_layer("a", 0, &data, &labels, &cfg, KnnRule::PerPoint).unwrap();
        assert_eq!(m.nmi, 1.0);
        // k_i = class size: class 0 points see 1 classmate of 2, class 1 points 2 of 3
        let expected = (2.0 * 0.5 + 3.0 * (2.0 / 3.0)) / 5.0;
        assert!((m.knn_purity - expected).abs() < 1e-15);
    }

    #[test]
    fn identical_layers_tie_to_first() {
        let b = synth_blobs(3, 20, 4, 6.0, 1).unwrap();
        let m = b.stack.layers()[0].1.clone();
        let stack = LayerStack::new(vec![("first".into(), m.clone()), ("second".into(), m)]).unwrap();
        let bundle = DatasetBundle::new(stack, b.labels.clone(), "m", 0, Split::Unseen).unwrap();
        let r = generalization_index(&bundle, &KMeansConfig::new(3, 0), KnnRule::PerPoint).unwrap();
        assert_eq!(r.layers[0].nmi, r.layers[1].nmi);
        assert_eq!(r.g_layer, "first");
        assert_eq!(r.g_knn_layer, "first");
    }

    #[test]
    fn sweep_validation() {
        let mut a = synth_blobs(2, 5, 2, 4.0, 0).unwrap();
        let mut b = a.clone();
        a.epoch = 1;
        b.epoch = 1;
        let cfg = KMeansConfig::new(2, 0);
        assert!(matches!(
            epoch_sweep(&[a.clone(), b.clone()], &cfg, KnnRule::PerPoint),
            Err(Error::EpochOrder { .. })
        ));
        b.epoch = 2;
        b.model = "other".into();
        assert!(matches!(
            epoch_sweep(&[a.clone(), b.clone()], &cfg, KnnRule::PerPoint),
            Err(Error::MixedSweep { what: "model", .. })
        ));
        b.model = a.model.clone();
        let reports = epoch_sweep(&[a, b], &cfg, KnnRule::PerPoint).unwrap();
        assert_eq!(reports.iter().map(|r| r.epoch).collect::<Vec<_>>(), vec![1, 2]);
        assert!(epoch_sweep(&[], &cfg, KnnRule::PerPoint).is_err());
    }

    #[test]
    fn ranking_ties_and_errors() {
        let ranked = rank_networks(&[report("Swin", 0.62), report("ResNet", 0.62), report("ViT", 0.70)]).unwrap();
        let names: Vec<_> = ranked.iter().map(|e| e.model.as_str()).collect();
        assert_eq!(names, vec!["ViT", "ResNet", "Swin"]);
        assert!(rank_networks(&[]).is_err());
        assert!(matches!(
            rank_networks(&[report("a", 0.1), report("a", 0.2)]),
            Err(Error::DuplicateModel(_))
        ));
    }

    #[test]
    fn report_json_round_trip() {
        let b = synth_blobs(3, 10, 2, 8.0, 4).unwrap();
        let r = generalization_index(&b, &KMeansConfig::new(3, 4), KnnRule::Balanced).unwrap();
        let text = r.to_json();
        let back = GeneralizationReport::from_json(&text).unwrap();
        assert_eq!(back.g, r.g);
        assert_eq!(back.config, r.config);
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"knn_rule\": \"balanced\""));
    }
}
