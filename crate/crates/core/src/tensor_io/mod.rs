//! Embedding bundles on disk: per-layer NPY matrices, an NPY label vector and
//! a JSON manifest tying them together.

mod npy;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::metrics::Partition;

pub use npy::{
    decode_labels, decode_matrix, encode_labels, encode_matrix, read_labels_npy, read_npy,
    write_labels_npy, write_npy,
};

/// Ground-truth class labels, canonicalized to `0..class_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    /// `originals[c]` is the on-disk label that canonical class `c` came from.
    originals: Vec<i64>,
}

impl LabelVector {
    /// Canonicalizes arbitrary non-negative labels: the smallest original
    /// label becomes 0, the next 1, and so on.
    pub fn from_original(raw: &[i64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput("labels"));
        }
        if let Some(&neg) = raw.iter().find(|&&l| l < 0) {
            return Err(Error::NegativeLabel(neg));
        }
        let mut originals: Vec<i64> = raw.to_vec();
        originals.sort_unstable();
        originals.dedup();
        let index: BTreeMap<i64, usize> = originals
            .iter()
            .enumerate()
            .map(|(c, &o)| (o, c))
            .collect();
        let labels = raw.iter().map(|l| index[l]).collect();
        Ok(Self { labels, originals })
    }

    /// Labels that are already canonical class indices.
    pub fn from_canonical(labels: Vec<usize>) -> Result<Self> {
        let raw: Vec<i64> = labels.iter().map(|&l| l as i64).collect();
        Self::from_original(&raw)
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

    pub fn class_count(&self) -> usize {
        self.originals.len()
    }

    /// Original label for each canonical class index.
    pub fn original_labels(&self) -> &[i64] {
        &self.originals
    }

    /// The labels mapped back to their on-disk values.
    pub fn to_original(&self) -> Vec<i64> {
        self.labels.iter().map(|&c| self.originals[c]).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn as_partition(&self) -> Partition {
        Partition::with_parts(self.labels.clone(), self.class_count())
            .expect("canonical labels form a valid partition")
    }

    /// Labels of the given rows, re-canonicalized.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let raw: Vec<i64> = indices
            .iter()
            .map(|&i| {
                self.labels
                    .get(i)
                    .map(|&c| self.originals[c])
                    .ok_or_else(|| Error::ShapeMismatch(format!("label index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        Self::from_original(&raw)
    }
}

/// Ordered per-layer embeddings sharing one row count.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    layers: Vec<(String, DenseMatrix)>,
}

impl LayerStack {
    pub fn new(layers: Vec<(String, DenseMatrix)>) -> Result<Self> {
        let Some((_, first)) = layers.first() else {
            return Err(Error::EmptyInput("layer stack"));
        };
        let rows = first.rows();
        let mut seen = HashSet::new();
        for (id, m) in &layers {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateLayer(id.clone()));
            }
            if m.rows() != rows {
                return Err(Error::RowCountMismatch {
                    layer_id: id.clone(),
                    expected: rows,
                    found: m.rows(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn rows(&self) -> usize {
        self.layers[0].1.rows()
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[(String, DenseMatrix)] {
        &self.layers
    }

    pub fn get(&self, layer_id: &str) -> Option<&DenseMatrix> {
        self.layers
            .iter()
            .find(|(id, _)| id == layer_id)
            .map(|(_, m)| m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Seen,
    Unseen,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Seen => "seen",
            Split::Unseen => "unseen",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seen" => Ok(Split::Seen),
            "unseen" => Ok(Split::Unseen),
            other => Err(Error::Manifest {
                field: "split".into(),
                message: format!("expected \"seen\" or \"unseen\", got {other:?}"),
            }),
        }
    }
}

/// Everything needed to evaluate one model at one epoch on one split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub stack: LayerStack,
    pub labels: LabelVector,
    pub model: String,
    pub epoch: u64,
    pub split: Split,
}

impl DatasetBundle {
    pub fn new(
        stack: LayerStack,
        labels: LabelVector,
        model: impl Into<String>,
        epoch: u64,
        split: Split,
    ) -> Result<Self> {
        if labels.len() != stack.rows() {
            return Err(Error::LabelLengthMismatch {
                expected: stack.rows(),
                found: labels.len(),
            });
        }
        Ok(Self {
            stack,
            labels,
            model: model.into(),
            epoch,
            split,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestLayer {
    pub id: String,
    pub path: String,
}

/// On-disk manifest. Paths are resolved relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub model: String,
    pub epoch: u64,
    pub split: Split,
    pub labels: String,
    pub layers: Vec<ManifestLayer>,
}

fn manifest_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Manifest {
        field: field.into(),
        message: message.into(),
    }
}

fn string_field(obj: &serde_json::Map<String, Value>, key: &str, field: &str) -> Result<String> {
    match obj.get(key) {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(manifest_err(field, "must not be empty")),
        Some(_) => Err(manifest_err(field, "must be a string")),
        None => Err(manifest_err(field, "missing")),
    }
}

impl Manifest {
    /// Validates a manifest document field by field, naming the first bad field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| manifest_err("<document>", format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| manifest_err("<document>", "must be a JSON object"))?;

        let model = string_field(obj, "model", "model")?;
        let epoch = match obj.get("epoch") {
            Some(v) => v
                .as_u64()
                .ok_or_else(|| manifest_err("epoch", "must be a non-negative integer"))?,
            None => return Err(manifest_err("epoch", "missing")),
        };
        let split = match obj.get("split") {
            Some(Value::String(s)) => s.parse::<Split>()?,
            Some(_) => return Err(manifest_err("split", "must be a string")),
            None => return Err(manifest_err("split", "missing")),
        };
        let labels = string_field(obj, "labels", "labels")?;
        let layers = match obj.get("layers") {
            Some(Value::Array(items)) if !items.is_empty() => items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let entry = item
                        .as_object()
                        .ok_or_else(|| manifest_err(format!("layers[{i}]"), "must be an object"))?;
                    Ok(ManifestLayer {
                        id: string_field(entry, "id", &format!("layers[{i}].id"))?,
                        path: string_field(entry, "path", &format!("layers[{i}].path"))?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            Some(Value::Array(_)) => return Err(manifest_err("layers", "must not be empty")),
            Some(_) => return Err(manifest_err("layers", "must be an array")),
            None => return Err(manifest_err("layers", "missing")),
        };
        let mut ids = HashSet::new();
        for (i, layer) in layers.iter().enumerate() {
            if !ids.insert(layer.id.as_str()) {
                return Err(Error::at(
                    format!("layers[{i}].id"),
                    Error::DuplicateLayer(layer.id.clone()),
                ));
            }
        }
        Ok(Self {
            model,
            epoch,
            split,
            labels,
            layers,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn with_field(field: String, err: Error) -> Error {
    match err {
        Error::Io { path, source } => Error::Manifest {
            field,
            message: format!("cannot read {}: {source}", path.display()),
        },
        other => Error::at(field, other),
    }
}

/// Loads and fully validates the bundle described by a manifest file.
pub fn load_bundle(manifest_path: impl AsRef<Path>) -> Result<DatasetBundle> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| Error::at("manifest", Error::io(manifest_path, e)))?;
    let manifest = Manifest::from_json(&text)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let raw_labels = read_labels_npy(resolve(base, &manifest.labels))
        .map_err(|e| with_field("labels".into(), e))?;
    let labels = LabelVector::from_original(&raw_labels)?;

    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, layer) in manifest.layers.iter().enumerate() {
        let m = read_npy(resolve(base, &layer.path))
            .map_err(|e| with_field(format!("layers[{i}].path"), e))?;
        layers.push((layer.id.clone(), m));
    }
    let stack = LayerStack::new(layers)?;
    DatasetBundle::new(stack, labels, manifest.model, manifest.epoch, manifest.split)
}

/// Writes a bundle as `layer_<i>.npy`, `labels.npy` and `manifest.json` under
/// `dir`, returning the manifest path. The manifest is written last.
pub fn write_bundle(bundle: &DatasetBundle, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut layers = Vec::with_capacity(bundle.stack.len());
    for (i, (id, m)) in bundle.stack.layers().iter().enumerate() {
        let file = format!("layer_{i}.npy");
        write_npy(m, dir.join(&file))?;
        layers.push(ManifestLayer {
            id: id.clone(),
            path: file,
        });
    }
    write_labels_npy(&bundle.labels.to_original(), dir.join("labels.npy"))?;
    let manifest = Manifest {
        model: bundle.model.clone(),
        epoch: bundle.epoch,
        split: bundle.split,
        labels: "labels.npy".into(),
        layers,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
