use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    // NPY format errors.
    #[error("bad magic: not an NPY file")]
    BadMagic,
    #[error("unsupported NPY version {major}.{minor} (only 1.0 is supported)")]
    UnsupportedVersion { major: u8, minor: u8 },
    #[error("unsupported dtype {0:?}")]
    UnsupportedDtype(String),
    #[error("unsupported layout: fortran_order arrays are not supported")]
    UnsupportedLayout,
    #[error("unsupported shape {shape:?}: expected {expected} dimension(s)")]
    BadShape { shape: Vec<usize>, expected: usize },
    #[error("malformed NPY header: {0}")]
    MalformedHeader(String),
    #[error("truncated NPY payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("empty matrix ({rows}x{cols})")]
    Empty { rows: usize, cols: usize },

    // Structural errors.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid manifest field `{field}`: {message}")]
    Manifest { field: String, message: String },
    #[error("row-count mismatch: layer `{layer_id}` has {found} rows, expected {expected}")]
    RowCountMismatch {
        layer_id: String,
        expected: usize,
        found: usize,
    },
    #[error("label length mismatch: {found} labels for {expected} rows")]
    LabelLengthMismatch { expected: usize, found: usize },
    #[error("duplicate layer id `{0}`")]
    DuplicateLayer(String),
    #[error("negative label {0}")]
    NegativeLabel(i64),
    #[error("partition length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    // Parameter errors.
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error("need at least two classes, found {0}")]
    SingleClass(usize),
    #[error("unknown layer `{0}`")]
    UnknownLayer(String),
    #[error("epochs must be strictly increasing: {previous} then {next}")]
    EpochOrder { previous: u64, next: u64 },
    #[error("mixed {what} in sweep: `{first}` and `{other}`")]
    MixedSweep {
        what: &'static str,
        first: String,
        other: String,
    },
    #[error("duplicate model `{0}`")]
    DuplicateModel(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("{field}: {source}")]
    At {
        field: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at(field: impl Into<String>, source: Error) -> Self {
        Error::At {
            field: field.into(),
            source: Box::new(source),
        }
    }

    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::BadMagic => "bad_magic",
            Error::UnsupportedVersion { .. } => "unsupported_version",
            Error::UnsupportedDtype(_) => "unsupported_dtype",
            Error::UnsupportedLayout => "unsupported_layout",
            Error::BadShape { .. } => "bad_shape",
            Error::MalformedHeader(_) => "malformed_header",
            Error::Truncated { .. } => "truncated",
            Error::NonFinite { .. } => "non_finite",
            Error::Empty { .. } => "empty",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::Manifest { .. } => "manifest",
            Error::RowCountMismatch { .. } => "row_count_mismatch",
            Error::LabelLengthMismatch { .. } => "label_length_mismatch",
            Error::DuplicateLayer(_) => "duplicate_layer",
            Error::NegativeLabel(_) => "negative_label",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::SingleClass(_) => "single_class",
            Error::UnknownLayer(_) => "unknown_layer",
            Error::EpochOrder { .. } => "epoch_order",
            Error::MixedSweep { .. } => "mixed_sweep",
            Error::DuplicateModel(_) => "duplicate_model",
            Error::EmptyInput(_) => "empty_input",
            Error::At { source, .. } => source.kind(),
        }
    }

    /// The input field the error refers to, when there is one.
    pub fn field(&self) -> Option<String> {
        match self {
            Error::Manifest { field, .. } => Some(field.clone()),
            Error::RowCountMismatch { layer_id, .. } => Some(format!("layers[{layer_id}]")),
            Error::LabelLengthMismatch { .. } | Error::NegativeLabel(_) => {
                Some("labels".to_string())
            }
            Error::DuplicateLayer(id) => Some(format!("layers[{id}].id")),
            Error::InvalidParameter { name, .. } => Some((*name).to_string()),
            Error::UnknownLayer(_) => Some("layer".to_string()),
            Error::EpochOrder { .. } => Some("epoch".to_string()),
            Error::MixedSweep { what, .. } => Some((*what).to_string()),
            Error::DuplicateModel(_) => Some("model".to_string()),
            Error::At { field, .. } => Some(field.clone()),
            _ => None,
        }
    }
}
