//! Layerwise generalization analysis for classifier embeddings.
//!
//! Given per-layer embedding matrices of samples from classes a network was
//! never trained on, this crate clusters every layer with k-means, compares
//! the clusters with the true classes using normalized mutual information and
//! reports the best layer's score as the generalization index `g`. A kNN
//! purity score, epoch sweeps, network ranking and PCA projections round out
//! the toolkit.
//!
//! Work is parallelized with rayon when the `parallel` feature (default) is
//! enabled. Every parallel stage collects its results in index order before
//! reducing, so results are bit-identical for any thread count and for the
//! sequential build.

pub mod clustering;
pub mod error;
pub mod genindex;
pub mod matrix;
pub mod metrics;
mod par;
pub mod projection;
pub mod tensor_io;

pub use clustering::{inertia, kmeans_fit, kmeans_pp_init, KMeansConfig, KMeansResult};
pub use error::{Error, Result};
pub use genindex::{
    epoch_sweep, evaluate_layer, generalization_index, rank_networks, synth_blobs, synth_stack,
    GeneralizationReport, KnnRule, LayerMetrics, RankEntry, ReportConfig,
};
pub use matrix::DenseMatrix;
pub use metrics::{
    contingency_table, entropy, knn_purity, knn_purity_per_class, nmi, nmi_with,
    ContingencyTable, NmiNormalization, Partition,
};
pub use projection::{pca_fit, pca_transform, representatives, PcaModel, Projection};
pub use tensor_io::{
    load_bundle, read_labels_npy, read_npy, write_bundle, write_labels_npy, write_npy,
    DatasetBundle, LabelVector, LayerStack, Manifest, ManifestLayer, Split,
};
