//! Collection-level diagnostics built on distance matrices.

mod anomaly;
mod cluster;
mod inconsistency;
mod norms;

use thiserror::Error;

pub use anomaly::{anomaly_scores, AnomalyRanking};
pub use cluster::{hcluster, hcluster_dissimilarity, ClusterInput, Dendrogram, Linkage, Merge};
pub use inconsistency::{
    affinity, behaviour_inconsistency, time_inconsistency, AffinityMatrix, InconsistencyKind, InconsistencyMatrix,
};
pub use norms::{euclidean_norm, frobenius_matrix, frobenius_vector_series, NormSeries};

#[derive(Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("distance matrix has no positive entry, affinity is undefined")]
    DegenerateDistance,
    #[error("label sets differ: {0:?} vs {1:?}")]
    LabelMismatch(Vec<String>, Vec<String>),
    #[error("clustering needs at least 2 labels, got {0}")]
    TooFewLabels(usize),
}
