//! Extreme and erratic behaviour analysis for collections of asset price
//! histories.
//!
//! The pipeline has five layers:
//!
//! * [`market_data`]: OHLC ingestion, log returns, Parkinson variance, date
//!   windows and panel alignment.
//! * [`tails`]: tail-restricted empirical measures and their L1-Wasserstein
//!   distances (extremity distance matrices).
//! * [`changepoints`]: Mann-Whitney change-point detection, batch and
//!   sequential, with Monte-Carlo calibrated thresholds.
//! * [`setdist`]: the normalized semi-metric between sets of structural
//!   breaks (break distance matrices).
//! * [`structure`]: Frobenius norms, affinity and inconsistency matrices,
//!   anomaly scores and agglomerative clustering.
//!
//! Distance-side code is generic over [`Scalar`] (`f32` or `f64`). Price data
//! and change-point statistics are always `f64`. The aliases at the crate root
//! fix the scalar for the common cases.

pub mod changepoints;
pub mod market_data;
pub mod matrix;
pub mod scalar;
pub mod setdist;
pub mod structure;
pub mod tails;

pub use changepoints::{BreakSet, DetectorConfig, ThresholdTable};
pub use market_data::{OhlcSeries, Panel, SeriesKind, ValueSeries};
pub use matrix::LabeledMatrix;
pub use scalar::Scalar;
pub use structure::{Dendrogram, Linkage};
pub use tails::TailKind;

pub type DistanceMatrix = matrix::DistanceMatrix<f64>;
pub type AffinityMatrix = structure::AffinityMatrix<f64>;
pub type InconsistencyMatrix = structure::InconsistencyMatrix<f64>;
pub type AnomalyRanking = structure::AnomalyRanking<f64>;
pub type RestrictedMeasure = tails::RestrictedMeasure<f64>;

pub type DistanceMatrixF32 = matrix::DistanceMatrix<f32>;
pub type AffinityMatrixF32 = structure::AffinityMatrix<f32>;
pub type InconsistencyMatrixF32 = structure::InconsistencyMatrix<f32>;
pub type RestrictedMeasureF32 = tails::RestrictedMeasure<f32>;
