//! Card and action abstraction: equity, strength histograms, EMD clustering and bet menus.

pub mod buckets;
pub mod cluster;
pub mod equity;
pub mod histogram;
pub mod menu;

pub use buckets::{canonicalize, preflop_class, preflop_class_label, BucketConfig, BucketMap, PREFLOP_CLASSES};
pub use cluster::{kmeans, CentroidUpdate, Clustering, KMeansConfig};
pub use equity::{equity, range_equity, Equity, EquityMethod};
pub use histogram::{emd, histogram, EquityHistogram, HistogramConfig};
pub use menu::{BetContext, BetMenu, MenuItem};

use crate::engine::EngineError;

#[derive(Debug, thiserror::Error)]
pub enum AbstractionError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("bucket file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
