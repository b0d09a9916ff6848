//! PRISM: a hierarchical time-frequency forecaster.
//!
//! The context window is split recursively into overlapping segments
//! ([`tree`]), every segment is decomposed into additive frequency bands
//! ([`filter`]), a small router weights the bands ([`router`]) and per
//! segment/band heads add up to the forecast ([`model`]).

pub mod checkpoint;
pub mod data;
pub mod error;
pub mod filter;
pub mod gradcheck;
pub mod model;
pub mod optim;
pub mod params;
pub mod router;
pub mod runspec;
pub mod tape;
pub mod tensor;
pub mod train;
pub mod tree;

pub use checkpoint::Checkpoint;
pub use data::{load_csv, CsvSchema, PreparedData, Split, SplitSpec, SyntheticSpec, TimeSeries, WindowSet};
pub use error::{PrismError, Result};
pub use filter::{BandSet, FftEdges, FilterFamily, FilterSpec};
pub use model::{ForecastTrace, Prism, PrismConfig};
pub use params::ParamStore;
pub use router::{RouterConfig, RouterMode};
pub use runspec::RunSpec;
pub use tensor::Tensor;
pub use train::{ImportanceTable, Metrics, RunReport, TrainConfig};
