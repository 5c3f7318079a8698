//! Streaming, bounded-memory continual learning over packed binary
//! hypervectors.
//!
//! Feature vectors are encoded with a level/position item memory, matched
//! against a single bounded list of cluster prototypes, admitted or flagged
//! as novel, and periodically consolidated with Top-M kMeans++ in Hamming
//! space.

pub mod cluster;
pub mod consolidate;
pub mod dataio;
pub mod error;
pub mod eventlog;
pub mod hv;
pub mod item_memory;
pub mod learner;
pub mod lfsr;
pub mod metrics;

pub use cluster::Cluster;
pub use consolidate::{merge_clusters, MergeOutcome, MergeParams, MinDistBuffer};
pub use error::{Error, Result};
pub use hv::{bundle, PackedHv, VoteAccumulator};
pub use item_memory::{FeatureVector, ItemMemory};
pub use learner::{run_stream, AssignmentEvent, LearnerConfig, LearnerState, MergeEvent};
pub use lfsr::Lfsr32;
pub use metrics::{ContingencyMatrix, MetricsReport};
