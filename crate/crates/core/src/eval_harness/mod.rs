//! Chunked streaming evaluation: chronological split, chunk routing,
//! streaming model wrappers, the replay loop and its report files.

pub mod metrics;
pub mod models;
pub mod replay;
pub mod report;
pub mod routing;
pub mod split;
pub mod synthetic;

pub use metrics::{hit_position, hit_rate, mean_reciprocal_rank, wji};
pub use models::{
    EntityStrategy, Frozen, MatrixModel, ModelConfig, ModelKind, ModelState, StreamingModel, TensorMode, TensorModel,
    UpdateInfo, UpdateStrategy, VectorInit,
};
pub use replay::{evaluate_chunk, replay, stability_targets, ChunkRecord, ReplayOptions, ReplayReport};
pub use report::{write_report, Summary};
pub use routing::{classify_chunk, ChunkGroups, GroupCounts};
pub use split::{day_of, split, ChunkPlan};
pub use synthetic::{StreamConfig, SyntheticStream};
