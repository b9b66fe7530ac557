//! Datasets, models and the federated training loop.

mod dataset;
mod idx;
mod model;
mod train;

pub use dataset::{partition_indices, partition_noniid, synth_classification, Dataset};
pub use idx::{load_idx, load_mnist_dir};
pub use model::{clip_gradient, Model, ModelKind, ModelShape};
pub use train::{
    prepare_data, run_pilot, train, train_on, Aggregator, FederatedData, PilotStats, RoundRecord, RunConfig,
    RunTrace, TaskConfig,
};
