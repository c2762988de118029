//! Soft-margin kernel SVM trained by sequential minimal optimization.

pub mod cache;
pub mod kernel;
pub mod metrics;
pub mod model;
pub mod smo;
pub mod tune;

pub use cache::FeatureMatrix;
pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use metrics::{evaluate, metrics_from_scores, Metrics};
pub use model::{all_features, project_dataset, train, train_matrix, SvmModel, TrainConfig, TrainingMeta};
pub use tune::{default_grid, tune, TuneResult};
