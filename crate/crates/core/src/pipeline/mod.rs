//! Experiment configuration, artifact files and the orchestration behind the
//! command-line tool.

pub mod artifacts;
pub mod config;
pub mod experiment;

pub use artifacts::{read_json, write_json, CsvTable, RankFile};
pub use config::ExperimentConfig;
pub use experiment::{generate, split_dataset, train_kind, SplitData, TrainOutcome};
