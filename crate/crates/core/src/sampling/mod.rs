//! Seeded state generators and the labeled training datasets.

pub mod dataset;
pub mod rng;
pub mod states;

pub use dataset::{build_dataset, DatasetKind, LabeledDataset, Origin, Row};
pub use rng::{RngSeed, StreamRng};
pub use states::GeneratorConfig;
