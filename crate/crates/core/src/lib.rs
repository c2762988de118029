pub mod cascade;
pub mod error;
pub mod featsel;
pub mod noise;
pub mod oracles;
pub mod pipeline;
pub mod qcore;
pub mod sampling;
pub mod svm;

pub use error::{Error, Result};
