//! Dense linear algebra for up to three qubits and the Pauli-basis feature map.

pub mod eigen;
pub mod matrix;
pub mod pauli;
pub mod state;

pub use eigen::{hermitian_eigenvalues, min_eigenvalue};
pub use matrix::{tensor_product, CMatrix, C64};
pub use pauli::{feature_names, features_of, state_of_features, PauliFeatures, PauliIndex, N_FEATURES};
pub use state::{partial_trace, partial_transpose, DensityMatrix, Subsystem};
