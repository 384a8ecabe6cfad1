//! Spectral calculus for dense tensors: HOSVD and mode spectra,
//! Schatten-(p,q) and nuclear norms, the tensor Von Neumann trace
//! inequality, and subgradients of spectral norms at symmetric and
//! orthogonally decomposable (odeco) tensors.

pub mod error;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod norms;
pub mod odeco;
pub mod random;
pub mod spectral;
pub mod subdiff;
pub mod tensor;
pub mod verify;
pub mod vonneumann;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use odeco::OdecoRep;
pub use spectral::{Hosvd, ModeSpectra, SchattenParams};
pub use tensor::{DenseTensor, Shape};
