//! Gabor-frame representation of Fourier integral operators with quadratic-growth
//! phases: operator application by direct quadrature, Gabor-matrix assembly, decay
//! and sparsity measurement along the canonical transformation, and thresholded
//! application in coefficient space.

pub mod decay;
pub mod error;
pub mod fio;
pub mod gabor;
pub mod gmatrix;
pub mod metaplectic;
pub mod signal;

pub use error::{Error, Result};
pub use signal::{forward_transform, inner_product, inverse_transform, Grid, SampledSignal};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
