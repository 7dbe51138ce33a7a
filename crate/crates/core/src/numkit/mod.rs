//! Small dense numeric kernel: vectors, matrices, a tanh MLP with exact
//! reverse-mode gradients, conjugate gradient, and DFT-based spectral
//! measurements. Everything is `f64`, row-major, and allocation-simple;
//! problem sizes here are a few thousand parameters, so clarity wins over
//! cache tricks.

mod cg;
mod dense;
mod mlp;
mod spectral;

pub use cg::{conjugate_gradient, CgSolution};
pub use dense::{DenseMat, DenseVec};
pub use mlp::{Activation, MlpParams};
pub use spectral::{dft_magnitudes, vibration_metric};
