//! Frequency-domain algebra for structural vector autoregressions.
//!
//! Spectra are matrices over the rational function field Q(z). On top of that
//! representation the crate decides d- and t-separation via rank conditions,
//! runs latent-factor half-trek identification of link functions, and bridges
//! to data through simulation and Welch spectral estimation.

pub mod ratfield;
pub mod graph;
pub mod identify;
pub mod ratlinalg;
pub mod simulate;
pub mod svar;

pub use ratfield::{Poly, RatFn, Rational};
pub use graph::{ProcessGraph, TimeSeriesGraph, VertexSet};
pub use ratlinalg::RatMatrix;
