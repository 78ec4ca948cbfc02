//! Traveling waves of the easy-plane Landau–Lifshitz equation.
//!
//! The crate covers the exact one-dimensional solitons, the Fourier
//! multipliers behind the convolution form of the two-dimensional
//! problem, a pseudo-spectral fixed-point solver for 2D waves, and
//! diagnostics (energy, momentum, Pohozaev and integral identities, a
//! priori inequalities, far-field asymptotics) for checking solutions.

pub mod diagnostics;
pub mod error;
pub mod farfield;
pub mod field;
pub mod fit;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod soliton1d;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use field::{lifting, Field, LiftedField};
pub use grid::{Grid, ScalarSamples, Spectrum};
