//! Numerical machinery for fundamental-gap experiments on constant-curvature
//! spaces: geometry kernel, the one-dimensional comparison model, radial
//! Schrödinger spectra on geodesic balls, and a reflection-coupling
//! Monte-Carlo engine.

pub mod coupling;
pub mod error;
pub mod geom;
pub mod interp;
pub mod potential;
pub mod rng;
pub mod spectral1d;
pub mod spectral2d;
pub mod stats;
pub mod tridiag;

pub use error::{GapError, Result};
