//! Quasi-periodic SL(2,ℝ) cocycles, KAM reducibility and the associated
//! Schrödinger operators.

pub mod error;
pub mod linalg;
pub mod cocycle;
pub mod torus_fourier;
pub mod kam;
pub mod schrodinger;

pub use error::{Error, Result};

// Links the system LAPACK used by `schrodinger::tridiag`.
extern crate openblas_src;
