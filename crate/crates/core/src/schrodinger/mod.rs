//! Schrödinger operators `(Hx)_n = x_{n+1} + x_{n−1} + λV(θ+nα)x_n` on
//! `ℓ²(ℤ)`: cocycles, IDS, gap labels, homogeneity and transport.

mod homogeneity;
mod potential;
mod spectrum;
mod transport;
pub mod tridiag;

pub use homogeneity::{
    approximant_gaps, cantor_intervals, holder_exponent, homogeneity, periodic_approximant, Approximant,
    HolderFit, HomogeneityReport, LabelledGap, SpectrumIndicator, EPS_SWEEP,
};
pub use potential::{Harmonic, Potential};
pub use spectrum::{
    count_fraction, fold_rho, ids, nearest_label, scan_spectrum, schrodinger_cocycle, truncated_spectrum, Gap,
    SpectralSample, SpectrumScan, CONE_REFINEMENT, EDGE_WINDOW, HULL_SIZE, LABEL_RADIUS, LABEL_TOLERANCE,
};
pub use transport::{
    transport_velocity, InitialState, TransportPoint, TransportResult, VelocityBlock, EDGE_MASS, EDGE_SITES,
    MAX_STEP, Q_BLOCK,
};
