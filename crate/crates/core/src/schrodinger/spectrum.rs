use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{
    hyperbolicity_margin_with, is_uniformly_hyperbolic, lyapunov_exponent, modes_in_ball, rotation_estimate,
    rotation_number, Cocycle, Frequency, CONE_MARGIN, CONE_ROUNDING,
};
use crate::error::{Error, Result};
use crate::linalg::dist_to_z;
use crate::torus_fourier::Mode;

use super::potential::Potential;
use super::tridiag::{jacobi_eigenvalues, truncated_diagonal};

/// Gap labels are searched in `|m|₁ ≤ LABEL_RADIUS`.
pub const LABEL_RADIUS: i64 = 20;
pub const LABEL_TOLERANCE: f64 = 1e-4;
/// Distance to the eigenvalue hull within which a disagreement is an edge effect.
pub const EDGE_WINDOW: f64 = 1e-3;
/// Sites of the truncated operator used for the hull cross-check.
pub const HULL_SIZE: usize = 2000;
/// Longer cone iterates tried when the standard test fails at an energy
/// whose rotation number sits on a gap label. Narrow gaps have small
/// Lyapunov exponents and need them.
pub const CONE_REFINEMENT: [usize; 2] = [3200, 12_800];

/// `S_E^V(θ) = [[E − λV(θ), −1], [1, 0]]`.
pub fn schrodinger_cocycle(v: &Potential, freq: &Frequency, e: f64) -> Result<Cocycle> {
    Cocycle::schrodinger(freq.clone(), v.clone(), e)
}

/// Representative of a Schrödinger rotation number in `[0, 1/2]`.
pub fn fold_rho(rho: f64) -> f64 {
    if rho > 0.75 {
        0.0
    } else {
        rho.clamp(0.0, 0.5)
    }
}

/// `N(E) = 1 − 2ρ(E)`.
pub fn ids(v: &Potential, freq: &Frequency, e: f64, n_iter: usize) -> Result<f64> {
    if n_iter < 1000 {
        return Err(Error::InvalidInput(format!("n_iter = {n_iter} < 1000")));
    }
    let c = schrodinger_cocycle(v, freq, e)?;
    let rho = fold_rho(rotation_number(&c, n_iter)?);
    Ok((1.0 - 2.0 * rho).clamp(0.0, 1.0))
}

/// Fraction of eigenvalues `< e` of the `size`-site truncation at phase
/// `theta` with Dirichlet ends.
pub fn count_fraction(eigenvalues: &[f64], e: f64) -> f64 {
    let below = eigenvalues.partition_point(|&x| x < e);
    below as f64 / eigenvalues.len().max(1) as f64
}

/// Ascending eigenvalues of the truncation on sites `0..size`.
pub fn truncated_spectrum(v: &Potential, freq: &Frequency, theta: &[f64], size: usize) -> Result<Vec<f64>> {
    jacobi_eigenvalues(&truncated_diagonal(v, freq, theta, 0, size))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSample {
    #[serde(rename = "E")]
    pub e: f64,
    pub rho: f64,
    pub ids: f64,
    pub lyap: f64,
    pub hyperbolic: bool,
    pub gap_label: Option<Vec<i32>>,
    /// The hyperbolicity test and the eigenvalue hull disagree within
    /// [`EDGE_WINDOW`] of a hull edge, or the cone test was inconclusive.
    pub edge_flag: bool,
}

/// A maximal run of hyperbolic grid energies strictly inside the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub lower: f64,
    pub upper: f64,
    /// Indices into the sample list.
    pub first: usize,
    pub last: usize,
    pub label: Option<Vec<i32>>,
    /// `dist(2ρ − ⟨m,α⟩, ℤ)` for the chosen label at the most hyperbolic sample.
    pub label_residual: f64,
}

impl Gap {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumScan {
    pub samples: Vec<SpectralSample>,
    pub gaps: Vec<Gap>,
    pub hull: (f64, f64),
    pub warnings: Vec<String>,
}

/// Label `m` (including `m = 0`) minimizing `dist(2ρ − ⟨m,α⟩, ℤ)` over
/// `|m|₁ ≤ radius`, with the attained distance.
pub fn nearest_label(rho: f64, freq: &Frequency, radius: i64) -> (Mode, f64) {
    let zero = Mode::zero(freq.dim());
    let mut best = (zero, dist_to_z(2.0 * rho));
    for m in modes_in_ball(freq.dim(), radius) {
        let d = dist_to_z(2.0 * rho - freq.pair(&m));
        if d < best.1 {
            best = (m, d);
        }
    }
    best
}

fn sample_energy(
    v: &Potential,
    freq: &Frequency,
    e: f64,
    n_iter: usize,
    lyap_iter: usize,
    hull: (f64, f64),
) -> Result<(SpectralSample, Vec<String>)> {
    let mut warnings = Vec::new();
    let c = schrodinger_cocycle(v, freq, e)?;
    let est = rotation_estimate(&c, n_iter);
    if !est.converged() {
        warnings.push(format!("rotation estimate at E = {e} has window gap {:.3e}", est.window_gap));
    }
    let rho = fold_rho(est.rho);
    let (mut hyperbolic, mut inconclusive) = match is_uniformly_hyperbolic(&c) {
        Ok(h) => (h, false),
        Err(Error::Inconclusive { .. }) => (false, true),
        Err(err) => return Err(err),
    };
    if !hyperbolic && nearest_label(rho, freq, LABEL_RADIUS).1 <= LABEL_TOLERANCE {
        for n in CONE_REFINEMENT {
            let margin = hyperbolicity_margin_with(&c, n);
            if margin >= CONE_MARGIN {
                (hyperbolic, inconclusive) = (true, false);
                break;
            }
            inconclusive |= margin > CONE_ROUNDING;
        }
    }
    let outside = e < hull.0 || e > hull.1;
    let near_edge = (e - hull.0).abs() <= EDGE_WINDOW || (e - hull.1).abs() <= EDGE_WINDOW;
    let mut edge_flag = inconclusive;
    if outside && !hyperbolic {
        if near_edge {
            edge_flag = true;
        } else {
            warnings.push(format!("E = {e} lies outside the eigenvalue hull but is not certified hyperbolic"));
        }
    }
    let sample = SpectralSample {
        e,
        rho,
        ids: (1.0 - 2.0 * rho).clamp(0.0, 1.0),
        lyap: lyapunov_exponent(&c, lyap_iter),
        hyperbolic,
        gap_label: None,
        edge_flag,
    };
    Ok((sample, warnings))
}

/// Rotation number, IDS, Lyapunov exponent and a uniform-hyperbolicity
/// certificate per energy; hyperbolic runs become labelled gaps. Energies
/// are processed on the current rayon pool; the output is in grid order.
pub fn scan_spectrum(v: &Potential, freq: &Frequency, e_grid: &[f64], n_iter: usize) -> Result<SpectrumScan> {
    if e_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidInput("energy grid is not sorted".into()));
    }
    let eigs = truncated_spectrum(v, freq, &vec![0.0; freq.dim()], HULL_SIZE)?;
    let hull = (eigs[0], eigs[eigs.len() - 1]);
    let lyap_iter = (n_iter / 32).max(256);
    let per_energy: Vec<(SpectralSample, Vec<String>)> = e_grid
        .par_iter()
        .map(|&e| sample_energy(v, freq, e, n_iter, lyap_iter, hull))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let mut samples = Vec::with_capacity(e_grid.len());
    for (s, w) in per_energy {
        samples.push(s);
        warnings.extend(w);
    }

    let mut gaps = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        if !samples[i].hyperbolic {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < samples.len() && samples[i + 1].hyperbolic {
            i += 1;
        }
        let last = i;
        i += 1;
        let deepest = (first..=last)
            .max_by(|&a, &b| samples[a].lyap.total_cmp(&samples[b].lyap))
            .expect("non-empty run");
        let (m, d) = nearest_label(samples[deepest].rho, freq, LABEL_RADIUS);
        let label = if d <= LABEL_TOLERANCE {
            Some(m.0)
        } else {
            warnings.push(format!(
                "no label within {LABEL_TOLERANCE:e} for the hyperbolic run [{}, {}] (best {:?} at {d:.3e})",
                samples[first].e, samples[last].e, m.0
            ));
            None
        };
        for s in &mut samples[first..=last] {
            s.gap_label = label.clone();
            if label.is_none() {
                s.edge_flag = true;
            }
        }
        let interior = first > 0 && last + 1 < samples.len();
        if interior {
            gaps.push(Gap {
                lower: samples[first].e,
                upper: samples[last].e,
                first,
                last,
                label,
                label_residual: d,
            });
        }
    }
    Ok(SpectrumScan { samples, gaps, hull, warnings })
}
