use serde::Serialize;

use crate::cocycle::Frequency;
use crate::error::{Error, Result};

use super::potential::Potential;
use super::tridiag::{convergents, periodic_bands, sturm_count, truncated_diagonal};

pub const EPS_SWEEP: usize = 50;

/// Membership samples of a closed set on the uniform grid
/// `e_min + i·spacing`. The measured set is the union of grid segments
/// whose two endpoints are both inside.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumIndicator {
    pub e_min: f64,
    pub spacing: f64,
    pub inside: Vec<bool>,
}

impl SpectrumIndicator {
    pub fn from_fn<F: Fn(f64) -> bool>(e_min: f64, e_max: f64, spacing: f64, f: F) -> Result<Self> {
        if !(spacing > 0.0) || !(e_max > e_min) {
            return Err(Error::InvalidInput("indicator grid needs e_max > e_min and spacing > 0".into()));
        }
        let n = ((e_max - e_min) / spacing).round() as usize + 1;
        let inside = (0..n).map(|i| f(e_min + i as f64 * spacing)).collect();
        Ok(SpectrumIndicator { e_min, spacing, inside })
    }

    /// Union of closed intervals. Membership is decided on grid indices so
    /// that interval endpoints on the grid are kept exactly.
    pub fn from_intervals(intervals: &[(f64, f64)], e_min: f64, e_max: f64, spacing: f64) -> Result<Self> {
        let mut ind = Self::from_fn(e_min, e_max, spacing, |_| false)?;
        let n = ind.inside.len();
        for &(a, b) in intervals {
            let lo = ((a - e_min) / spacing - 1e-9).ceil().max(0.0) as usize;
            let hi = ((b - e_min) / spacing + 1e-9).floor();
            if hi < 0.0 {
                continue;
            }
            let hi = (hi as usize).min(n - 1);
            for k in lo..=hi {
                ind.inside[k] = true;
            }
        }
        Ok(ind)
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.e_min + i as f64 * self.spacing
    }

    fn segment(&self, i: usize) -> bool {
        i + 1 < self.inside.len() && self.inside[i] && self.inside[i + 1]
    }

    pub fn measure(&self) -> f64 {
        (0..self.inside.len()).filter(|&i| self.segment(i)).count() as f64 * self.spacing
    }
}

// Cumulative measure F(x) = |𝔅 ∩ (−∞, x]|.
struct Cumulative<'a> {
    ind: &'a SpectrumIndicator,
    prefix: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    fn new(ind: &'a SpectrumIndicator) -> Self {
        let n = ind.inside.len();
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + if ind.segment(i) { ind.spacing } else { 0.0 };
        }
        Cumulative { ind, prefix }
    }

    fn at(&self, x: f64) -> f64 {
        let n = self.ind.inside.len();
        let t = (x - self.ind.e_min) / self.ind.spacing;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= (n - 1) as f64 {
            return self.prefix[n];
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        self.prefix[i] + if self.ind.segment(i) { frac * self.ind.spacing } else { 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityReport {
    pub nu: f64,
    pub resolution: f64,
    pub diameter: f64,
    pub measure: f64,
    pub points: usize,
    pub eps_values: Vec<f64>,
    /// `inf_E |𝔅 ∩ (E−ε, E+ε)|/ε` for each swept `ε`.
    pub profile: Vec<f64>,
    pub worst_energy: f64,
    pub worst_eps: f64,
}

/// Measured homogeneity constant: infimum over grid points of the set and
/// over a logarithmic sweep of `ε ∈ [resolution, diam]` of
/// `|𝔅 ∩ (E−ε, E+ε)|/ε`.
pub fn homogeneity(ind: &SpectrumIndicator, resolution: f64) -> Result<HomogeneityReport> {
    if !(resolution > 0.0) {
        return Err(Error::InvalidInput(format!("resolution {resolution} must be positive")));
    }
    if ind.spacing > resolution / 10.0 * (1.0 + 1e-9) {
        return Err(Error::InvalidInput(format!(
            "grid spacing {} exceeds resolution/10 = {}",
            ind.spacing,
            resolution / 10.0
        )));
    }
    let pts: Vec<usize> = (0..ind.inside.len()).filter(|&i| ind.inside[i]).collect();
    let (Some(&lo), Some(&hi)) = (pts.first(), pts.last()) else {
        return Err(Error::EmptySpectrum);
    };
    let diameter = ind.energy(hi) - ind.energy(lo);
    let eps_values: Vec<f64> = if diameter <= resolution {
        vec![resolution]
    } else {
        let (a, b) = (resolution.ln(), diameter.ln());
        (0..EPS_SWEEP)
            .map(|k| (a + (b - a) * k as f64 / (EPS_SWEEP - 1) as f64).exp())
            .collect()
    };
    let cum = Cumulative::new(ind);
    let mut nu = f64::INFINITY;
    let (mut worst_energy, mut worst_eps) = (f64::NAN, f64::NAN);
    let mut profile = Vec::with_capacity(eps_values.len());
    for &eps in &eps_values {
        let mut inf = f64::INFINITY;
        for &i in &pts {
            let e = ind.energy(i);
            let r = (cum.at(e + eps) - cum.at(e - eps)) / eps;
            if r < inf {
                inf = r;
                if r < nu {
                    nu = r;
                    worst_energy = e;
                    worst_eps = eps;
                }
            }
        }
        profile.push(inf);
    }
    Ok(HomogeneityReport {
        nu,
        resolution,
        diameter,
        measure: ind.measure(),
        points: pts.len(),
        eps_values,
        profile,
        worst_energy,
        worst_eps,
    })
}

/// Closed intervals of the middle-thirds Cantor construction at `depth`.
pub fn cantor_intervals(depth: u32) -> Vec<(f64, f64)> {
    let mut v = vec![(0.0, 1.0)];
    for _ in 0..depth {
        v = v
            .into_iter()
            .flat_map(|(a, b)| {
                let t = (b - a) / 3.0;
                [(a, a + t), (b - t, b)]
            })
            .collect();
    }
    v
}

/// The periodic approximant of a one-frequency operator: `α` replaced by
/// its last continued-fraction convergent `p/q` with `q ≤ q_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Approximant {
    pub p: u64,
    pub q: u64,
    /// Union over the sampled phases of the bands, merged and sorted.
    pub bands: Vec<(f64, f64)>,
}

// One period of λV(θ + n·p/q).
fn rational_diagonal(v: &Potential, p: u64, q: u64, theta: f64) -> Vec<f64> {
    (0..q).map(|n| v.value(&[theta + ((n * p) % q) as f64 / q as f64])).collect()
}

/// Phases `θ = k/(q·phases)`, `k < phases`, cover one period of the
/// θ-dependence of the approximant.
pub fn periodic_approximant(v: &Potential, freq: &Frequency, q_max: u64, phases: usize) -> Result<Approximant> {
    if freq.dim() != 1 {
        return Err(Error::InvalidInput("periodic approximants need a one-dimensional frequency".into()));
    }
    let alpha = freq.alpha()[0] - freq.alpha()[0].floor();
    let &(p, q) = convergents(alpha, q_max)
        .iter()
        .filter(|(p, _)| *p > 0)
        .last()
        .ok_or_else(|| Error::InvalidInput(format!("no convergent with q <= {q_max}")))?;
    let mut bands = Vec::new();
    for k in 0..phases.max(1) {
        let theta = k as f64 / (q as f64 * phases.max(1) as f64);
        bands.extend(periodic_bands(&rational_diagonal(v, p, q, theta))?);
    }
    bands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (a, b) in bands {
        match merged.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    Ok(Approximant { p, q, bands: merged })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelledGap {
    pub lower: f64,
    pub upper: f64,
    /// IDS value `j/q` on the gap.
    pub ids: f64,
    /// `m` with `⟨m,α⟩ ≡ 2ρ = 1 − N` mod 1, smallest `|m|`.
    pub label: i64,
}

impl LabelledGap {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Gaps of a single-phase approximant with their labels: after `j` bands
/// `N = j/q`, and `m·p ≡ −j (mod q)`.
pub fn approximant_gaps(v: &Potential, freq: &Frequency, q_max: u64) -> Result<Vec<LabelledGap>> {
    let a = periodic_approximant(v, freq, q_max, 1)?;
    let (p, q) = (a.p as i64, a.q as i64);
    let bands = periodic_bands(&rational_diagonal(v, a.p, a.q, 0.0))?;
    let p_inv = (0..q).find(|&x| (x * p).rem_euclid(q) == 1 % q).unwrap_or(0);
    let mut out = Vec::new();
    for (j, w) in bands.windows(2).enumerate() {
        if w[1].0 <= w[0].1 {
            continue;
        }
        let j = j as i64 + 1;
        let mut m = (-j * p_inv).rem_euclid(q);
        if m > q / 2 {
            m -= q;
        }
        out.push(LabelledGap { lower: w[0].1, upper: w[1].0, ids: j as f64 / q as f64, label: m });
    }
    Ok(out)
}

/// `N(E+ε) − N(E−ε)` maximized over `energies`, with `N` from Sturm
/// counting on `size` sites at phase 0, and the least-squares slope of its
/// logarithm against `log ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderFit {
    pub eps: Vec<f64>,
    pub modulus: Vec<f64>,
    pub exponent: f64,
}

pub fn holder_exponent(
    v: &Potential,
    freq: &Frequency,
    energies: &[f64],
    eps: &[f64],
    size: usize,
) -> Result<HolderFit> {
    if eps.len() < 2 || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("need at least two positive eps values".into()));
    }
    let diag = truncated_diagonal(v, freq, &vec![0.0; freq.dim()], 0, size);
    let n = |e: f64| sturm_count(&diag, e) as f64 / size as f64;
    let modulus: Vec<f64> = eps
        .iter()
        .map(|&h| energies.iter().map(|&e| n(e + h) - n(e - h)).fold(0.0, f64::max))
        .collect();
    if modulus.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::EmptySpectrum);
    }
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = modulus.iter().map(|m| m.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(HolderFit { eps: eps.to_vec(), modulus, exponent: sxy / sxx })
}

