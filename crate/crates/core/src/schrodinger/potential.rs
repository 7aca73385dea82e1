use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus_fourier::Mode;

/// One real harmonic `a·cos(2π⟨m,θ⟩) + b·sin(2π⟨m,θ⟩)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub mode: Mode,
    pub cos: f64,
    pub sin: f64,
}

/// A real trigonometric potential `λ·V(θ)` on `𝕋^d`. Real-valuedness is
/// built into the representation; [`Potential::coefficients`] gives the
/// conjugate-symmetric Fourier form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    dim: usize,
    harmonics: Vec<Harmonic>,
    coupling: f64,
}

impl Potential {
    pub fn new(dim: usize, harmonics: Vec<Harmonic>, coupling: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidInput(format!("potential dimension {dim} not in 1..=3")));
        }
        if !coupling.is_finite() {
            return Err(Error::InvalidInput("coupling is not finite".into()));
        }
        for h in &harmonics {
            if h.mode.dim() != dim {
                return Err(Error::InvalidInput(format!(
                    "harmonic mode {:?} has dimension {} (expected {dim})",
                    h.mode.0,
                    h.mode.dim()
                )));
            }
            if !(h.cos.is_finite() && h.sin.is_finite()) {
                return Err(Error::InvalidInput("harmonic amplitude is not finite".into()));
            }
        }
        Ok(Potential { dim, harmonics, coupling })
    }

    pub fn zero(dim: usize) -> Self {
        Potential { dim, harmonics: Vec::new(), coupling: 0.0 }
    }

    /// Almost Mathieu: `V(θ) = 2λ cos 2πθ` on `𝕋¹`.
    pub fn amo(lambda: f64) -> Self {
        Potential {
            dim: 1,
            harmonics: vec![Harmonic { mode: Mode(vec![1]), cos: 2.0, sin: 0.0 }],
            coupling: lambda,
        }
    }

    /// `λ Σ a_m cos 2π⟨m,θ⟩`.
    pub fn cosine_sum(dim: usize, terms: &[(Mode, f64)], coupling: f64) -> Result<Self> {
        let harmonics = terms
            .iter()
            .map(|(m, a)| Harmonic { mode: m.clone(), cos: *a, sin: 0.0 })
            .collect();
        Self::new(dim, harmonics, coupling)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_zero(&self) -> bool {
        self.coupling == 0.0 || self.harmonics.iter().all(|h| h.cos == 0.0 && h.sin == 0.0)
    }

    /// `λV(θ)`.
    pub fn value(&self, theta: &[f64]) -> f64 {
        let mut v = 0.0;
        for h in &self.harmonics {
            let (s, c) = (2.0 * PI * h.mode.dot(theta)).sin_cos();
            v += h.cos * c + h.sin * s;
        }
        self.coupling * v
    }

    /// Upper bound for `sup|λV|`.
    pub fn sup_bound(&self) -> f64 {
        self.coupling.abs()
            * self
                .harmonics
                .iter()
                .map(|h| if h.mode.is_zero() { h.cos.abs() } else { h.cos.hypot(h.sin) })
                .sum::<f64>()
    }

    /// Fourier coefficients of `λV`, merged per mode; `c(−n) = conj c(n)`.
    pub fn coefficients(&self) -> Vec<(Mode, Complex64)> {
        let mut out: std::collections::BTreeMap<Mode, Complex64> = Default::default();
        for h in &self.harmonics {
            if h.mode.is_zero() {
                *out.entry(h.mode.clone()).or_default() += self.coupling * h.cos;
                continue;
            }
            let c = Complex64::new(h.cos, -h.sin) * (0.5 * self.coupling);
            *out.entry(h.mode.clone()).or_default() += c;
            *out.entry(h.mode.neg()).or_default() += c.conj();
        }
        out.into_iter().filter(|(_, c)| c.norm() > 0.0).collect()
    }
}
