//! Quasi-periodic SL(2,ℝ) cocycles over torus translations.

use std::f64::consts::PI;

use nalgebra::Vector2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{self, dist_to_z, mod1, Mat2};
use crate::schrodinger::Potential;
use crate::torus_fourier::{FourierMap, Mode, Period};

pub use crate::linalg::{su11_transform, Su11Direction};

/// Nonzero modes with `|m|₁ ≤ n_max`, ordered by `|m|₁` then lexicographically.
pub fn modes_in_ball(dim: usize, n_max: i64) -> Vec<Mode> {
    fn rec(dim: usize, budget: i64, cur: &mut Vec<i32>, out: &mut Vec<Mode>) {
        if cur.len() == dim {
            out.push(Mode(cur.clone()));
            return;
        }
        for v in -budget..=budget {
            cur.push(v as i32);
            rec(dim, budget - v.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, n_max, &mut Vec::new(), &mut out);
    out.retain(|m| !m.is_zero());
    out.sort_by(|a, b| a.l1().cmp(&b.l1()).then_with(|| a.cmp(b)));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    alpha: Vec<f64>,
    kappa: f64,
    tau: f64,
}

impl Frequency {
    pub const INDEPENDENCE_BOUND: i64 = 64;

    pub fn new(alpha: Vec<f64>, kappa: f64, tau: f64) -> Result<Self> {
        let d = alpha.len();
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidInput(format!("frequency dimension {d} not in 1..=3")));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("frequency has non-finite entries".into()));
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidInput(format!("kappa = {kappa} must be positive")));
        }
        if !(tau > d as f64) {
            return Err(Error::InvalidInput(format!("tau = {tau} must exceed d = {d}")));
        }
        let f = Frequency { alpha, kappa, tau };
        for m in modes_in_ball(d, Self::INDEPENDENCE_BOUND) {
            let dist = dist_to_z(m.dot(&f.alpha));
            if dist <= 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "frequency is resonant: <{:?}, alpha> is {dist:.2e} from an integer",
                    m.0
                )));
            }
        }
        Ok(f)
    }

    /// The golden mean `(√5 − 1)/2` with `κ = 0.2`, `τ = 1.5`.
    pub fn golden() -> Self {
        Frequency::new(vec![(5f64.sqrt() - 1.0) / 2.0], 0.2, 1.5).expect("golden mean is irrational")
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `⟨m, α⟩`.
    pub fn pair(&self, m: &Mode) -> f64 {
        m.dot(&self.alpha)
    }

    pub fn shift(&self, theta: &[f64], times: f64) -> Vec<f64> {
        theta.iter().zip(&self.alpha).map(|(t, a)| t + times * a).collect()
    }
}

/// `dist(⟨m,α⟩, ℤ) > κ/|m|₁^τ` for all `0 < |m|₁ ≤ n_max`.
pub fn diophantine_check(freq: &Frequency, n_max: i64) -> bool {
    modes_in_ball(freq.dim(), n_max).iter().all(|m| {
        dist_to_z(freq.pair(m)) > freq.kappa / (m.l1() as f64).powf(freq.tau)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RotationClass {
    Diophantine,
    Rational { m0: Vec<i32>, trivial: bool },
    Neither,
}

/// Classifies `ρ` against the frequency: rational if `2ρ ≡ ⟨m₀,α⟩` to 1e−10
/// for some `|m₀|₁ ≤ n_max`, Diophantine if `dist(2ρ − ⟨m,α⟩, ℤ) > γ/(|m|₁+1)^τ`
/// for every checked `m` (including `m = 0`).
pub fn rotation_diophantine_check(
    rho: f64,
    freq: &Frequency,
    gamma: f64,
    tau: f64,
    n_max: i64,
) -> RotationClass {
    let d = freq.dim();
    let dist0 = dist_to_z(2.0 * rho);
    if dist0 <= 1e-10 {
        return RotationClass::Rational { m0: vec![0; d], trivial: true };
    }
    let modes = modes_in_ball(d, n_max);
    for m in &modes {
        if dist_to_z(2.0 * rho - freq.pair(m)) <= 1e-10 {
            return RotationClass::Rational { m0: m.0.clone(), trivial: false };
        }
    }
    let ok0 = dist0 > gamma;
    let ok = ok0
        && modes.iter().all(|m| {
            dist_to_z(2.0 * rho - freq.pair(m)) > gamma / (m.l1() as f64 + 1.0).powf(tau)
        });
    if ok {
        RotationClass::Diophantine
    } else {
        RotationClass::Neither
    }
}

/// A constant SL(2,ℝ) matrix with its eigenvalue angle `ρ` in turns:
/// eigenvalues are `e^{±2πiρ}` with `Im ρ ≥ 0` and `Re ρ ∈ [0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCocycle {
    a: Mat2,
    rho: Complex64,
}

impl ConstantCocycle {
    pub fn new(a: Mat2) -> Result<Self> {
        let det = a.determinant();
        if (det - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("determinant {det} is not 1")));
        }
        let t = 0.5 * a.trace();
        let rho = if t.abs() <= 1.0 {
            Complex64::new(t.acos() / (2.0 * PI), 0.0)
        } else if t > 1.0 {
            Complex64::new(0.0, t.acosh() / (2.0 * PI))
        } else {
            Complex64::new(0.5, (-t).acosh() / (2.0 * PI))
        };
        Ok(ConstantCocycle { a, rho })
    }

    pub fn identity() -> Self {
        Self::new(Mat2::identity()).unwrap()
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.a
    }

    pub fn rho(&self) -> Complex64 {
        self.rho
    }

    pub fn is_elliptic(&self) -> bool {
        self.a.trace().abs() < 2.0
    }

    /// The eigenvalue `e^{2πiρ}`.
    pub fn eigenvalue(&self) -> Complex64 {
        (Complex64::new(0.0, 2.0 * PI) * self.rho).exp()
    }

    /// Rotation angle in `[0, 1)` turns oriented like `R_φ`; equals the
    /// fibered rotation number of the constant cocycle.
    pub fn oriented_angle(&self) -> f64 {
        let t = 0.5 * self.a.trace();
        if t >= 1.0 {
            0.0
        } else if t <= -1.0 {
            0.5
        } else if self.a[(1, 0)] - self.a[(0, 1)] >= 0.0 {
            self.rho.re
        } else {
            mod1(1.0 - self.rho.re)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "matrix": [[self.a[(0, 0)], self.a[(0, 1)]], [self.a[(1, 0)], self.a[(1, 1)]]],
            "rho": {"re": self.rho.re, "im": self.rho.im},
        })
    }
}

/// One factor of a conjugation.
#[derive(Debug, Clone, PartialEq)]
pub enum ConjFactor {
    /// `θ ↦ exp(Y(θ))` for a real sl(2,ℝ) map `Y`.
    Exp(FourierMap),
    /// `θ ↦ R_{⟨m,θ⟩/2}`, defined on 2𝕋^d, degree `m`.
    Rotation(Mode),
    Constant(Mat2),
}

impl ConjFactor {
    fn evaluate(&self, theta: &[f64]) -> Mat2 {
        match self {
            ConjFactor::Exp(y) => linalg::expm_traceless(&y.evaluate_real(theta)),
            ConjFactor::Rotation(m) => linalg::rotation(0.5 * m.dot(theta)),
            ConjFactor::Constant(p) => *p,
        }
    }

    fn inverse(&self) -> ConjFactor {
        match self {
            ConjFactor::Exp(y) => ConjFactor::Exp(y.scale(Complex64::new(-1.0, 0.0))),
            ConjFactor::Rotation(m) => ConjFactor::Rotation(m.neg()),
            ConjFactor::Constant(p) => ConjFactor::Constant(linalg::inverse_sl2(p)),
        }
    }
}

/// `B(θ) = F₀(θ)·F₁(θ)···` as a product of factors on 2𝕋^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugation {
    dim: usize,
    factors: Vec<ConjFactor>,
}

impl Conjugation {
    pub fn identity(dim: usize) -> Self {
        Conjugation { dim, factors: Vec::new() }
    }

    pub fn exp(y: FourierMap) -> Self {
        let dim = y.dim();
        if y.is_empty() {
            return Self::identity(dim);
        }
        Conjugation { dim, factors: vec![ConjFactor::Exp(y)] }
    }

    pub fn rotation(m: Mode) -> Self {
        Conjugation { dim: m.dim(), factors: vec![ConjFactor::Rotation(m)] }
    }

    pub fn constant(dim: usize, p: Mat2) -> Self {
        Conjugation { dim, factors: vec![ConjFactor::Constant(p)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[ConjFactor] {
        &self.factors
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    /// `later · self`.
    pub fn then(&self, later: &Conjugation) -> Conjugation {
        assert_eq!(self.dim, later.dim);
        let mut factors = later.factors.clone();
        factors.extend(self.factors.iter().cloned());
        Conjugation { dim: self.dim, factors }
    }

    pub fn inverse(&self) -> Conjugation {
        Conjugation {
            dim: self.dim,
            factors: self.factors.iter().rev().map(ConjFactor::inverse).collect(),
        }
    }

    pub fn evaluate(&self, theta: &[f64]) -> Mat2 {
        self.factors
            .iter()
            .fold(Mat2::identity(), |acc, f| acc * f.evaluate(theta))
    }

    pub fn evaluate_inverse(&self, theta: &[f64]) -> Mat2 {
        linalg::inverse_sl2(&self.evaluate(theta))
    }

    /// Sum of the rotation factors' degrees (exponential and constant factors
    /// are homotopic to the identity).
    pub fn degree(&self) -> Vec<i32> {
        let mut deg = vec![0; self.dim];
        for f in &self.factors {
            if let ConjFactor::Rotation(m) = f {
                for (d, x) in deg.iter_mut().zip(&m.0) {
                    *d += x;
                }
            }
        }
        deg
    }

    /// Recomputes the degree from the winding of the first column.
    pub fn measured_degree(&self) -> Result<Vec<i32>> {
        (0..self.dim)
            .map(|axis| winding_degree_fn(self.dim, 2.0, axis, |t| self.evaluate(t)))
            .collect()
    }

    /// Fundamental period length: 2 when a factor lives on 2𝕋^d only.
    pub fn period_length(&self) -> f64 {
        let double = self.factors.iter().any(|f| match f {
            ConjFactor::Rotation(m) => m.0.iter().any(|x| x % 2 != 0),
            ConjFactor::Exp(y) => y.period() == Period::Double,
            ConjFactor::Constant(_) => false,
        });
        if double {
            2.0
        } else {
            1.0
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut out = Vec::new();
        for f in &self.factors {
            out.push(match f {
                ConjFactor::Exp(y) => json!({"exp": serde_json::from_str::<serde_json::Value>(&y.to_json()?)?}),
                ConjFactor::Rotation(m) => json!({"rotation_half": m.0}),
                ConjFactor::Constant(p) => {
                    json!({"constant": [[p[(0, 0)], p[(0, 1)]], [p[(1, 0)], p[(1, 1)]]]})
                }
            });
        }
        Ok(json!({"dim": self.dim, "degree": self.degree(), "factors": out}))
    }
}

/// Winding (in turns) of the first column of `z` along coordinate `axis`
/// over a circle of length `len`, rounded to an integer.
pub fn winding_degree_fn<F>(dim: usize, len: f64, axis: usize, z: F) -> Result<i32>
where
    F: Fn(&[f64]) -> Mat2,
{
    let mut last_err = None;
    for samples in [4096usize, 16384] {
        let mut theta = vec![0.0; dim];
        let col = |t: &[f64]| {
            let m = z(t);
            (m[(0, 0)], m[(1, 0)])
        };
        let (x0, y0) = col(&theta);
        let mut min_norm = x0.hypot(y0);
        let mut prev = y0.atan2(x0);
        let mut total = 0.0;
        let mut max_step = 0.0f64;
        for i in 1..=samples {
            theta[axis] = len * i as f64 / samples as f64;
            let (x, y) = col(&theta);
            min_norm = min_norm.min(x.hypot(y));
            let ang = y.atan2(x);
            let mut step = ang - prev;
            step -= 2.0 * PI * (step / (2.0 * PI)).round();
            max_step = max_step.max(step.abs());
            total += step;
            prev = ang;
        }
        let winding = total / (2.0 * PI);
        if min_norm < 1e-8 {
            last_err = Some(Error::NearSingular { axis, min_norm });
            continue;
        }
        if max_step > PI / 2.0 || (winding - winding.round()).abs() > 0.1 {
            last_err = Some(Error::NonIntegralDegree { axis, winding });
            continue;
        }
        return Ok(winding.round() as i32);
    }
    Err(last_err.expect("loop ran"))
}

/// Degree of a matrix-valued map along `axis`, measured over its own period.
pub fn winding_degree(z: &FourierMap, axis: usize) -> Result<i32> {
    winding_degree_fn(z.dim(), z.period().length(), axis, |t| z.evaluate_real(t))
}

#[derive(Debug, Clone)]
pub enum CocycleMap {
    Constant(ConstantCocycle),
    /// `θ ↦ A·exp(f(θ))`.
    Perturbed { a: ConstantCocycle, f: FourierMap },
    /// `θ ↦ F(θ)` for an SL(2,ℝ)-valued series.
    Direct(FourierMap),
    /// `θ ↦ B(θ+α)·C(θ)·B(θ)⁻¹`, evaluated without resampling.
    Conjugated { inner: Box<Cocycle>, by: Conjugation },
    /// `θ ↦ [[E − V(θ), −1], [1, 0]]`.
    Schrodinger { potential: Potential, energy: f64 },
}

#[derive(Debug, Clone)]
pub struct Cocycle {
    freq: Frequency,
    map: CocycleMap,
}

impl Cocycle {
    pub fn constant(freq: Frequency, a: ConstantCocycle) -> Self {
        Cocycle { freq, map: CocycleMap::Constant(a) }
    }

    pub fn perturbed(freq: Frequency, a: ConstantCocycle, f: FourierMap) -> Result<Self> {
        if f.dim() != freq.dim() {
            return Err(Error::InvalidInput("perturbation and frequency dimensions differ".into()));
        }
        f.validate()?;
        if f.is_empty() {
            return Ok(Self::constant(freq, a));
        }
        Ok(Cocycle { freq, map: CocycleMap::Perturbed { a, f } })
    }

    pub fn direct(freq: Frequency, map: FourierMap) -> Result<Self> {
        if map.dim() != freq.dim() {
            return Err(Error::InvalidInput("map and frequency dimensions differ".into()));
        }
        let c = Cocycle { freq, map: CocycleMap::Direct(map) };
        c.check_determinant(1e-10)?;
        Ok(c)
    }

    /// The Schrödinger cocycle `S_E^V`; its determinant is exactly 1.
    pub fn schrodinger(freq: Frequency, potential: Potential, energy: f64) -> Result<Self> {
        if potential.dim() != freq.dim() {
            return Err(Error::InvalidInput("potential and frequency dimensions differ".into()));
        }
        if !energy.is_finite() {
            return Err(Error::InvalidInput(format!("energy {energy} is not finite")));
        }
        Ok(Cocycle { freq, map: CocycleMap::Schrodinger { potential, energy } })
    }

    pub fn freq(&self) -> &Frequency {
        &self.freq
    }

    pub fn dim(&self) -> usize {
        self.freq.dim()
    }

    pub fn map(&self) -> &CocycleMap {
        &self.map
    }

    /// Constant part for constant and perturbed forms.
    pub fn constant_part(&self) -> Option<&ConstantCocycle> {
        match &self.map {
            CocycleMap::Constant(a) | CocycleMap::Perturbed { a, .. } => Some(a),
            _ => None,
        }
    }

    pub fn period_length(&self) -> f64 {
        match &self.map {
            CocycleMap::Constant(_) | CocycleMap::Schrodinger { .. } => 1.0,
            CocycleMap::Perturbed { f, .. } => f.period().length(),
            CocycleMap::Direct(m) => m.period().length(),
            CocycleMap::Conjugated { inner, by } => inner.period_length().max(by.period_length()),
        }
    }

    pub fn evaluate(&self, theta: &[f64]) -> Mat2 {
        match &self.map {
            CocycleMap::Constant(a) => *a.matrix(),
            CocycleMap::Perturbed { a, f } => {
                a.matrix() * linalg::expm_traceless(&f.evaluate_real(theta))
            }
            CocycleMap::Direct(m) => m.evaluate_real(theta),
            CocycleMap::Schrodinger { potential, energy } => {
                Mat2::new(energy - potential.value(theta), -1.0, 1.0, 0.0)
            }
            CocycleMap::Conjugated { inner, by } => {
                let shifted = self.freq.shift(theta, 1.0);
                by.evaluate(&shifted) * inner.evaluate(theta) * by.evaluate_inverse(theta)
            }
        }
    }

    fn check_determinant(&self, tol: f64) -> Result<()> {
        let len = self.period_length();
        for i in 0..128 {
            let t = len * i as f64 / 128.0;
            let theta: Vec<f64> = (0..self.dim()).map(|k| mod1(t * (1.0 + 0.618 * k as f64)) * len).collect();
            let det = self.evaluate(&theta).determinant();
            if (det - 1.0).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "cocycle determinant {det} at theta = {theta:?} is not 1"
                )));
            }
        }
        Ok(())
    }

    /// `A_n(θ) = A(θ+(n−1)α)···A(θ)`; negative `n` uses `A_n(θ−nα)⁻¹`
    /// with `n` replaced by `|n|`.
    pub fn iterate(&self, theta: &[f64], n: i64) -> Mat2 {
        if n < 0 {
            let m = -n;
            let start = self.freq.shift(theta, -(m as f64));
            return linalg::inverse_sl2(&self.iterate(&start, m));
        }
        let mut acc = Mat2::identity();
        for k in 0..n {
            let t = self.freq.shift(theta, k as f64);
            acc = self.evaluate(&t) * acc;
        }
        acc
    }
}

/// `θ ↦ B(θ+α)·c(θ)·B(θ)⁻¹`.
pub fn conjugate(c: &Cocycle, z: &Conjugation) -> Cocycle {
    assert_eq!(c.dim(), z.dim(), "conjugation dimension mismatch");
    if z.is_identity() {
        return c.clone();
    }
    Cocycle {
        freq: c.freq.clone(),
        map: CocycleMap::Conjugated { inner: Box::new(c.clone()), by: z.clone() },
    }
}

// Polar rotation angle (turns, principal value) of a matrix with det > 0.
fn polar_angle(m: &Mat2) -> f64 {
    (m[(1, 0)] - m[(0, 1)]).atan2(m[(0, 0)] + m[(1, 1)]) / (2.0 * PI)
}

/// Continuous lift of the polar angle of `θ ↦ A(θ)` tabulated on a grid;
/// needed when the principal value wraps across ±1/2.
struct PolarLift {
    dim: usize,
    g: usize,
    len: f64,
    table: Vec<f64>,
}

impl PolarLift {
    fn build(c: &Cocycle) -> PolarLift {
        let dim = c.dim();
        if let CocycleMap::Constant(_) = c.map {
            let v = polar_angle(&c.evaluate(&vec![0.0; dim]));
            return PolarLift { dim, g: 1, len: 1.0, table: vec![v] };
        }
        let g: usize = match dim {
            1 => 1024,
            2 => 128,
            _ => 32,
        };
        let len = c.period_length();
        let total = g.pow(dim as u32);
        let mut table = vec![0.0; total];
        let mut idx = vec![0usize; dim];
        for lin in 0..total {
            let mut rest = lin;
            for axis in (0..dim).rev() {
                idx[axis] = rest % g;
                rest /= g;
            }
            let theta: Vec<f64> = idx.iter().map(|&i| len * i as f64 / g as f64).collect();
            let p = polar_angle(&c.evaluate(&theta));
            table[lin] = match idx.iter().rposition(|&i| i > 0) {
                None => p,
                Some(axis) => {
                    let stride = g.pow((dim - 1 - axis) as u32);
                    let prev = table[lin - stride];
                    p + (prev - p).round()
                }
            };
        }
        PolarLift { dim, g, len, table }
    }

    fn lift(&self, theta: &[f64], principal: f64) -> f64 {
        let mut lin = 0usize;
        for t in theta.iter().take(self.dim) {
            let x = mod1(t / self.len) * self.g as f64;
            let i = (x.round() as usize) % self.g;
            lin = lin * self.g + i;
        }
        let reference = self.table[lin];
        principal + (reference - principal).round()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationEstimate {
    /// Estimate in `[0, 1)`.
    pub rho: f64,
    /// Circular difference between the averages over the two half windows.
    pub window_gap: f64,
    pub n_iter: usize,
}

impl RotationEstimate {
    pub fn limit(&self) -> f64 {
        10.0 / self.n_iter as f64
    }

    pub fn converged(&self) -> bool {
        self.window_gap <= self.limit()
    }
}

/// Birkhoff average of the lifted projective angle increments from
/// `θ₀ = 0`, `v₀ = (1, 0)`. The cocycle must be homotopic to the identity.
pub fn rotation_estimate(c: &Cocycle, n_iter: usize) -> RotationEstimate {
    let lift = PolarLift::build(c);
    let dim = c.dim();
    let mut v = Vector2::new(1.0, 0.0);
    let half = n_iter / 2;
    let (mut first, mut second) = (0.0, 0.0);
    let mut theta = vec![0.0; dim];
    for k in 0..n_iter {
        for (t, a) in theta.iter_mut().zip(c.freq.alpha()) {
            *t = k as f64 * a;
        }
        let m = c.evaluate(&theta);
        let phi = lift.lift(&theta, polar_angle(&m));
        let r_inv = linalg::rotation(-phi);
        let w = r_inv * m * v;
        let cross = v[0] * w[1] - v[1] * w[0];
        let inc = phi + cross.atan2(v.dot(&w)) / (2.0 * PI);
        if k < half {
            first += inc;
        } else {
            second += inc;
        }
        let nv = m * v;
        v = nv / nv.norm();
    }
    let total = first + second;
    let gap = if half > 0 && n_iter > half {
        dist_to_z(first / half as f64 - second / (n_iter - half) as f64)
    } else {
        0.0
    };
    RotationEstimate { rho: mod1(total / n_iter as f64), window_gap: gap, n_iter }
}

/// Fibered rotation number in `[0, 1)`; fails when the two half-window
/// averages disagree by more than `10/n_iter`.
pub fn rotation_number(c: &Cocycle, n_iter: usize) -> Result<f64> {
    let est = rotation_estimate(c, n_iter);
    if !est.converged() {
        return Err(Error::NonConvergence { gap: est.window_gap, limit: est.limit() });
    }
    Ok(est.rho)
}

/// Phases used by sampled diagnostics.
pub fn sample_phases(dim: usize, count: usize, len: f64) -> Vec<Vec<f64>> {
    let weights = [1.0, 2f64.sqrt(), 3f64.sqrt()];
    (0..count)
        .map(|j| {
            (0..dim)
                .map(|k| len * mod1(j as f64 / count as f64 * weights[k]))
                .collect()
        })
        .collect()
}

/// `(1/n) log‖A_n(θ)‖` averaged over 32 phases, renormalizing the running
/// product every 32 steps.
pub fn lyapunov_exponent(c: &Cocycle, n_iter: usize) -> f64 {
    let phases = sample_phases(c.dim(), 32, c.period_length());
    let mut sum = 0.0;
    for theta0 in &phases {
        let mut acc = Mat2::identity();
        let mut log = 0.0;
        for k in 0..n_iter {
            let t = c.freq.shift(theta0, k as f64);
            acc = c.evaluate(&t) * acc;
            if (k + 1) % 32 == 0 {
                let s = linalg::op_norm(&acc);
                log += s.ln();
                acc /= s;
            }
        }
        log += linalg::op_norm(&acc).ln();
        sum += log / n_iter as f64;
    }
    (sum / phases.len() as f64).max(0.0)
}

pub const CONE_STEPS: usize = 200;
pub const CONE_HALF_ANGLE: f64 = PI / 4.0;
pub const CONE_MARGIN: f64 = 1e-6;
/// Margins this close to zero are rounding-level and count as zero.
pub const CONE_ROUNDING: f64 = 1e-9;

fn push(c: &Cocycle, theta: &[f64], steps: usize, vs: &mut [Vector2<f64>]) {
    for k in 0..steps {
        let t = c.freq.shift(theta, k as f64);
        let m = c.evaluate(&t);
        for v in vs.iter_mut() {
            let w = m * *v;
            *v = w / w.norm();
        }
    }
}

// Signed angle from the line through `a` to the line through `b`, in (−π/2, π/2].
fn line_angle(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let t = (a[0] * b[1] - a[1] * b[0]).atan2(a.dot(b));
    if t > PI / 2.0 {
        t - PI
    } else if t <= -PI / 2.0 {
        t + PI
    } else {
        t
    }
}

/// Cone-field contraction margin over a grid of about 1024 phases. The
/// cone at θ has axis `u(θ)`, the direction of `A_n(θ−nα)e` for a generic
/// `e`, and half-angle π/4; the margin is `1 − max deviation/half-angle` of
/// the images of the cone's axis and edges from `u(θ+nα)`, or −1 when the
/// image of the cone wraps around the projective line.
pub fn hyperbolicity_margin(c: &Cocycle) -> f64 {
    hyperbolicity_margin_with(c, CONE_STEPS)
}

/// [`hyperbolicity_margin`] with iterate length `n`.
pub fn hyperbolicity_margin_with(c: &Cocycle, n: usize) -> f64 {
    let dim = c.dim();
    let per_axis = (1024f64.powf(1.0 / dim as f64).ceil() as usize).max(2);
    let len = c.period_length();
    let e = Vector2::new(1f64.cos(), 1f64.sin());
    let total = per_axis.pow(dim as u32);
    let mut margin = f64::INFINITY;
    for lin in 0..total {
        let mut rest = lin;
        let mut theta = vec![0.0; dim];
        for axis in (0..dim).rev() {
            theta[axis] = len * (rest % per_axis) as f64 / per_axis as f64;
            rest /= per_axis;
        }
        let start = c.freq.shift(&theta, -(n as f64));
        let mut u = [e];
        push(c, &start, n, &mut u);
        let u = u[0];
        let rot = |v: &Vector2<f64>, a: f64| {
            let (s, co) = a.sin_cos();
            Vector2::new(co * v[0] - s * v[1], s * v[0] + co * v[1])
        };
        let mut rays = [
            u,
            rot(&u, CONE_HALF_ANGLE),
            rot(&u, -CONE_HALF_ANGLE),
            e,
        ];
        push(c, &theta, n, &mut rays);
        let target = rays[3];
        let [mid, upper, lower] = [0, 1, 2].map(|k| line_angle(&target, &rays[k]));
        // The counter-clockwise arc from the lower to the upper edge maps to
        // the counter-clockwise arc between their images; it stays in the
        // target cone only if the images keep their order. Images that have
        // collapsed onto one line tie up to rounding.
        let tie = 1e-12;
        if !(lower <= mid + tie && mid <= upper + tie) {
            return margin.min(-1.0);
        }
        let dev = mid.abs().max(upper.abs()).max(lower.abs());
        margin = margin.min(1.0 - dev / CONE_HALF_ANGLE);
    }
    margin
}

/// Cone-criterion certificate of uniform hyperbolicity.
pub fn is_uniformly_hyperbolic(c: &Cocycle) -> Result<bool> {
    let margin = hyperbolicity_margin(c);
    if margin >= CONE_MARGIN {
        Ok(true)
    } else if margin > CONE_ROUNDING {
        Err(Error::Inconclusive { margin })
    } else {
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_fourier::AlgebraTag;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn golden() -> Frequency {
        Frequency::golden()
    }

    fn random_perturbed(rng: &mut ChaCha8Rng, amp: f64) -> Cocycle {
        let phi: f64 = rng.gen_range(0.05..0.45);
        let a = ConstantCocycle::new(linalg::rotation(phi)).unwrap();
        let mut f = FourierMap::zero(1, Period::Standard, AlgebraTag::Sl2R);
        for n in 1..=3 {
            let x = Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
            let y = Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
            let z = Complex64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
            let m = crate::linalg::CMat2::new(x, y + z, y - z, -x);
            f.insert(Mode(vec![n]), m);
            f.insert(Mode(vec![-n]), m.map(|w| w.conj()));
        }
        Cocycle::perturbed(golden(), a, f).unwrap()
    }

    #[test]
    fn frequency_validation() {
        assert!(Frequency::new(vec![1.0 / 3.0], 0.1, 1.5).is_err());
        assert!(Frequency::new(vec![0.3, 0.6], 0.1, 2.5).is_err());
        assert!(Frequency::new(vec![0.5f64.sqrt()], 0.1, 0.5).is_err());
        let g = golden();
        assert_eq!(g.dim(), 1);
    }

    #[test]
    fn diophantine_examples() {
        // oracle: continued-fraction denominators of the golden mean are the
        // Fibonacci numbers, and the minimum of q^τ·‖qα‖ is attained at q = 1
        let g = golden();
        let mut best = f64::INFINITY;
        let (mut p, mut q) = (1u64, 1u64);
        while q <= 10_000 {
            best = best.min((q as f64).powf(1.5) * dist_to_z(q as f64 * g.alpha()[0]));
            let next = p + q;
            p = q;
            q = next;
        }
        assert!(best > 0.2);
        assert!(diophantine_check(&g, 10_000));
        let tight = Frequency::new(g.alpha().to_vec(), best * 1.01, 1.5).unwrap();
        assert!(!diophantine_check(&tight, 10_000));
    }

    #[test]
    fn rational_third_fails() {
        // construct a frequency bypassing the independence check
        let f = Frequency { alpha: vec![1.0 / 3.0], kappa: 0.01, tau: 1.5 };
        assert!(!diophantine_check(&f, 10));
    }

    #[test]
    fn rotation_class_examples() {
        let g = golden();
        let a = g.alpha()[0];
        assert_eq!(
            rotation_diophantine_check(a / 2.0, &g, 1e-3, 2.0, 100),
            RotationClass::Rational { m0: vec![1], trivial: false }
        );
        assert_eq!(
            rotation_diophantine_check(0.0, &g, 1e-3, 2.0, 100),
            RotationClass::Rational { m0: vec![0], trivial: true }
        );
        let rho = a * 0.37;
        // exhaustive oracle
        let ok = (-1000i64..=1000).all(|m| {
            dist_to_z(2.0 * rho - m as f64 * a) > 1e-3 / ((m.abs() + 1) as f64).powi(2)
        });
        assert!(ok);
        assert_eq!(rotation_diophantine_check(rho, &g, 1e-3, 2.0, 1000), RotationClass::Diophantine);
    }

    #[test]
    fn constant_cocycle_rho() {
        let c = ConstantCocycle::new(linalg::rotation(0.2)).unwrap();
        assert!((c.rho().re - 0.2).abs() < 1e-14);
        assert!((c.oriented_angle() - 0.2).abs() < 1e-14);
        let c = ConstantCocycle::new(linalg::rotation(0.8)).unwrap();
        assert!((c.rho().re - 0.2).abs() < 1e-14);
        assert!((c.oriented_angle() - 0.8).abs() < 1e-14);
        let h = ConstantCocycle::new(Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap();
        assert_eq!(h.rho().re, 0.0);
        assert!((h.rho().im - 2f64.ln() / (2.0 * PI)).abs() < 1e-14);
        let lam = h.eigenvalue();
        assert!((lam.re - 0.5).abs() < 1e-12 || (lam.re - 2.0).abs() < 1e-12);
        assert!(ConstantCocycle::new(Mat2::new(2.0, 0.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn iterate_examples() {
        let c = Cocycle::constant(golden(), ConstantCocycle::new(linalg::rotation(0.13)).unwrap());
        assert_eq!(c.iterate(&[0.4], 0), Mat2::identity());
        let m = c.iterate(&[0.4], 7);
        assert!((m - linalg::rotation(7.0 * 0.13)).norm() < 1e-12);
        let m = c.iterate(&[0.4], -3);
        assert!((m - linalg::rotation(-3.0 * 0.13)).norm() < 1e-12);
    }

    #[test]
    fn rotation_number_of_rotations() {
        for phi in [0.1, 0.3, 0.77] {
            let c = Cocycle::constant(golden(), ConstantCocycle::new(linalg::rotation(phi)).unwrap());
            let rho = rotation_number(&c, 1000).unwrap();
            assert!(dist_to_z(rho - phi) <= 1e-3);
        }
    }

    #[test]
    fn rotation_shift_under_half_rotation() {
        let g = golden();
        let phi = 0.21;
        let c = Cocycle::constant(g.clone(), ConstantCocycle::new(linalg::rotation(phi)).unwrap());
        for m in [-3, -1, 1, 2] {
            let z = Conjugation::rotation(Mode(vec![m]));
            let cc = conjugate(&c, &z);
            // pointwise it is the constant rotation by φ + mα/2
            let expect = linalg::rotation(phi + m as f64 * g.alpha()[0] / 2.0);
            assert!((cc.evaluate(&[0.37]) - expect).norm() < 1e-12);
            let rho = rotation_number(&cc, 10_000).unwrap();
            assert!(dist_to_z(rho - phi - m as f64 * g.alpha()[0] / 2.0) < 1e-3);
        }
    }

    #[test]
    fn degree_examples() {
        let one = crate::linalg::CMat2::identity();
        let c = FourierMap::constant(1, Period::Double, AlgebraTag::Gl2C, one);
        assert_eq!(winding_degree(&c, 0).unwrap(), 0);
        // R_{3θ} as an explicit Fourier series
        let half = Complex64::new(0.5, 0.0);
        let hi = Complex64::new(0.0, 0.5);
        let plus = crate::linalg::CMat2::new(half, hi, -hi, half);
        let minus = plus.map(|z| z.conj());
        let r3 = FourierMap::from_coeffs(
            1,
            Period::Standard,
            AlgebraTag::Gl2C,
            [(Mode(vec![3]), plus), (Mode(vec![-3]), minus)],
        );
        assert!((r3.evaluate_real(&[0.1]) - linalg::rotation(0.3)).norm() < 1e-14);
        assert_eq!(winding_degree(&r3, 0).unwrap(), 3);
        let z = Conjugation::rotation(Mode(vec![3]));
        assert_eq!(z.measured_degree().unwrap(), vec![3]);
        let singular = FourierMap::zero(1, Period::Standard, AlgebraTag::Gl2C);
        assert!(matches!(winding_degree(&singular, 0), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn conjugation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_perturbed(&mut rng, 0.1);
        let y = FourierMap::scalar_times(
            1,
            Period::Double,
            AlgebraTag::Sl2R,
            &[(Mode(vec![1]), Complex64::new(0.1, 0.05)), (Mode(vec![-1]), Complex64::new(0.1, -0.05))],
            &Mat2::new(0.3, 1.0, 0.2, -0.3),
        );
        let z = Conjugation::exp(y).then(&Conjugation::rotation(Mode(vec![2])));
        assert_eq!(z.degree(), vec![2]);
        assert_eq!(z.measured_degree().unwrap(), vec![2]);
        let back = conjugate(&conjugate(&c, &z), &z.inverse());
        for i in 0..64 {
            let t = [i as f64 / 32.0];
            assert!((back.evaluate(&t) - c.evaluate(&t)).norm() < 1e-9);
        }
        let same = conjugate(&c, &Conjugation::identity(1));
        assert!((same.evaluate(&[0.3]) - c.evaluate(&[0.3])).norm() == 0.0);
    }

    #[test]
    fn lyapunov_examples() {
        let g = golden();
        let rot = Cocycle::constant(g.clone(), ConstantCocycle::new(linalg::rotation(0.3)).unwrap());
        assert!(lyapunov_exponent(&rot, 1000) < 1e-3);
        let hyp = Cocycle::constant(g, ConstantCocycle::new(Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap());
        assert!((lyapunov_exponent(&hyp, 1000) - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn hyperbolicity_examples() {
        let g = golden();
        let hyp = Cocycle::constant(g.clone(), ConstantCocycle::new(Mat2::new(2.0, 0.0, 0.0, 0.5)).unwrap());
        assert!(is_uniformly_hyperbolic(&hyp).unwrap());
        let rot = Cocycle::constant(g, ConstantCocycle::new(linalg::rotation(0.3)).unwrap());
        assert!(!is_uniformly_hyperbolic(&rot).unwrap());
    }

    #[test]
    fn su11_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let (x, y, z): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
            let img = su11_transform(
                &linalg::to_complex(&Mat2::new(x, y + z, y - z, -x)),
                Su11Direction::ToSu11,
            );
            assert!(img[(0, 0)].re.abs() < 1e-14 && img[(1, 1)].re.abs() < 1e-14);
            assert!((img[(0, 1)] - img[(1, 0)].conj()).norm() < 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cocycle_identity(seed in 0u64..1000, m in 0i64..50, n in 0i64..50, t in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_perturbed(&mut rng, 0.05);
            let lhs = c.iterate(&[t], m + n);
            let rhs = c.iterate(&c.freq().shift(&[t], n as f64), m) * c.iterate(&[t], n);
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm()));
            prop_assert!((lhs.determinant() - 1.0).abs() <= 1e-8 * (m + n).max(1) as f64);
        }

        #[test]
        fn degree_additivity(a in -3i32..=3, b in -3i32..=3, amp in 0.0f64..0.3) {
            let y = FourierMap::scalar_times(
                1,
                Period::Double,
                AlgebraTag::Sl2R,
                &[(Mode(vec![1]), Complex64::new(amp, 0.0)), (Mode(vec![-1]), Complex64::new(amp, 0.0))],
                &Mat2::new(0.0, 1.0, 1.0, 0.0),
            );
            let za = Conjugation::rotation(Mode(vec![a])).then(&Conjugation::exp(y));
            let zb = Conjugation::rotation(Mode(vec![b]));
            let prod = zb.then(&za);
            let da = za.measured_degree().unwrap()[0];
            let db = zb.measured_degree().unwrap()[0];
            prop_assert_eq!(prod.measured_degree().unwrap()[0], da + db);
            prop_assert_eq!(prod.degree()[0], a + b);
        }
    }
}
