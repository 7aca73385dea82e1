//! Finitely supported Fourier series of 2×2 matrix-valued maps on 𝕋^d or 2𝕋^d.
//!
//! All series use the angular convention `e^{2πi⟨n,θ⟩}` on 𝕋^d = ℝ^d/ℤ^d.
//! Maps on 2𝕋^d = ℝ^d/(2ℤ)^d keep integer modes and carry [`Period::Double`];
//! their phases are `e^{πi⟨n,θ⟩}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat2, Mat2};

/// Relative threshold below which coefficients are dropped from the table.
pub const DROP_THRESHOLD: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode(pub Vec<i32>);

impl Mode {
    pub fn zero(dim: usize) -> Self {
        Mode(vec![0; dim])
    }

    pub fn unit(dim: usize, axis: usize, value: i32) -> Self {
        let mut v = vec![0; dim];
        v[axis] = value;
        Mode(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|&x| (x as i64).abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&n, &t)| n as f64 * t).sum()
    }

    pub fn neg(&self) -> Mode {
        Mode(self.0.iter().map(|&x| -x).collect())
    }

    pub fn add(&self, other: &Mode) -> Mode {
        Mode(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn max_abs(&self) -> i32 {
        self.0.iter().map(|x| x.abs()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    /// 𝕋^d = ℝ^d/ℤ^d
    Standard,
    /// 2𝕋^d = ℝ^d/(2ℤ)^d
    Double,
}

impl Period {
    /// Length of the fundamental domain along each axis.
    pub fn length(self) -> f64 {
        match self {
            Period::Standard => 1.0,
            Period::Double => 2.0,
        }
    }

    /// Angular factor of mode `n`: phase is `angular()·⟨n,θ⟩`.
    pub fn angular(self) -> f64 {
        2.0 * PI / self.length()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraTag {
    #[serde(rename = "sl2R")]
    Sl2R,
    #[serde(rename = "su11")]
    Su11,
    #[serde(rename = "gl2C")]
    Gl2C,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierMap {
    dim: usize,
    period: Period,
    algebra: AlgebraTag,
    coeffs: BTreeMap<Mode, CMat2>,
}

fn zero_c() -> CMat2 {
    CMat2::zeros()
}

impl FourierMap {
    pub fn zero(dim: usize, period: Period, algebra: AlgebraTag) -> Self {
        assert!((1..=3).contains(&dim), "torus dimension must be 1..=3");
        FourierMap {
            dim,
            period,
            algebra,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, period: Period, algebra: AlgebraTag, value: CMat2) -> Self {
        let mut f = Self::zero(dim, period, algebra);
        f.insert(Mode::zero(dim), value);
        f.prune();
        f
    }

    pub fn from_coeffs<I>(dim: usize, period: Period, algebra: AlgebraTag, coeffs: I) -> Self
    where
        I: IntoIterator<Item = (Mode, CMat2)>,
    {
        let mut f = Self::zero(dim, period, algebra);
        for (n, c) in coeffs {
            f.insert(n, c);
        }
        f.prune();
        f
    }

    /// A real sl(2,ℝ) map built from a scalar trigonometric series times a
    /// fixed real matrix: `θ ↦ (Σ a_n e^{2πi⟨n,θ⟩})·X`.
    pub fn scalar_times(
        dim: usize,
        period: Period,
        algebra: AlgebraTag,
        scalar: &[(Mode, Complex64)],
        matrix: &Mat2,
    ) -> Self {
        let m = linalg::to_complex(matrix);
        Self::from_coeffs(
            dim,
            period,
            algebra,
            scalar.iter().map(|(n, a)| (n.clone(), m * *a)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn algebra(&self) -> AlgebraTag {
        self.algebra
    }

    pub fn with_algebra(mut self, algebra: AlgebraTag) -> Self {
        self.algebra = algebra;
        self
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Mode, &CMat2)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, n: &Mode) -> CMat2 {
        self.coeffs.get(n).copied().unwrap_or_else(zero_c)
    }

    pub fn mean(&self) -> CMat2 {
        self.coefficient(&Mode::zero(self.dim))
    }

    pub fn insert(&mut self, n: Mode, c: CMat2) {
        assert_eq!(n.dim(), self.dim, "mode dimension mismatch");
        *self.coeffs.entry(n).or_insert_with(zero_c) += c;
    }

    pub fn remove(&mut self, n: &Mode) -> Option<CMat2> {
        self.coeffs.remove(n)
    }

    /// Largest `|n|₁` with a stored coefficient.
    pub fn max_mode(&self) -> i64 {
        self.coeffs.keys().map(Mode::l1).max().unwrap_or(0)
    }

    /// Largest single-axis `|n_i|`.
    pub fn max_axis_mode(&self) -> i32 {
        self.coeffs.keys().map(Mode::max_abs).max().unwrap_or(0)
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs
            .values()
            .map(linalg::op_norm_c)
            .fold(0.0, f64::max)
    }

    /// Drop coefficients below `DROP_THRESHOLD` times the largest one.
    pub fn prune(&mut self) {
        self.prune_relative(DROP_THRESHOLD);
    }

    pub fn prune_relative(&mut self, rel: f64) {
        let max = self.max_coeff_norm();
        let cut = rel * max;
        self.coeffs
            .retain(|_, c| max > 0.0 && linalg::op_norm_c(c) > cut);
    }

    /// Replace `f̂(n)` and `f̂(−n)` by their conjugate-symmetric average so
    /// that the map is exactly real.
    pub fn enforce_real(&mut self) {
        let keys: Vec<Mode> = self.coeffs.keys().cloned().collect();
        let mut out = BTreeMap::new();
        for n in keys {
            if out.contains_key(&n) {
                continue;
            }
            let m = n.neg();
            let a = self.coefficient(&n);
            let b = self.coefficient(&m).map(|z| z.conj());
            let avg = (a + b) * Complex64::new(0.5, 0.0);
            out.insert(m.clone(), avg.map(|z| z.conj()));
            out.insert(n, avg);
        }
        self.coeffs = out;
        self.prune();
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut f = self.clone();
        for c in f.coeffs.values_mut() {
            *c *= s;
        }
        f.prune();
        f
    }

    /// `θ ↦ f(θ + shift)`.
    pub fn translate(&self, shift: &[f64]) -> Self {
        let w = self.period.angular();
        let mut f = self.clone();
        for (n, c) in f.coeffs.iter_mut() {
            let ph = Complex64::from_polar(1.0, w * n.dot(shift));
            *c *= ph;
        }
        f
    }

    /// Coefficientwise `P·f̂(n)·Q`.
    pub fn sandwich(&self, p: &CMat2, q: &CMat2, algebra: AlgebraTag) -> Self {
        let mut f = Self::zero(self.dim, self.period, algebra);
        for (n, c) in &self.coeffs {
            f.coeffs.insert(n.clone(), p * c * q);
        }
        f.prune();
        f
    }

    pub fn evaluate(&self, theta: &[f64]) -> CMat2 {
        debug_assert_eq!(theta.len(), self.dim);
        let w = self.period.angular();
        let mut acc = zero_c();
        for (n, c) in &self.coeffs {
            let ph = Complex64::from_polar(1.0, w * n.dot(theta));
            acc += c * ph;
        }
        acc
    }

    /// Real part of [`evaluate`](Self::evaluate); for sl2R maps the imaginary
    /// part is roundoff.
    pub fn evaluate_real(&self, theta: &[f64]) -> Mat2 {
        linalg::real_part(&self.evaluate(theta))
    }

    /// `T_N f` (modes `|n|₁ ≤ N`) and `R_N f` (modes `|n|₁ > N`).
    pub fn truncate(&self, n_max: i64) -> (FourierMap, FourierMap) {
        let mut low = Self::zero(self.dim, self.period, self.algebra);
        let mut high = Self::zero(self.dim, self.period, self.algebra);
        for (n, c) in &self.coeffs {
            if n.l1() <= n_max {
                low.coeffs.insert(n.clone(), *c);
            } else {
                high.coeffs.insert(n.clone(), *c);
            }
        }
        (low, high)
    }

    /// Weighted coefficient bound `Σ ‖f̂(n)‖ e^{|n|₁ h}`; an upper bound for the
    /// supremum over the complex strip of width `h`. Modes of double-period
    /// maps are half-integer frequencies and are weighted by `e^{|n|₁ h/2}`.
    pub fn strip_norm(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(Error::InvalidInput(format!("strip width {h} must be >= 0")));
        }
        let mut total = 0.0;
        for (n, c) in &self.coeffs {
            let term = linalg::op_norm_c(c) * (n.l1() as f64 * h / self.period.length()).exp();
            if !term.is_finite() {
                return Err(Error::StripNormOverflow { h, mode_l1: n.l1() });
            }
            total += term;
        }
        if !total.is_finite() {
            return Err(Error::StripNormOverflow { h, mode_l1: self.max_mode() });
        }
        Ok(total)
    }

    /// Points per axis used by grid-based norms.
    pub fn grid_size(&self) -> usize {
        let base = if self.dim <= 2 { 512 } else { 64 };
        let need = (2 * self.max_axis_mode() as usize + 2).next_power_of_two();
        base.max(need)
    }

    /// `‖f‖_k = max_{|k'| ≤ k} sup_θ ‖∂^{k'} f(θ)‖` over a uniform grid.
    pub fn ck_norm(&self, k: u32) -> f64 {
        if self.coeffs.is_empty() {
            return 0.0;
        }
        let g = self.grid_size();
        let w = self.period.angular();
        let mut best = 0.0f64;
        for multi in multi_indices(self.dim, k) {
            let mut deriv = Self::zero(self.dim, self.period, AlgebraTag::Gl2C);
            for (n, c) in &self.coeffs {
                let mut factor = Complex64::new(1.0, 0.0);
                for (axis, &p) in multi.iter().enumerate() {
                    let z = Complex64::new(0.0, w * n.0[axis] as f64);
                    factor *= z.powu(p);
                }
                if factor.norm() > 0.0 {
                    deriv.coeffs.insert(n.clone(), c * factor);
                }
            }
            if deriv.coeffs.is_empty() {
                continue;
            }
            let grid = deriv.sample_grid(g);
            for v in &grid.values {
                best = best.max(linalg::op_norm_c(v));
            }
        }
        best
    }

    /// Values on the uniform grid with `g` points per axis covering the
    /// fundamental domain. Index layout is row-major with axis 0 slowest.
    pub fn sample_grid(&self, g: usize) -> Grid {
        let total = g.pow(self.dim as u32);
        if (2 * self.max_axis_mode() as usize) >= g {
            // aliasing would fold modes; evaluate directly
            let values = (0..total)
                .map(|idx| self.evaluate(&grid_point(idx, g, self.dim, self.period)))
                .collect();
            return Grid { dim: self.dim, g, period: self.period, values };
        }
        let mut comps: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); total]; 4];
        for (n, c) in &self.coeffs {
            let idx = mode_index(n, g);
            for (k, comp) in comps.iter_mut().enumerate() {
                comp[idx] += c[(k / 2, k % 2)];
            }
        }
        for comp in comps.iter_mut() {
            fft_nd(comp, g, self.dim, true);
        }
        let values = (0..total)
            .map(|i| CMat2::new(comps[0][i], comps[1][i], comps[2][i], comps[3][i]))
            .collect();
        Grid { dim: self.dim, g, period: self.period, values }
    }

    /// Fourier coefficients from grid samples (inverse of `sample_grid`).
    pub fn from_samples(
        dim: usize,
        period: Period,
        algebra: AlgebraTag,
        g: usize,
        values: &[CMat2],
    ) -> Self {
        let total = g.pow(dim as u32);
        assert_eq!(values.len(), total);
        let mut comps: Vec<Vec<Complex64>> = (0..4)
            .map(|k| values.iter().map(|v| v[(k / 2, k % 2)]).collect())
            .collect();
        for comp in comps.iter_mut() {
            fft_nd(comp, g, dim, false);
        }
        let norm = 1.0 / total as f64;
        let mut f = Self::zero(dim, period, algebra);
        for idx in 0..total {
            let c = CMat2::new(comps[0][idx], comps[1][idx], comps[2][idx], comps[3][idx])
                * Complex64::new(norm, 0.0);
            let mode = index_mode(idx, g, dim);
            f.coeffs.insert(mode, c);
        }
        f.prune();
        f
    }

    /// Resample `func` on successively finer grids until the coefficients in
    /// the outer half-band fall below `tol` relative to the largest one.
    pub fn from_fn<F>(
        dim: usize,
        period: Period,
        algebra: AlgebraTag,
        min_grid: usize,
        tol: f64,
        func: F,
    ) -> Self
    where
        F: Fn(&[f64]) -> CMat2,
    {
        let max_grid = match dim {
            1 => 1 << 14,
            2 => 512,
            _ => 64,
        };
        let mut g = min_grid.next_power_of_two().max(16).min(max_grid);
        loop {
            let total = g.pow(dim as u32);
            let values: Vec<CMat2> = (0..total)
                .map(|idx| func(&grid_point(idx, g, dim, period)))
                .collect();
            let mut f = Self::from_samples(dim, period, algebra, g, &values);
            let max = f.max_coeff_norm();
            let tail = f
                .coeffs
                .iter()
                .filter(|(n, _)| n.max_abs() as usize >= g / 4)
                .map(|(_, c)| linalg::op_norm_c(c))
                .fold(0.0, f64::max);
            if tail <= tol * max.max(1e-300) || g >= max_grid {
                f.prune_relative(tol.max(DROP_THRESHOLD) * 1e-2);
                if algebra == AlgebraTag::Sl2R {
                    f.enforce_real();
                }
                return f;
            }
            g *= 2;
        }
    }

    /// Applies `func` pointwise to the values of `inputs` on a grid fine
    /// enough for modes `|n|₁ ≤ support`, and keeps only those modes.
    /// All inputs must share dimension and period.
    pub fn map_pointwise<F>(
        inputs: &[&FourierMap],
        support: i64,
        algebra: AlgebraTag,
        func: F,
    ) -> Result<FourierMap>
    where
        F: Fn(&[Mat2]) -> Result<Mat2>,
    {
        let first = inputs.first().expect("at least one input");
        let (dim, period) = (first.dim, first.period);
        assert!(inputs.iter().all(|f| f.dim == dim && f.period == period));
        let support = support.max(0);
        let g = (2 * support as usize + 2).next_power_of_two().max(16);
        let grids: Vec<Grid> = inputs.iter().map(|f| f.sample_grid(g)).collect();
        let total = g.pow(dim as u32);
        let mut vals = Vec::with_capacity(inputs.len());
        let mut out = Vec::with_capacity(total);
        for idx in 0..total {
            vals.clear();
            vals.extend(grids.iter().map(|gr| linalg::real_part(&gr.values[idx])));
            out.push(linalg::to_complex(&func(&vals)?));
        }
        let f = Self::from_samples(dim, period, algebra, g, &out);
        let mut f = f.truncate(support).0;
        if algebra == AlgebraTag::Sl2R {
            f.enforce_real();
        }
        Ok(f)
    }

    /// Maximum over sampled θ of `‖Im f(θ)‖` (entrywise imaginary part).
    pub fn max_imaginary(&self, samples: usize) -> f64 {
        let g = samples.max(2 * self.max_axis_mode() as usize + 2);
        let grid = self.sample_grid(g.next_power_of_two());
        grid.values.iter().map(linalg::max_imag).fold(0.0, f64::max)
    }

    /// Checks the table invariants for the declared algebra.
    pub fn validate(&self) -> Result<()> {
        let scale = self.strip_norm(0.0)?.max(1e-300);
        for (n, c) in &self.coeffs {
            if n.dim() != self.dim {
                return Err(Error::InvalidInput(format!("mode {n:?} has wrong dimension")));
            }
            if matches!(self.algebra, AlgebraTag::Sl2R | AlgebraTag::Su11)
                && (c[(0, 0)] + c[(1, 1)]).norm() > 1e-12 * scale
            {
                return Err(Error::InvalidInput(format!("coefficient {n:?} is not trace-free")));
            }
            if self.algebra == AlgebraTag::Sl2R {
                let m = self.coefficient(&n.neg()).map(|z| z.conj());
                if (m - c).norm() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "coefficients at {n:?} and its negative are not conjugate"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&FourierMapJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: FourierMapJson = serde_json::from_str(s)?;
        j.try_into()
    }
}

impl Add for &FourierMap {
    type Output = FourierMap;
    fn add(self, rhs: &FourierMap) -> FourierMap {
        assert_eq!(self.dim, rhs.dim);
        assert_eq!(self.period, rhs.period);
        let mut f = self.clone();
        for (n, c) in &rhs.coeffs {
            f.insert(n.clone(), *c);
        }
        if f.algebra != rhs.algebra {
            f.algebra = AlgebraTag::Gl2C;
        }
        f.prune();
        f
    }
}

impl Sub for &FourierMap {
    type Output = FourierMap;
    fn sub(self, rhs: &FourierMap) -> FourierMap {
        self + &rhs.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Uniform samples of a map; see [`FourierMap::sample_grid`].
#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    pub g: usize,
    pub period: Period,
    pub values: Vec<CMat2>,
}

impl Grid {
    pub fn point(&self, idx: usize) -> Vec<f64> {
        grid_point(idx, self.g, self.dim, self.period)
    }
}

pub fn grid_point(idx: usize, g: usize, dim: usize, period: Period) -> Vec<f64> {
    let mut p = vec![0.0; dim];
    let mut rest = idx;
    for axis in (0..dim).rev() {
        p[axis] = (rest % g) as f64 * period.length() / g as f64;
        rest /= g;
    }
    p
}

fn mode_index(n: &Mode, g: usize) -> usize {
    n.0.iter()
        .fold(0usize, |acc, &k| acc * g + k.rem_euclid(g as i32) as usize)
}

fn index_mode(idx: usize, g: usize, dim: usize) -> Mode {
    let mut v = vec![0; dim];
    let mut rest = idx;
    for axis in (0..dim).rev() {
        let k = (rest % g) as i32;
        v[axis] = if k >= (g / 2) as i32 { k - g as i32 } else { k };
        rest /= g;
    }
    Mode(v)
}

// In-place multidimensional DFT. `inverse` computes Σ c_n e^{+2πi n j/g}
// (synthesis, unnormalized); otherwise Σ v_j e^{−2πi n j/g}.
fn fft_nd(data: &mut [Complex64], g: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(g)
    } else {
        planner.plan_fft_forward(g)
    };
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); g];
    for axis in 0..dim {
        let stride = g.pow((dim - 1 - axis) as u32);
        let block = stride * g;
        for start in (0..total).step_by(block) {
            for offset in 0..stride {
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + offset + k * stride];
                }
                fft.process(&mut line);
                for (k, val) in line.iter().enumerate() {
                    data[start + offset + k * stride] = *val;
                }
            }
        }
    }
}

/// All multi-indices of length `dim` with total order `≤ k`.
pub fn multi_indices(dim: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, budget: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == dim {
            out.push(cur.clone());
            return;
        }
        for p in 0..=budget {
            cur.push(p);
            rec(dim, budget - p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, k, &mut Vec::new(), &mut out);
    out
}

/// Smoothness order and constant for the analytic approximation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    pub k: u32,
    pub c_prime: f64,
}

impl ApproxParams {
    pub fn new(k: u32, c_prime: f64) -> Result<Self> {
        if k < 1 || !(c_prime > 0.0) {
            return Err(Error::InvalidInput(format!(
                "approximation parameters need k >= 1 and C' > 0 (got k = {k}, C' = {c_prime})"
            )));
        }
        Ok(ApproxParams { k, c_prime })
    }
}

/// Number of modes kept by the j-th approximant: `⌈j·ln(j+1)⌉ + j`.
pub fn approx_cutoff(j: u32) -> i64 {
    let jf = j as f64;
    (jf * (jf + 1.0).ln()).ceil() as i64 + j as i64
}

/// The j-th analytic approximant: sharp projection onto `|n|₁ ≤ cutoff(j)`.
/// The output does not depend on `params`; those only enter the bounds.
pub fn smooth_approximate(f: &FourierMap, j: u32, _params: &ApproxParams) -> FourierMap {
    assert!(j >= 1, "approximation index starts at 1");
    f.truncate(approx_cutoff(j)).0
}

/// Ratios of the three approximation inequalities to their right-hand sides
/// without the constant C':
/// `[‖f_j − f‖_k / ‖f‖_k, |f_j|_{1/j} / ‖f‖_k, |f_{j+1} − f_j|_{1/(j+1)} / (j^{−k}‖f‖_k)]`.
/// The second and third must stay below C'; the first must tend to zero.
pub fn approximation_ratios(f: &FourierMap, j: u32, params: &ApproxParams) -> Result<[f64; 3]> {
    let k = params.k;
    let fk = f.ck_norm(k);
    if fk == 0.0 {
        return Ok([0.0; 3]);
    }
    let fj = smooth_approximate(f, j, params);
    let fj1 = smooth_approximate(f, j + 1, params);
    let tail = (&fj - f).ck_norm(k) / fk;
    let head = fj.strip_norm(1.0 / j as f64)? / fk;
    let incr = (&fj1 - &fj).strip_norm(1.0 / (j + 1) as f64)? / ((j as f64).powi(-(k as i32)) * fk);
    Ok([tail, head, incr])
}

#[derive(Serialize, Deserialize)]
struct CoeffJson {
    n: Vec<i32>,
    re: [[f64; 2]; 2],
    im: [[f64; 2]; 2],
}

#[derive(Serialize, Deserialize)]
struct FourierMapJson {
    dim: usize,
    period: Period,
    convention: String,
    algebra: AlgebraTag,
    coeffs: Vec<CoeffJson>,
}

impl From<&FourierMap> for FourierMapJson {
    fn from(f: &FourierMap) -> Self {
        let coeffs = f
            .coeffs
            .iter()
            .map(|(n, c)| CoeffJson {
                n: n.0.clone(),
                re: [[c[(0, 0)].re, c[(0, 1)].re], [c[(1, 0)].re, c[(1, 1)].re]],
                im: [[c[(0, 0)].im, c[(0, 1)].im], [c[(1, 0)].im, c[(1, 1)].im]],
            })
            .collect();
        FourierMapJson {
            dim: f.dim,
            period: f.period,
            convention: "2pi".into(),
            algebra: f.algebra,
            coeffs,
        }
    }
}

impl TryFrom<FourierMapJson> for FourierMap {
    type Error = Error;

    fn try_from(j: FourierMapJson) -> Result<Self> {
        if j.convention != "2pi" {
            return Err(Error::InvalidInput(format!("unsupported convention {}", j.convention)));
        }
        if !(1..=3).contains(&j.dim) {
            return Err(Error::InvalidInput(format!("unsupported dimension {}", j.dim)));
        }
        let mut f = FourierMap::zero(j.dim, j.period, j.algebra);
        for c in j.coeffs {
            if c.n.len() != j.dim {
                return Err(Error::InvalidInput(format!("mode {:?} has wrong dimension", c.n)));
            }
            let m = CMat2::new(
                Complex64::new(c.re[0][0], c.im[0][0]),
                Complex64::new(c.re[0][1], c.im[0][1]),
                Complex64::new(c.re[1][0], c.im[1][0]),
                Complex64::new(c.re[1][1], c.im[1][1]),
            );
            f.coeffs.insert(Mode(c.n), m);
        }
        Ok(f)
    }
}
