use num_complex::Complex64;

use crate::cocycle::{modes_in_ball, ConstantCocycle, Frequency};
use crate::error::{Error, Result};
use crate::linalg::{self, dist_to_z, CMat2, Mat2};
use crate::torus_fourier::{AlgebraTag, FourierMap, Mode, Period};

/// Largest number of modes `find_resonance` will scan exhaustively.
pub const RESONANCE_SCAN_LIMIT: f64 = 5e7;

/// `|2ρ − ⟨m,α⟩ − j|` minimized over `j ∈ ℤ`, for complex `ρ` in turns.
pub fn resonance_distance(rho: Complex64, freq: &Frequency, m: &Mode) -> f64 {
    dist_to_z(2.0 * rho.re - freq.pair(m)).hypot(2.0 * rho.im)
}

/// The mode `0 < |m|₁ ≤ N` minimizing the resonance distance, provided it is
/// below `ε^σ`. Ties go to the smaller `|m|₁`, then lexicographic order.
pub fn find_resonance(
    rho: Complex64,
    freq: &Frequency,
    n: f64,
    eps: f64,
    sigma: f64,
) -> Result<Option<Mode>> {
    if !(n >= 1.0 && eps > 0.0 && eps < 1.0 && sigma > 0.0 && sigma < 1.0 / 6.0) {
        return Err(Error::InvalidInput(format!(
            "find_resonance needs N >= 1, eps in (0,1), sigma in (0,1/6); got N = {n}, eps = {eps}, sigma = {sigma}"
        )));
    }
    let threshold = eps.powf(sigma);
    if rho.im.abs() > threshold {
        return Ok(None);
    }
    let d = freq.dim();
    let n_max = n.floor();
    let count = (2.0 * n_max + 1.0).powi(d as i32);
    if count > RESONANCE_SCAN_LIMIT {
        return Err(Error::InvalidInput(format!(
            "truncation order N = {n:.3e} is beyond exhaustive resonance scanning"
        )));
    }
    let n_max = n_max as i64;
    let mut best: Option<(f64, Mode)> = None;
    let mut consider = |m: Mode| {
        let dist = resonance_distance(rho, freq, &m);
        if best.as_ref().map_or(true, |(b, _)| dist < *b) {
            best = Some((dist, m));
        }
    };
    if d == 1 {
        for l in 1..=n_max as i32 {
            consider(Mode(vec![-l]));
            consider(Mode(vec![l]));
        }
    } else {
        for m in modes_in_ball(d, n_max) {
            consider(m);
        }
    }
    Ok(best.and_then(|(dist, m)| (dist < threshold).then_some(m)))
}

fn phase(period: Period, freq: &Frequency, n: &Mode) -> Complex64 {
    Complex64::from_polar(1.0, period.angular() * freq.pair(n))
}

/// A solution of the cohomological equation with the smallest normalized
/// divisor met (`|z−1|`, `|z·a/b − 1|`, `|z·b/a − 1|`).
#[derive(Debug, Clone)]
pub struct CohomologicalSolution {
    pub y: FourierMap,
    pub min_divisor: f64,
}

/// Solves `Y(θ+α)A − AY(θ) = −Ag(θ)` mode by mode in the Schur basis of `A`.
pub fn solve_cohomological(a: &ConstantCocycle, g: &FourierMap, freq: &Frequency) -> Result<FourierMap> {
    Ok(solve_cohomological_detailed(a, g, freq)?.y)
}

pub fn solve_cohomological_detailed(
    a: &ConstantCocycle,
    g: &FourierMap,
    freq: &Frequency,
) -> Result<CohomologicalSolution> {
    let schur = linalg::schur_with(a.matrix(), a.eigenvalue());
    let t = schur.t;
    let (ea, p, eb) = (t[(0, 0)], t[(0, 1)], t[(1, 1)]);
    let one = Complex64::new(1.0, 0.0);
    let mut y = FourierMap::zero(g.dim(), g.period(), AlgebraTag::Sl2R);
    let mut min_div = f64::INFINITY;
    for (n, c) in g.coeffs() {
        let z = phase(g.period(), freq, n);
        let cc = -(t * schur.to_schur_basis(c));
        let d3 = z * ea - eb;
        let d1 = ea * (z - one);
        let d4 = eb * (z - one);
        let d2 = z * eb - ea;
        for d in [d3, d1, d4, d2] {
            if d.norm() < 1e-13 {
                return Err(Error::SmallDivisor { mode: n.0.clone(), magnitude: d.norm() });
            }
        }
        min_div = min_div
            .min((z - one).norm())
            .min((z * ea / eb - one).norm())
            .min((z * eb / ea - one).norm());
        let y3 = cc[(1, 0)] / d3;
        let y1 = (cc[(0, 0)] + p * y3) / d1;
        let y4 = (cc[(1, 1)] - z * p * y3) / d4;
        let y2 = (cc[(0, 1)] - z * p * y1 + p * y4) / d2;
        y.insert(n.clone(), schur.from_schur_basis(&CMat2::new(y1, y2, y3, y4)));
    }
    y.prune();
    y.enforce_real();
    Ok(CohomologicalSolution { y, min_divisor: min_div })
}

/// Output of the non-resonant elimination: the conjugation is
/// `e^{Y_k}···e^{Y_1}` with `factors = [Y_1, …, Y_k]`, and `y` is its
/// logarithm resampled as one map.
#[derive(Debug, Clone)]
pub struct Elimination {
    pub factors: Vec<FourierMap>,
    pub y: FourierMap,
    pub g_re: FourierMap,
    pub sweeps: usize,
    /// `|P_nre g_re|_r` after the last sweep.
    pub nre_residual: f64,
}

/// Splits modes of `A⁻¹Y(·+α)A − Y` into the η-resonant and η-non-resonant
/// parts. Diagonalizable `A` is split along its eigenbasis; parabolic `A`
/// has one multiplier `z−1` per mode.
struct Splitter {
    kind: SplitKind,
    freq_phase: Vec<f64>,
    period: Period,
    eta: f64,
}

enum SplitKind {
    Eigen { s: CMat2, s_inv: CMat2, ratio: Complex64 },
    Parabolic { a: ConstantCocycle },
}

impl Splitter {
    fn new(a: &ConstantCocycle, freq: &Frequency, period: Period, eta: f64) -> Self {
        let kind = match linalg::eigenbasis(a.matrix()) {
            Ok((s, s_inv, l1, l2)) => SplitKind::Eigen { s, s_inv, ratio: l1 / l2 },
            Err(_) => SplitKind::Parabolic { a: *a },
        };
        Splitter { kind, freq_phase: freq.alpha().to_vec(), period, eta }
    }

    fn z(&self, n: &Mode) -> Complex64 {
        Complex64::from_polar(1.0, self.period.angular() * n.dot(&self.freq_phase))
    }

    /// Non-resonant part of `g` and the `Y` removing it to first order.
    fn split_and_solve(&self, g: &FourierMap, freq: &Frequency) -> Result<(FourierMap, FourierMap)> {
        let one = Complex64::new(1.0, 0.0);
        let mut nre = FourierMap::zero(g.dim(), g.period(), AlgebraTag::Sl2R);
        let mut y = FourierMap::zero(g.dim(), g.period(), AlgebraTag::Sl2R);
        match &self.kind {
            SplitKind::Eigen { s, s_inv, ratio } => {
                for (n, c) in g.coeffs() {
                    let z = self.z(n);
                    let ct = s_inv * c * s;
                    // multiplier of entry (i, j): z·λ_j/λ_i − 1
                    let mult = [
                        [z - one, z / ratio - one],
                        [z * ratio - one, z - one],
                    ];
                    let mut keep = CMat2::zeros();
                    let mut sol = CMat2::zeros();
                    for i in 0..2 {
                        for j in 0..2 {
                            if mult[i][j].norm() >= self.eta {
                                keep[(i, j)] = ct[(i, j)];
                                sol[(i, j)] = -ct[(i, j)] / mult[i][j];
                            }
                        }
                    }
                    nre.insert(n.clone(), s * keep * s_inv);
                    y.insert(n.clone(), s * sol * s_inv);
                }
                nre.prune();
                nre.enforce_real();
                y.prune();
                y.enforce_real();
            }
            SplitKind::Parabolic { a } => {
                for (n, c) in g.coeffs() {
                    if (self.z(n) - one).norm() >= self.eta {
                        nre.insert(n.clone(), *c);
                    }
                }
                nre.prune();
                y = solve_cohomological(a, &nre, freq)?;
            }
        }
        Ok((nre, y))
    }
}

/// Removes the η-non-resonant part of `g`: finds `Y` with
/// `e^{Y(θ+α)} A e^{g(θ)} e^{−Y(θ)} = A e^{g_re(θ)}` by Newton sweeps.
pub fn eliminate_nonresonant(
    a: &ConstantCocycle,
    g: &FourierMap,
    eta: f64,
    r: f64,
    freq: &Frequency,
) -> Result<Elimination> {
    const MAX_SWEEPS: usize = 64;
    let a_norm = linalg::op_norm(a.matrix());
    let g_norm = g.strip_norm(r)?;
    let eps_max = (4.0 * a_norm).powi(-4);
    if g_norm > eps_max {
        return Err(Error::InvalidInput(format!(
            "|g|_r = {g_norm:.3e} exceeds (4||A||)^-4 = {eps_max:.3e}"
        )));
    }
    let eta_min = 13.0 * a_norm * a_norm * g_norm.sqrt();
    if eta < eta_min * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "eta = {eta:.3e} is below 13||A||^2 |g|_r^(1/2) = {eta_min:.3e}"
        )));
    }
    let split = Splitter::new(a, freq, g.period(), eta);
    let a_mat = *a.matrix();
    let a_inv = linalg::inverse_sl2(&a_mat);
    let cap = 4 * g.max_mode().max(1);
    let tol = 1e-14 * g_norm;
    let mut factors = Vec::new();
    let mut cur = g.clone();
    let mut last = f64::INFINITY;
    let mut sweeps = 0;
    let residual = loop {
        let (nre, y) = split.split_and_solve(&cur, freq)?;
        let nre_norm = nre.strip_norm(r)?;
        if !nre_norm.is_finite() {
            return Err(Error::EliminationDiverged { sweeps, residual: nre_norm });
        }
        // stop once converged, or when rounding keeps the residual from shrinking
        if nre_norm <= tol || y.is_empty() || (sweeps > 0 && nre_norm >= 0.5 * last) {
            break nre_norm;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::EliminationDiverged { sweeps, residual: nre_norm });
        }
        let support = (cur.max_mode() + y.max_mode()).min(cap);
        let shifted = y.translate(freq.alpha());
        cur = FourierMap::map_pointwise(&[&shifted, &cur, &y], support, AlgebraTag::Sl2R, |v| {
            linalg::log_of_exp_product(&[a_inv * v[0] * a_mat, v[1], -v[2]])
        })?;
        factors.push(y);
        last = nre_norm;
        sweeps += 1;
    };
    if residual > 1e-8 * g_norm.max(f64::MIN_POSITIVE) && residual > 1e-300 {
        return Err(Error::EliminationDiverged { sweeps, residual });
    }
    let y = combine_exponentials(&factors, g.dim(), g.period())?;
    Ok(Elimination { factors, y, g_re: cur, sweeps, nre_residual: residual })
}

/// `log(e^{Y_k}···e^{Y_1})` as a single map.
pub fn combine_exponentials(factors: &[FourierMap], dim: usize, period: Period) -> Result<FourierMap> {
    match factors {
        [] => Ok(FourierMap::zero(dim, period, AlgebraTag::Sl2R)),
        [one] => Ok(one.clone()),
        _ => {
            let support = factors.iter().map(FourierMap::max_mode).max().unwrap_or(0) * 2;
            let refs: Vec<&FourierMap> = factors.iter().collect();
            FourierMap::map_pointwise(&refs, support, AlgebraTag::Sl2R, |v| {
                let xs: Vec<Mat2> = v.iter().rev().copied().collect();
                linalg::log_of_exp_product(&xs)
            })
        }
    }
}
