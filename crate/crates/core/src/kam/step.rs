use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::cohomological::{
    eliminate_nonresonant, find_resonance, resonance_distance, solve_cohomological_detailed,
};
use super::schedule::KamSchedule;
use crate::cocycle::{sample_phases, ConstantCocycle, Conjugation, Frequency};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, Su11Direction};
use crate::torus_fourier::{AlgebraTag, FourierMap, Mode};

/// Slack applied to the step bounds before a violation becomes an error.
pub const CONTRACT_SLACK: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepCase {
    Nonresonant,
    Resonant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Ok,
    Warning,
}

/// One measured quantity against its bound. `lower` checks require
/// `measured ≥ bound`; the rest require `measured ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractCheck {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub lower: bool,
    pub status: CheckStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StepEstimates {
    pub n_trunc: f64,
    pub eps: f64,
    pub r: f64,
    pub r_prime: f64,
    pub f_norm: f64,
    /// `|Y|_{r'}` for the cohomological solution or the elimination.
    pub y_norm: f64,
    /// Upper bound `e^{|Y|_{r'}} − 1` for `|B − Id|_{r'}`.
    pub b_minus_id: Option<f64>,
    /// Upper bound for `|B|_{r'}` from the factor norms.
    pub b_strip: Option<f64>,
    pub b_sup: Option<f64>,
    pub f_plus_norm: f64,
    pub a_plus_minus_a: Option<f64>,
    pub a_second_norm: Option<f64>,
    pub t: Option<f64>,
    pub v: Option<f64>,
    /// `ln` of the resonant-case bound for `|f₊|_{r'}`; recorded only.
    pub ln_f_plus_bound: Option<f64>,
    pub min_divisor: Option<f64>,
    pub elimination_sweeps: Option<usize>,
    pub identity_residual: f64,
    pub checks: Vec<ContractCheck>,
}

impl StepEstimates {
    fn upper(&mut self, name: &str, measured: f64, bound: f64, hard: bool) -> Result<()> {
        if hard && !(measured <= CONTRACT_SLACK * bound) {
            return Err(Error::ContractViolation {
                what: name.to_string(),
                measured,
                bound: CONTRACT_SLACK * bound,
            });
        }
        let status = if measured <= bound { CheckStatus::Ok } else { CheckStatus::Warning };
        self.checks.push(ContractCheck { name: name.into(), measured, bound, lower: false, status });
        Ok(())
    }

    fn lower(&mut self, name: &str, measured: f64, bound: f64) {
        let status = if measured >= bound { CheckStatus::Ok } else { CheckStatus::Warning };
        self.checks.push(ContractCheck { name: name.into(), measured, bound, lower: true, status });
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ContractCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Warning)
    }
}

/// Output of one step: `B(θ+α)·A e^{f(θ)}·B(θ)⁻¹ = A₊ e^{f₊(θ)}`.
#[derive(Debug, Clone)]
pub struct KamStepResult {
    pub case: StepCase,
    pub b: Conjugation,
    pub a_plus: ConstantCocycle,
    /// In the resonant case `A₊ = ±e^{A''}`.
    pub a_second: Option<Mat2>,
    pub negated: bool,
    pub f_plus: FourierMap,
    pub resonance_site: Option<Mode>,
    pub estimates: StepEstimates,
}

impl KamStepResult {
    /// Resonance label carried by this step (`m*`, or zero).
    pub fn degree_increment(&self) -> Vec<i32> {
        match &self.resonance_site {
            Some(m) => m.0.clone(),
            None => vec![0; self.b.dim()],
        }
    }
}

/// `ρ` of a constant matrix with the real part oriented like `R_φ`.
pub fn oriented_rho(a: &ConstantCocycle) -> Complex64 {
    Complex64::new(a.oriented_angle(), a.rho().im)
}

fn expm(x: &Mat2) -> Mat2 {
    linalg::expm_traceless(x)
}

/// Sampled `max ‖B(θ+α)·A e^{f(θ)}·B(θ)⁻¹ − A₊ e^{f₊(θ)}‖ / (1+‖A‖)`.
pub fn identity_residual(
    a: &Mat2,
    f: &FourierMap,
    b: &Conjugation,
    a_plus: &Mat2,
    f_plus: &FourierMap,
    freq: &Frequency,
) -> f64 {
    let len = b.period_length();
    sample_phases(f.dim(), 256, len)
        .iter()
        .map(|th| {
            let th1 = freq.shift(th, 1.0);
            let lhs = b.evaluate(&th1) * a * expm(&f.evaluate_real(th)) * b.evaluate_inverse(th);
            let rhs = a_plus * expm(&f_plus.evaluate_real(th));
            (lhs - rhs).norm()
        })
        .fold(0.0, f64::max)
        / (1.0 + linalg::op_norm(a))
}

fn precondition_checks(est: &mut StepEstimates, smallness: f64) -> Result<()> {
    let (f_norm, eps) = (est.f_norm, est.eps);
    est.upper("|f|_r <= eps", f_norm, eps, false)?;
    est.upper("eps <= c (r-r')^(D tau) / ||A||^D_tilde", eps, smallness, false)
}

/// The step when no resonance is present below `N`.
pub fn nonresonant_step(
    a: &ConstantCocycle,
    f: &FourierMap,
    freq: &Frequency,
    r: f64,
    r_prime: f64,
    eps: f64,
    sched: &KamSchedule,
) -> Result<KamStepResult> {
    let a_mat = *a.matrix();
    let a_norm = linalg::op_norm(&a_mat);
    let n_trunc = sched.truncation(r, r_prime, eps);
    let site = find_resonance(oriented_rho(a), freq, n_trunc, eps, sched.sigma)?;
    let mut est = StepEstimates {
        n_trunc,
        eps,
        r,
        r_prime,
        f_norm: f.strip_norm(r)?,
        ..Default::default()
    };
    precondition_checks(&mut est, sched.step_smallness(r, r_prime, a_norm))?;
    let sigma_eps = eps.powf(sched.sigma);
    let nearest = site.map_or(sigma_eps, |m| resonance_distance(oriented_rho(a), freq, &m));
    est.lower("no resonance below N: dist >= eps^sigma", nearest, sigma_eps);

    let f0 = linalg::real_part(&f.mean());
    let (mut g, _) = f.truncate(n_trunc.floor() as i64);
    g.remove(&Mode::zero(f.dim()));
    let sol = solve_cohomological_detailed(a, &g, freq)?;
    let y = sol.y;
    let a_plus_mat = a_mat * expm(&f0);
    let a_plus = ConstantCocycle::new(a_plus_mat)?;
    let a_inv = linalg::inverse_sl2(&a_mat);
    let shifted = y.translate(freq.alpha());
    let support = f.max_mode() + y.max_mode();
    let f_plus = FourierMap::map_pointwise(&[&shifted, f, &y], support, AlgebraTag::Sl2R, |v| {
        linalg::log_of_exp_product(&[-f0, a_inv * v[0] * a_mat, v[1], -v[2]])
    })?;
    let b = Conjugation::exp(y.clone());

    let d = sched.d as f64;
    est.y_norm = y.strip_norm(r_prime)?;
    let b_minus_id = est.y_norm.exp_m1();
    est.b_minus_id = Some(b_minus_id);
    est.f_plus_norm = f_plus.strip_norm(r_prime)?;
    let da = linalg::op_norm(&(a_plus_mat - a_mat));
    est.a_plus_minus_a = Some(da);
    if !g.is_empty() {
        est.min_divisor = Some(sol.min_divisor);
        est.lower(
            "min divisor >= min(eps^sigma, eps^(sigma/2))",
            sol.min_divisor,
            eps.powf(sched.sigma).min(eps.powf(sched.sigma / 2.0)) * (1.0 - 1e-6),
        );
    }
    est.upper("|B-Id|_r' <= eps^(1-8/D)", b_minus_id, eps.powf(1.0 - 8.0 / d), true)?;
    est.upper("|f+|_r' <= eps^(2-8/D)", est.f_plus_norm, eps.powf(2.0 - 8.0 / d), true)?;
    est.upper("||A+ - A|| <= 2 ||A|| eps", da, 2.0 * a_norm * eps, true)?;
    est.identity_residual = identity_residual(&a_mat, f, &b, &a_plus_mat, &f_plus, freq);

    Ok(KamStepResult {
        case: StepCase::Nonresonant,
        b,
        a_plus,
        a_second: None,
        negated: false,
        f_plus,
        resonance_site: None,
        estimates: est,
    })
}

/// `θ ↦ R_{−⟨m,θ⟩/2} X(θ) R_{⟨m,θ⟩/2}`. In su(1,1) coordinates the rotation
/// is diagonal, so the off-diagonal entries move by `±m` in mode space.
pub fn rotate_modes(x: &FourierMap, m: &Mode) -> FourierMap {
    use Su11Direction::{ToSl2R, ToSu11};
    let mut out = FourierMap::zero(x.dim(), x.period(), AlgebraTag::Sl2R);
    let z = Complex64::new(0.0, 0.0);
    for (n, c) in x.coeffs() {
        let s = linalg::su11_transform(c, ToSu11);
        let diag = linalg::CMat2::new(s[(0, 0)], z, z, s[(1, 1)]);
        let upper = linalg::CMat2::new(z, s[(0, 1)], z, z);
        let lower = linalg::CMat2::new(z, z, s[(1, 0)], z);
        out.insert(n.clone(), linalg::su11_transform(&diag, ToSl2R));
        out.insert(n.add(m), linalg::su11_transform(&upper, ToSl2R));
        out.insert(n.add(&m.neg()), linalg::su11_transform(&lower, ToSl2R));
    }
    out.prune();
    out.enforce_real();
    out
}

fn generator() -> Mat2 {
    Mat2::new(0.0, -1.0, 1.0, 0.0)
}

/// The step at a resonant site `m*`: eliminate the non-resonant part,
/// bring `A` to a rotation, and remove the resonance with `R_{−⟨m*,θ⟩/2}`.
#[allow(clippy::too_many_arguments)]
pub fn resonant_step(
    a: &ConstantCocycle,
    f: &FourierMap,
    m_star: &Mode,
    freq: &Frequency,
    r: f64,
    r_prime: f64,
    eps: f64,
    sched: &KamSchedule,
) -> Result<KamStepResult> {
    let a_mat = *a.matrix();
    let a_norm = linalg::op_norm(&a_mat);
    let n_trunc = sched.truncation(r, r_prime, eps);
    let mut est = StepEstimates {
        n_trunc,
        eps,
        r,
        r_prime,
        f_norm: f.strip_norm(r)?,
        ..Default::default()
    };
    precondition_checks(&mut est, sched.step_smallness(r, r_prime, a_norm))?;

    let eta = 13.0 * a_norm * a_norm * eps.sqrt();
    let elim = eliminate_nonresonant(a, f, eta, r, freq)?;
    est.elimination_sweeps = Some(elim.sweeps);
    let (p, phi) = linalg::rotation_normal_form(&a_mat)?;
    let p_inv = linalg::inverse_sl2(&p);
    let g1 = elim.g_re.sandwich(&linalg::to_complex(&p_inv), &linalg::to_complex(&p), AlgebraTag::Sl2R);
    let g2 = rotate_modes(&g1, m_star);

    // R_φ becomes R_{φ − ⟨m*,α⟩/2}; fold ±1/2 turns into a sign
    let mut phi1 = phi - 0.5 * freq.pair(m_star);
    phi1 -= phi1.round();
    let negated = phi1.abs() > 0.25;
    if negated {
        phi1 -= 0.5 * phi1.signum();
    }
    let x_rot = generator() * (2.0 * PI * phi1);
    let g2_mean = linalg::real_part(&g2.mean());
    let a2 = linalg::log_of_exp_product(&[x_rot, g2_mean])?;
    let sign = if negated { -1.0 } else { 1.0 };
    let a_plus_mat = expm(&a2) * sign;
    let a_plus = ConstantCocycle::new(a_plus_mat)?;
    let f_plus = FourierMap::map_pointwise(&[&g2], g2.max_mode(), AlgebraTag::Sl2R, |v| {
        linalg::log_of_exp_product(&[-a2, x_rot, v[0]])
    })?;

    let mut b = Conjugation::identity(f.dim());
    for y in &elim.factors {
        b = b.then(&Conjugation::exp(y.clone()));
    }
    b = b
        .then(&Conjugation::constant(f.dim(), p_inv))
        .then(&Conjugation::rotation(m_star.neg()));

    let tau = sched.tau;
    let kappa = sched.kappa;
    let ln_eps = eps.ln().abs();
    est.y_norm = elim.y.strip_norm(r_prime)?;
    let m_l1 = m_star.l1() as f64;
    let b_strip = 2.0 * (0.5 * m_l1 * r_prime).exp() * linalg::op_norm(&p_inv) * est.y_norm.exp();
    est.b_strip = Some(b_strip);
    let b_sup = sample_phases(f.dim(), 256, 2.0)
        .iter()
        .map(|th| linalg::op_norm(&b.evaluate(th)))
        .fold(0.0, f64::max);
    est.b_sup = Some(b_sup);
    est.f_plus_norm = f_plus.strip_norm(r_prime)?;
    let a2_norm = linalg::op_norm(&a2);
    let su = linalg::su11_transform(&linalg::to_complex(&a2), Su11Direction::ToSu11);
    let (t, v) = (su[(0, 0)].im.abs(), su[(0, 1)].norm());
    est.a_second_norm = Some(a2_norm);
    est.t = Some(t);
    est.v = Some(v);
    let n_prime = 2.0 * n_trunc * n_trunc + 1.0;
    let prefactor = 2f64.powf(4.0 + tau) * a_norm * ln_eps.powf(tau) / (kappa * (r - r_prime).powf(tau));
    est.ln_f_plus_bound = Some(
        (2.0 * prefactor * eps).ln() - n_prime * (r - r_prime)
            + f.dim() as f64 * n_prime.ln()
            + n_trunc * r_prime,
    );

    let es = eps.powf(sched.sigma);
    let b_pref = 8.0 * (a_norm / kappa).sqrt() * n_trunc.powf(tau / 2.0);
    est.upper("||A''|| <= 2 eps^sigma", a2_norm, 2.0 * es, true)?;
    est.upper("|t| <= eps^sigma", t, es, true)?;
    est.upper("|v| <= v bound", v, prefactor * eps * (-m_l1 * r).exp(), true)?;
    est.upper(
        "|B|_r' <= 8 (||A||/kappa)^(1/2) N^(tau/2) eps^(-r'/(r-r'))",
        b_strip,
        b_pref * eps.powf(-r_prime / (r - r_prime)),
        true,
    )?;
    est.upper("||B||_0 <= 8 (||A||/kappa)^(1/2) N^(tau/2)", b_sup, b_pref, true)?;
    est.identity_residual = identity_residual(&a_mat, f, &b, &a_plus_mat, &f_plus, freq);

    Ok(KamStepResult {
        case: StepCase::Resonant,
        b,
        a_plus,
        a_second: Some(a2),
        negated,
        f_plus,
        resonance_site: Some(m_star.clone()),
        estimates: est,
    })
}

/// One step, dispatched on the resonance scan at `N = 2|ln ε|/(r−r')`.
pub fn kam_step(
    a: &ConstantCocycle,
    f: &FourierMap,
    freq: &Frequency,
    r: f64,
    r_prime: f64,
    eps: f64,
    sched: &KamSchedule,
) -> Result<KamStepResult> {
    let n_trunc = sched.truncation(r, r_prime, eps);
    match find_resonance(oriented_rho(a), freq, n_trunc, eps, sched.sigma)? {
        Some(m) => resonant_step(a, f, &m, freq, r, r_prime, eps, sched),
        None => nonresonant_step(a, f, freq, r, r_prime, eps, sched),
    }
}
