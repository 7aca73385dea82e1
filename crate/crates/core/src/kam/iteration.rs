use serde::Serialize;
use serde_json::json;

use super::schedule::KamSchedule;
use super::step::{kam_step, StepCase, StepEstimates};
use crate::cocycle::{
    rotation_diophantine_check, rotation_number, sample_phases, Cocycle, ConstantCocycle,
    Conjugation, Frequency, RotationClass,
};
use crate::error::{Error, Result};
use crate::linalg::{self, mod1};
use crate::torus_fourier::{approx_cutoff, AlgebraTag, FourierMap, Period};

pub const REPORT_SCHEMA: &str = "kamred.report.v1";

/// Parameters of the final rotation-number classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotClassParams {
    pub gamma: f64,
    pub tau: f64,
    pub n_max: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classification {
    Diophantine,
    Rational { m0: Vec<i32> },
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub j: usize,
    pub l_j: f64,
    pub eps: f64,
    pub case: StepCase,
    pub resonance_site: Option<Vec<i32>>,
    /// Winding degree of the accumulated conjugation after this stage.
    pub degree: Vec<i32>,
    /// `sup_θ ‖f₊(θ)‖` over sampled phases.
    pub residual: f64,
    pub estimates: StepEstimates,
}

#[derive(Debug, Clone)]
pub struct ReducibilityReport {
    pub schedule: KamSchedule,
    pub m_value: f64,
    pub a_norm: f64,
    pub entry_norm: f64,
    pub ln_entry_bound: f64,
    pub rho: Option<f64>,
    pub classification: Classification,
    pub steps: Vec<StageRecord>,
    pub resonant_steps: Vec<usize>,
    /// First stage `j'` satisfying the finite-resonance criterion.
    pub predicted_last_resonant_stage: Option<usize>,
    pub b_final: Conjugation,
    pub a_final: ConstantCocycle,
    pub residual: f64,
    /// Sum of the resonance labels `m*` over resonant steps.
    pub degree_final: Vec<i32>,
    pub stop_reason: String,
}

impl ReducibilityReport {
    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(json!({
            "schema": REPORT_SCHEMA,
            "schedule": self.schedule,
            "M": self.m_value,
            "a_norm": self.a_norm,
            "entry": {"ck_norm": self.entry_norm, "ln_bound": self.ln_entry_bound},
            "rho": self.rho,
            "classification": self.classification,
            "steps": self.steps,
            "resonant_steps": self.resonant_steps,
            "predicted_last_resonant_stage": self.predicted_last_resonant_stage,
            "B_final": self.b_final.to_json()?,
            "A_final": self.a_final.to_json(),
            "residual": self.residual,
            "degree_final": self.degree_final,
            "conjugation_degree": self.b_final.degree(),
            "stop_reason": self.stop_reason,
        }))
    }

    /// Whether every stage after the last resonant one is non-resonant and
    /// no resonant stage comes after the predicted one.
    pub fn resonances_finite(&self) -> bool {
        match (self.resonant_steps.last(), self.predicted_last_resonant_stage) {
            (None, _) => true,
            (Some(&last), Some(pred)) => last <= pred,
            (Some(_), None) => false,
        }
    }
}

/// The analytic approximant `f_{l}`: modes up to `⌈l ln(l+1)⌉ + l`.
fn approximant(f: &FourierMap, l: f64) -> FourierMap {
    let cutoff = if l < u32::MAX as f64 {
        approx_cutoff(l as u32) as f64
    } else {
        f64::INFINITY
    };
    if cutoff >= f.max_mode() as f64 {
        f.clone()
    } else {
        f.truncate(cutoff as i64).0
    }
}

/// `θ ↦ log(A_cur⁻¹ B(θ+α) A e^{f(θ)} B(θ)⁻¹)`.
fn conjugated_remainder(
    a: &ConstantCocycle,
    f: &FourierMap,
    b: &Conjugation,
    a_cur: &ConstantCocycle,
    freq: &Frequency,
) -> Result<FourierMap> {
    if b.is_identity() && a.matrix() == a_cur.matrix() {
        return Ok(f.clone());
    }
    let a_mat = *a.matrix();
    let cur_inv = linalg::inverse_sl2(a_cur.matrix());
    let failure = std::cell::RefCell::new(None);
    let min_grid = (4 * f.max_axis_mode() as usize + 16).max(64);
    let out = FourierMap::from_fn(f.dim(), Period::Standard, AlgebraTag::Sl2R, min_grid, 1e-15, |th| {
        let th1 = freq.shift(th, 1.0);
        let m = cur_inv
            * b.evaluate(&th1)
            * a_mat
            * linalg::expm_traceless(&f.evaluate_real(th))
            * b.evaluate_inverse(th);
        match linalg::NearId::from_matrix(&m).log() {
            Ok(x) => linalg::to_complex(&x),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                linalg::CMat2::zeros()
            }
        }
    });
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

fn sup_norm(f: &FourierMap) -> f64 {
    sample_phases(f.dim(), 512, 1.0)
        .iter()
        .map(|th| linalg::op_norm(&f.evaluate_real(th)))
        .fold(0.0, f64::max)
}

/// Runs the iteration on `A e^{f}` with the schedule's radii and
/// smallness sequence until `j_max` or the residual floor.
pub fn run_iteration(
    a: &ConstantCocycle,
    f: &FourierMap,
    freq: &Frequency,
    sched: &KamSchedule,
    params: RotClassParams,
) -> Result<ReducibilityReport> {
    sched.validate()?;
    f.validate()?;
    let a_norm = linalg::op_norm(a.matrix());
    let lower = sched.m_lower_bound(a_norm);
    let m_value = sched.m_value(a_norm);
    if m_value < lower {
        return Err(Error::InvalidInput(format!(
            "M > max((2||A||)^D_tilde / c, m0) violated (M = {m_value}, bound = {lower:.6e})"
        )));
    }
    let (l1, l2) = (sched.l(1, m_value), sched.l(2, m_value));
    let ln_entry_bound = sched.ln_eps0_prime(1.0 / l1, 1.0 / l2, a_norm);
    let entry_norm = f.ck_norm(sched.k);
    if entry_norm > 0.0 && entry_norm.ln() > ln_entry_bound {
        return Err(Error::EntrySmallness {
            k: sched.k,
            norm: entry_norm,
            bound: ln_entry_bound.exp(),
        });
    }

    let floor = 1e-13 * (1.0 + a_norm);
    let mut b = Conjugation::identity(f.dim());
    let mut a_cur = *a;
    let mut degree_final = vec![0; f.dim()];
    let mut steps = Vec::new();
    let mut resonant_steps = Vec::new();
    let mut stop_reason = format!("reached j_max = {}", sched.j_max);
    for j in 1..=sched.j_max {
        let (lj, lj1) = (sched.l(j, m_value), sched.l(j + 1, m_value));
        let f_lj = approximant(f, lj);
        let remainder = conjugated_remainder(a, &f_lj, &b, &a_cur, freq)?;
        if sup_norm(&remainder) <= floor {
            stop_reason = format!("residual below floor {floor:.1e} before stage {j}");
            break;
        }
        let eps = sched.eps(lj, a_norm);
        let step = kam_step(&a_cur, &remainder, freq, 1.0 / lj, 1.0 / lj1, eps, sched)?;
        b = b.then(&step.b);
        a_cur = step.a_plus;
        if step.case == StepCase::Resonant {
            resonant_steps.push(j);
            for (d, x) in degree_final.iter_mut().zip(step.degree_increment()) {
                *d += x;
            }
        }
        steps.push(StageRecord {
            j,
            l_j: lj,
            eps,
            case: step.case,
            resonance_site: step.resonance_site.as_ref().map(|m| m.0.clone()),
            degree: b.degree(),
            residual: sup_norm(&step.f_plus),
            estimates: step.estimates,
        });
    }

    let remainder = conjugated_remainder(a, f, &b, &a_cur, freq)?;
    let residual = sup_norm(&remainder);
    let deg_pair: f64 = b.degree().iter().zip(freq.alpha()).map(|(d, x)| *d as f64 * x).sum();
    let rho = if residual <= 1e-10 {
        Some(mod1(a_cur.oriented_angle() - 0.5 * deg_pair))
    } else {
        Cocycle::perturbed(freq.clone(), *a, f.clone())
            .ok()
            .and_then(|c| rotation_number(&c, 100_000).ok())
    };
    let classification = match rho.map(|r| {
        rotation_diophantine_check(r, freq, params.gamma, params.tau, params.n_max)
    }) {
        Some(RotationClass::Diophantine) => Classification::Diophantine,
        Some(RotationClass::Rational { m0, .. }) => Classification::Rational { m0 },
        _ => Classification::Inconclusive,
    };
    let predicted_last_resonant_stage = steps
        .iter()
        .find(|s| {
            let deg: i64 = s.degree.iter().map(|d| d.abs() as i64).sum();
            sched.resonance_free_after(sched.ln_eps(s.l_j, a_norm), deg, params.gamma)
        })
        .map(|s| s.j);

    Ok(ReducibilityReport {
        schedule: *sched,
        m_value,
        a_norm,
        entry_norm,
        ln_entry_bound,
        rho,
        classification,
        steps,
        resonant_steps,
        predicted_last_resonant_stage,
        b_final: b,
        a_final: a_cur,
        residual,
        degree_final,
        stop_reason,
    })
}
