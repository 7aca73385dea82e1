use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the iteration and the sequences derived from them.
///
/// `m` is the integer `M` seeding `l_j = M^{(1+s)^{j−1}}`; it is kept as a
/// float because admissible values routinely exceed `u64`. `None` selects
/// the smallest admissible value for the constant at hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KamSchedule {
    pub sigma: f64,
    #[serde(rename = "D")]
    pub d: u32,
    #[serde(rename = "D_tilde")]
    pub d_tilde: f64,
    pub c: f64,
    pub s: f64,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub tau: f64,
    pub kappa: f64,
    pub k: u32,
    pub k0: u32,
    pub j_max: usize,
}

impl KamSchedule {
    pub fn defaults(kappa: f64, tau: f64) -> Self {
        let sigma = 1.0 / 7.0;
        let d = 15u32;
        let dt = d as f64 * tau;
        let s = (1.0 / (6.0 * dt + 3.0)).min(1.0 / 140.0);
        let k = ((d as f64 + 2.0) * tau + 2.0).floor() as u32 + 1;
        let k0 = (k as f64 - 10.0 * tau - 3.0).floor().max(0.0) as u32;
        KamSchedule {
            sigma,
            d,
            d_tilde: 4.0,
            c: 1e-3,
            s,
            m: None,
            tau,
            kappa,
            k,
            k0,
            j_max: 8,
        }
    }

    /// Checks every inequality the scheme relies on; the error names the
    /// first violated one.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidInput(what));
        let d = self.d as f64;
        let k = self.k as f64;
        if !(self.sigma > 0.0 && self.sigma < 1.0 / 6.0) {
            return fail(format!("sigma < 1/6 violated (sigma = {})", self.sigma));
        }
        if !(d > 2.0 / self.sigma) {
            return fail(format!("D > 2/sigma violated (D = {}, 2/sigma = {})", self.d, 2.0 / self.sigma));
        }
        if !(self.tau > 0.0 && self.kappa > 0.0) {
            return fail(format!("tau > 0 and kappa > 0 violated (tau = {}, kappa = {})", self.tau, self.kappa));
        }
        if !(self.c > 0.0 && self.d_tilde > 0.0) {
            return fail(format!("c > 0 and D_tilde > 0 violated (c = {}, D_tilde = {})", self.c, self.d_tilde));
        }
        let s_max = 1.0 / (6.0 * d * self.tau + 3.0);
        if !(self.s > 0.0 && self.s <= s_max) {
            return fail(format!("0 < s <= 1/(6 D tau + 3) violated (s = {}, bound = {s_max})", self.s));
        }
        let k_min = (d + 2.0) * self.tau + 2.0;
        if !(k > k_min) {
            return fail(format!("k > (D+2) tau + 2 violated (k = {}, bound = {k_min})", self.k));
        }
        if self.k0 as f64 > self.k0_max() {
            return fail(format!(
                "k0 <= (k - 10 tau - 3)/(1+s) violated (k0 = {}, bound = {})",
                self.k0,
                self.k0_max()
            ));
        }
        if let Some(m) = self.m {
            if !(m >= 2.0 && m.fract() == 0.0 && m.is_finite()) {
                return fail(format!("M must be an integer >= 2 (M = {m})"));
            }
        }
        if self.j_max == 0 {
            return fail("j_max >= 1 violated".into());
        }
        Ok(())
    }

    /// Largest admissible `k₀`: `(k−10τ−3)/(1+s)`, relaxed to its integer
    /// part `⌊k−10τ−3⌋` which the scheme also allows.
    pub fn k0_max(&self) -> f64 {
        let base = self.k as f64 - 10.0 * self.tau - 3.0;
        (base / (1.0 + self.s)).max(base.floor())
    }

    fn dtau(&self) -> f64 {
        self.d as f64 * self.tau
    }

    /// `ln ε_m = ln c − D̃ ln(2‖A‖) − (Dτ + 1/2) ln m`.
    pub fn ln_eps(&self, m: f64, a_norm: f64) -> f64 {
        self.c.ln() - self.d_tilde * (2.0 * a_norm).ln() - (self.dtau() + 0.5) * m.ln()
    }

    pub fn eps(&self, m: f64, a_norm: f64) -> f64 {
        self.ln_eps(m, a_norm).exp()
    }

    /// `ln ε₀'(r, r') = ln c − D̃ ln(2‖A‖) + Dτ ln(r − r')`.
    pub fn ln_eps0_prime(&self, r: f64, r_prime: f64, a_norm: f64) -> f64 {
        self.c.ln() - self.d_tilde * (2.0 * a_norm).ln() + self.dtau() * (r - r_prime).ln()
    }

    pub fn eps0_prime(&self, r: f64, r_prime: f64, a_norm: f64) -> f64 {
        self.ln_eps0_prime(r, r_prime, a_norm).exp()
    }

    /// Step smallness `c·(r−r')^{Dτ}/‖A‖^{D̃}`.
    pub fn step_smallness(&self, r: f64, r_prime: f64, a_norm: f64) -> f64 {
        (self.c.ln() + self.dtau() * (r - r_prime).ln() - self.d_tilde * a_norm.ln()).exp()
    }

    /// Truncation order `N = 2|ln ε|/(r − r')`.
    pub fn truncation(&self, r: f64, r_prime: f64, eps: f64) -> f64 {
        2.0 * eps.ln().abs() / (r - r_prime)
    }

    /// Smallest `m` from which `ε_m ≤ ε₀'(1/m, 1/m^{1+s})` holds. The ratio
    /// of the two sides is `m^{1/2}(1 − m^{−s})^{Dτ}`, increasing in `m`.
    pub fn m0(&self) -> f64 {
        let g = |x: f64| 0.5 * x + self.dtau() * (-(-self.s * x).exp_m1()).ln();
        let (mut lo, mut hi) = (2f64.ln(), 2f64.ln());
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        if g(lo) >= 0.0 {
            return 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi.exp().ceil()
    }

    /// Lower bound `max((2‖A‖)^{D̃}/c, m₀)` for `M`.
    pub fn m_lower_bound(&self, a_norm: f64) -> f64 {
        ((2.0 * a_norm).powf(self.d_tilde) / self.c).max(self.m0())
    }

    /// The configured `M`, or the smallest integer above the lower bound.
    pub fn m_value(&self, a_norm: f64) -> f64 {
        self.m.unwrap_or_else(|| self.m_lower_bound(a_norm).floor() + 1.0)
    }

    /// `l_j = [M^{(1+s)^{j−1}}] + 1` for `j ≥ 1`.
    pub fn l(&self, j: usize, m: f64) -> f64 {
        assert!(j >= 1);
        (m.ln() * (1.0 + self.s).powi(j as i32 - 1)).exp().floor() + 1.0
    }

    /// The finite-resonance criterion `ε_{l_j}^{(1+s)σ/2}(1+|deg|)^τ ≤ γ`.
    pub fn resonance_free_after(&self, ln_eps_lj: f64, degree_l1: i64, gamma: f64) -> bool {
        let lhs = ((1.0 + self.s) * self.sigma / 2.0 * ln_eps_lj).exp()
            * (1.0 + degree_l1 as f64).powf(self.tau);
        lhs <= gamma
    }

    /// Degree growth bound `4 l_j ln(1/ε_{l_j})`.
    pub fn degree_bound(&self, l_j: f64, ln_eps_lj: f64) -> f64 {
        4.0 * l_j * (-ln_eps_lj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_satisfy_inequalities() {
        let s = KamSchedule::defaults(0.2, 1.5);
        assert_eq!(s.k, 28);
        assert_eq!(s.k0, 10);
        assert!((s.s - 1.0 / 140.0).abs() < 1e-15);
        s.validate().unwrap();
    }

    #[test]
    fn violations_are_named() {
        let mut s = KamSchedule::defaults(0.2, 1.5);
        s.sigma = 0.2;
        let e = s.validate().unwrap_err().to_string();
        assert!(e.contains("sigma < 1/6"), "{e}");
        let mut s = KamSchedule::defaults(0.2, 1.5);
        s.d = 14;
        assert!(s.validate().unwrap_err().to_string().contains("D > 2/sigma"));
        let mut s = KamSchedule::defaults(0.2, 1.5);
        s.s = 0.01;
        assert!(s.validate().unwrap_err().to_string().contains("6 D tau + 3"));
        let mut s = KamSchedule::defaults(0.2, 1.5);
        s.k = 27;
        assert!(s.validate().unwrap_err().to_string().contains("(D+2) tau + 2"));
        let mut s = KamSchedule::defaults(0.2, 1.5);
        s.k0 = 11;
        assert!(s.validate().unwrap_err().to_string().contains("k0"));
    }

    #[test]
    fn m0_is_the_crossing_point() {
        let s = KamSchedule::defaults(0.2, 1.5);
        let m0 = s.m0();
        let a = 1.3;
        let at = |m: f64| s.ln_eps(m, a) - s.ln_eps0_prime(1.0 / m, (-(1.0 + s.s) * m.ln()).exp(), a);
        assert!(at(m0) <= 1e-9);
        assert!(at(m0 * 0.5) > 0.0);
        // an independent evaluation of the crossing via logs
        let x = m0.ln();
        let direct = 0.5 * x + s.d as f64 * s.tau * (1.0 - (-s.s * x).exp()).ln();
        assert!(direct >= -1e-9);
    }

    #[test]
    fn sequences_are_monotone() {
        let s = KamSchedule::defaults(0.2, 1.5);
        let a = 2.0;
        let m = s.m_value(a);
        let mut prev = (0.0, f64::INFINITY);
        for j in 1..6 {
            let l = s.l(j, m);
            let le = s.ln_eps(l, a);
            assert!(l > prev.0);
            assert!(le < (1.0 + s.s / 2.0) * prev.1.min(0.0) || j == 1);
            prev = (l, le);
        }
    }
}
