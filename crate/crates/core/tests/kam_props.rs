mod common;

use kamred::cocycle::{rotation_estimate, Cocycle, ConstantCocycle, Frequency};
use kamred::kam::*;
use kamred::linalg::{self, dist_to_z, rotation, Mat2};
use kamred::torus_fourier::{AlgebraTag, FourierMap, Mode, Period};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn golden() -> Frequency {
    Frequency::golden()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonresonant_step_conjugation_identity(
        seed in 0u64..10_000,
        phi in 0.05f64..0.45,
        hyper in any::<bool>(),
        log_eps in -12.0f64..-7.0,
    ) {
        let freq = golden();
        let sched = KamSchedule::defaults(0.2, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = 10f64.powf(log_eps);
        let a = if hyper { Mat2::new(1.5, 0.4, 0.5, (1.0 + 0.2) / 1.5) } else { rotation(phi) };
        let ac = ConstantCocycle::new(a).unwrap();
        let f = normalize(&random_real_map(&mut rng, 1, 4, 6), 0.5, eps);
        match nonresonant_step(&ac, &f, &freq, 0.5, 0.25, eps, &sched) {
            Ok(out) => {
                prop_assert!(out.estimates.identity_residual <= 1e-9);
                prop_assert_eq!(out.b.degree(), vec![0]);
            }
            // a mode of f hitting a small divisor is a legitimate refusal
            Err(kamred::Error::SmallDivisor { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn rotation_bookkeeping_across_steps(seed in 0u64..10_000, m in 1i32..=3, resonant in any::<bool>()) {
        let freq = golden();
        let sched = KamSchedule::defaults(0.2, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = freq.alpha()[0];
        let phi = if resonant { linalg::mod1(0.5 * m as f64 * alpha) } else { 0.1 };
        let a = ConstantCocycle::new(rotation(phi)).unwrap();
        let eps = 1e-6;
        let f = normalize(&random_real_map(&mut rng, 1, 3, 4), 0.5, eps);
        let (out, delta) = if resonant {
            let out = resonant_step(&a, &f, &Mode(vec![m]), &freq, 0.5, 0.25, eps, &sched).unwrap();
            (out, -0.5 * m as f64 * alpha)
        } else {
            (nonresonant_step(&a, &f, &freq, 0.5, 0.25, eps, &sched).unwrap(), 0.0)
        };
        let before = rotation_estimate(&Cocycle::perturbed(freq.clone(), a, f).unwrap(), 100_000).rho;
        let after = rotation_estimate(&Cocycle::perturbed(freq.clone(), out.a_plus, out.f_plus.clone()).unwrap(), 100_000).rho;
        let d = dist_to_z(after - before - delta);
        prop_assert!(d <= 2e-3, "before {before}, after {after}, delta {delta}");
    }

    #[test]
    fn schedule_sequences_are_monotone(
        sigma in 0.05f64..0.16,
        extra_d in 0u32..10,
        s_frac in 0.1f64..1.0,
        tau in 1.05f64..3.0,
        a_norm in 1.0f64..5.0,
    ) {
        let d = (2.0 / sigma).floor() as u32 + 1 + extra_d;
        let s = s_frac / (6.0 * d as f64 * tau + 3.0);
        let k = ((d as f64 + 2.0) * tau + 2.0).floor() as u32 + 1;
        let sched = KamSchedule {
            sigma, d, d_tilde: 4.0, c: 1e-3, s, m: None, tau, kappa: 0.1,
            k, k0: 0, j_max: 8,
        };
        sched.validate().unwrap();
        let m = sched.m_value(a_norm);
        for j in 1..6 {
            let (l0, l1) = (sched.l(j, m), sched.l(j + 1, m));
            prop_assert!(l1 > l0);
            let (e0, e1) = (sched.ln_eps(l0, a_norm), sched.ln_eps(l1, a_norm));
            prop_assert!(e1 < (1.0 + s / 2.0) * e0);
        }
    }

    #[test]
    fn divisors_respect_nonresonance(
        phi in 0.0f64..1.0,
        log_eps in -40.0f64..-10.0,
        width in 0.2f64..0.8,
        seed in 0u64..1000,
    ) {
        let freq = golden();
        let sigma = 1.0 / 7.0;
        let eps = 10f64.powf(log_eps);
        let n = 2.0 * eps.ln().abs() / width;
        let a = ConstantCocycle::new(rotation(phi)).unwrap();
        let threshold = eps.powf(sigma).min(eps.powf(sigma / 2.0));
        let site = find_resonance(oriented_rho(&a), &freq, n, eps, sigma).unwrap();
        // α itself must be non-resonant at this scale for |z−1| to be bounded
        let diophantine_floor = freq.kappa() / n.powf(freq.tau());
        prop_assume!(site.is_none() && threshold <= diophantine_floor);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_real_map(&mut rng, 1, 6, n.floor().min(200.0) as i32);
        let sol = solve_cohomological_detailed(&a, &g, &freq).unwrap();
        prop_assert!(sol.min_divisor >= threshold * (1.0 - 1e-6));
    }

    #[test]
    fn conjugation_identity_through_resonant_steps(seed in 0u64..10_000, m in 1i32..=2) {
        let freq = golden();
        let sched = KamSchedule::defaults(0.2, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = 0.5 * m as f64 * freq.alpha()[0] + 1e-4;
        let a = ConstantCocycle::new(rotation(phi)).unwrap();
        let eps = 1e-7;
        let f = normalize(&random_real_map(&mut rng, 1, 3, 5), 0.5, eps);
        let out = resonant_step(&a, &f, &Mode(vec![m]), &freq, 0.5, 0.25, eps, &sched).unwrap();
        prop_assert!(out.estimates.identity_residual <= 1e-9 * 2.0);
        prop_assert_eq!(out.b.degree(), vec![-m]);
        prop_assert_eq!(out.degree_increment(), vec![m]);
    }
}

#[test]
fn zero_map_has_no_divisors() {
    let a = ConstantCocycle::new(rotation(0.2)).unwrap();
    let g = FourierMap::zero(1, Period::Standard, AlgebraTag::Sl2R);
    let sol = solve_cohomological_detailed(&a, &g, &golden()).unwrap();
    assert!(sol.min_divisor.is_infinite());
}
