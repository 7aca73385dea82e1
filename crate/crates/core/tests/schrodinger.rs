use std::f64::consts::PI;

use kamred::cocycle::{is_uniformly_hyperbolic, rotation_number, Frequency};
use kamred::schrodinger::tridiag::{jacobi_eigenvalues, periodic_bands, sturm_count, truncated_diagonal};
use kamred::schrodinger::*;
use kamred::torus_fourier::Mode;
use kamred::Error;
use nalgebra::{DMatrix, Vector2};

fn golden() -> Frequency {
    Frequency::golden()
}

fn alpha() -> f64 {
    golden().alpha()[0]
}

fn free() -> Potential {
    Potential::zero(1)
}

// J_n(x) for n = 0..=n_max by Miller's backward recursion, normalized with
// J_0 + 2 Σ J_{2k} = 1.
fn bessel_j(x: f64, n_max: usize) -> Vec<f64> {
    let start = n_max.max(x as usize) + 80 + x as usize;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for n in (1..=start).rev() {
        j[n - 1] = 2.0 * n as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in j.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.truncate(n_max + 1);
    j.iter().map(|v| v / norm).collect()
}

#[test]
fn cocycle_of_free_laplacian_rotates_by_phi() {
    for phi in [0.05, 0.2, 0.37] {
        let e = 2.0 * (2.0 * PI * phi).cos();
        let c = schrodinger_cocycle(&free(), &golden(), e).unwrap();
        let rho = rotation_number(&c, 100_000).unwrap();
        assert!((fold_rho(rho) - phi).abs() < 1e-3, "phi {phi}: rho {rho}");
    }
    let c = schrodinger_cocycle(&free(), &golden(), 3.0).unwrap();
    assert!(c.evaluate(&[0.3]).trace().abs() > 2.0);
    assert!(is_uniformly_hyperbolic(&c).unwrap());
}

#[test]
fn cocycle_determinant_is_exactly_one() {
    let v = Potential::cosine_sum(1, &[(Mode(vec![1]), 1.3), (Mode(vec![3]), -0.4)], 0.7).unwrap();
    let c = schrodinger_cocycle(&v, &golden(), 0.37).unwrap();
    for k in 0..100 {
        assert_eq!(c.evaluate(&[k as f64 * 0.0137]).determinant(), 1.0);
    }
}

#[test]
fn iterate_reproduces_three_term_recursion() {
    let v = Potential::cosine_sum(1, &[(Mode(vec![1]), 1.0), (Mode(vec![2]), 0.5)], 0.8).unwrap();
    let freq = golden();
    let (e, theta) = (0.4, 0.123);
    let c = schrodinger_cocycle(&v, &freq, e).unwrap();
    let (mut prev, mut cur) = (0.3, 1.0);
    for n in 0..60usize {
        let pot = 0.8 * ((2.0 * PI * (theta + n as f64 * alpha())).cos() + 0.5 * (4.0 * PI * (theta + n as f64 * alpha())).cos());
        let next = (e - pot) * cur - prev;
        (prev, cur) = (cur, next);
        let m = c.iterate(&[theta], n as i64 + 1);
        let x = m * Vector2::new(1.0, 0.3);
        let scale = cur.abs().max(1.0);
        assert!((x[0] - cur).abs() <= 1e-10 * scale && (x[1] - prev).abs() <= 1e-10 * scale, "n = {n}");
    }
}

#[test]
fn potential_coefficients_are_conjugate_symmetric() {
    let v = Potential::new(
        2,
        vec![
            Harmonic { mode: Mode(vec![1, 0]), cos: 0.7, sin: -0.2 },
            Harmonic { mode: Mode(vec![1, -2]), cos: 0.1, sin: 0.4 },
            Harmonic { mode: Mode(vec![0, 0]), cos: 0.25, sin: 0.0 },
        ],
        1.5,
    )
    .unwrap();
    let cs = v.coefficients();
    for (m, c) in &cs {
        let (_, d) = cs.iter().find(|(n, _)| *n == m.neg()).unwrap();
        assert!((c - d.conj()).norm() < 1e-15);
    }
    let theta = [0.31, 0.77];
    let series: f64 = cs
        .iter()
        .map(|(m, c)| (c * num_complex::Complex64::from_polar(1.0, 2.0 * PI * m.dot(&theta))).re)
        .sum();
    assert!((series - v.value(&theta)).abs() < 1e-14);
    assert!(v.sup_bound() >= v.value(&theta).abs());
}

#[test]
fn ids_limits_and_free_closed_form() {
    let v = Potential::amo(0.05);
    assert!(ids(&v, &golden(), -2.0 - 4.0 * 0.05 - 0.5, 2000).unwrap() < 1e-3);
    assert!(ids(&v, &golden(), 2.0 + 4.0 * 0.05 + 0.5, 2000).unwrap() > 1.0 - 1e-3);
    for k in 1..20 {
        let e = -2.0 + 4.0 * k as f64 / 20.0;
        let exact = 1.0 - (e / 2.0).acos() / PI;
        let got = ids(&free(), &golden(), e, 100_000).unwrap();
        assert!((got - exact).abs() < 1e-3, "E {e}: {got} vs {exact}");
    }
    assert!(matches!(ids(&free(), &golden(), 0.0, 10), Err(Error::InvalidInput(_))));
}

#[test]
fn sturm_count_matches_dense_eigenvalues() {
    let diag: Vec<f64> = (0..40).map(|k| (k as f64 * 1.7).sin()).collect();
    let n = diag.len();
    let h = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    });
    let mut dense: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    dense.sort_by(|a, b| a.total_cmp(b));
    let lapack = jacobi_eigenvalues(&diag).unwrap();
    for (a, b) in dense.iter().zip(&lapack) {
        assert!((a - b).abs() < 1e-12);
    }
    for k in 0..50 {
        let e = -3.5 + 7.0 * k as f64 / 49.0;
        assert_eq!(sturm_count(&diag, e), dense.iter().filter(|&&x| x < e).count());
    }
}

#[test]
fn ids_matches_eigenvalue_counting() {
    let v = Potential::amo(0.05);
    let freq = golden();
    let eigs = truncated_spectrum(&v, &freq, &[0.0], 2000).unwrap();
    let diag = truncated_diagonal(&v, &freq, &[0.0], 0, 2000);
    let mut last = 0.0;
    for k in 0..20 {
        let e = -2.1 + 4.2 * (k as f64 + 0.5) / 20.0;
        let n_rot = ids(&v, &freq, e, 100_000).unwrap();
        let n_count = count_fraction(&eigs, e);
        assert_eq!((n_count * 2000.0).round() as usize, sturm_count(&diag, e));
        assert!((n_rot - n_count).abs() <= 2e-3, "E {e}: {n_rot} vs {n_count}");
        assert!(n_rot >= last - 2e-3);
        last = n_rot;
    }
}

#[test]
fn free_scan_has_no_interior_gaps() {
    let grid: Vec<f64> = (0..61).map(|k| -2.6 + 5.2 * k as f64 / 60.0).collect();
    let scan = scan_spectrum(&free(), &golden(), &grid, 20_000).unwrap();
    assert!(scan.gaps.is_empty());
    for s in &scan.samples {
        if s.e.abs() > 2.05 {
            assert!(s.hyperbolic, "E {} should be hyperbolic", s.e);
            assert_eq!(s.gap_label, Some(vec![0]));
        }
        if s.e.abs() < 1.95 {
            assert!(!s.hyperbolic, "E {} should be in the spectrum", s.e);
        }
        assert!((s.ids - (1.0 - 2.0 * s.rho)).abs() < 1e-15);
    }
    assert!(matches!(scan_spectrum(&free(), &golden(), &[1.0, 0.0], 1000), Err(Error::InvalidInput(_))));
}

#[test]
fn amo_principal_gaps_are_labelled() {
    let v = Potential::amo(0.05);
    let freq = golden();
    let mut grid: Vec<f64> = (0..41).map(|k| -0.9 + 0.4 * k as f64 / 40.0).collect();
    grid.extend((0..41).map(|k| 0.5 + 0.4 * k as f64 / 40.0));
    let scan = scan_spectrum(&v, &freq, &grid, 100_000).unwrap();
    let eigs = truncated_spectrum(&v, &freq, &[0.0], 2000).unwrap();
    let labels: Vec<Option<Vec<i32>>> = scan.gaps.iter().map(|g| g.label.clone()).collect();
    assert!(labels.contains(&Some(vec![1])) && labels.contains(&Some(vec![-1])), "{labels:?}");
    for g in &scan.gaps {
        let m = g.label.as_ref().unwrap()[0] as f64;
        let members = &scan.samples[g.first..=g.last];
        let n0 = members[0].ids;
        for s in members {
            assert!((s.ids - n0).abs() <= 2e-3);
            assert!(linalg_dist(2.0 * s.rho - m * alpha()) <= 1e-4);
        }
        // The IDS on the gap is the filling of the truncated operator there.
        let mid = 0.5 * (g.lower + g.upper);
        assert!((count_fraction(&eigs, mid) - n0).abs() < 2e-3);
        if m == -1.0 {
            assert!((n0 - alpha()).abs() < 2e-3);
        }
    }
}

fn linalg_dist(x: f64) -> f64 {
    (x - x.round()).abs()
}

#[test]
fn periodic_band_edges_solve_the_discriminant() {
    let v = Potential::amo(0.3);
    let (p, q) = (5u64, 8u64);
    let diag: Vec<f64> = (0..q).map(|n| v.value(&[((n * p) % q) as f64 / q as f64 + 0.01])).collect();
    let bands = periodic_bands(&diag).unwrap();
    assert_eq!(bands.len(), q as usize);
    let discriminant = |e: f64| {
        let (mut a, mut b) = (Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0));
        for d in &diag {
            a = Vector2::new((e - d) * a[0] - a[1], a[0]);
            b = Vector2::new((e - d) * b[0] - b[1], b[0]);
        }
        a[0] + b[1]
    };
    for (lo, hi) in &bands {
        assert!(lo <= hi);
        for e in [*lo, *hi] {
            assert!((discriminant(e).abs() - 2.0).abs() < 1e-8, "edge {e}: {}", discriminant(e));
        }
        assert!(discriminant(0.5 * (lo + hi)).abs() <= 2.0 + 1e-9);
    }
    for w in bands.windows(2) {
        if w[1].0 > w[0].1 + 1e-9 {
            assert!(discriminant(0.5 * (w[0].1 + w[1].0)).abs() > 2.0);
        }
    }
}

#[test]
fn approximant_gap_lengths_decay_with_label() {
    let gaps = approximant_gaps(&Potential::amo(0.05), &golden(), 1600).unwrap();
    let width = |m: i64| gaps.iter().filter(|g| g.label.abs() == m).map(|g| g.width()).fold(0.0, f64::max);
    let widths: Vec<f64> = (1..=5).map(width).collect();
    for w in widths.windows(2) {
        assert!(w[0] >= w[1], "{widths:?}");
    }
    let principal = gaps.iter().find(|g| g.label == -1).unwrap();
    assert!((principal.ids - alpha()).abs() < 1e-5);
}

#[test]
fn homogeneity_of_interval_and_cantor_set() {
    let ind = SpectrumIndicator::from_intervals(&[(0.0, 1.0)], -0.1, 1.1, 1e-4).unwrap();
    let r = homogeneity(&ind, 1e-3).unwrap();
    assert!((r.nu - 1.0).abs() <= 1e-3, "{}", r.nu);
    assert_eq!(r.eps_values.len(), EPS_SWEEP);

    let cantor = SpectrumIndicator::from_intervals(&cantor_intervals(10), -0.05, 1.05, 1e-6).unwrap();
    // Windows [0, 3^{-j}] around the left endpoint carry (2/3)^10 of their
    // length, so the infimum is at most that.
    let bound = (2.0f64 / 3.0).powi(10);
    for res in [1e-2, 1e-3, 1e-4, 1e-5] {
        let nu = homogeneity(&cantor, res).unwrap().nu;
        assert!(nu <= bound + 1e-3 && nu <= 0.1, "res {res}: {nu}");
    }

    let empty = SpectrumIndicator::from_fn(0.0, 1.0, 1e-3, |_| false).unwrap();
    assert!(matches!(homogeneity(&empty, 1e-2), Err(Error::EmptySpectrum)));
    assert!(matches!(homogeneity(&ind, 1e-6), Err(Error::InvalidInput(_))));
}

#[test]
fn homogeneity_of_amo_approximant_is_positive() {
    let a = periodic_approximant(&Potential::amo(0.05), &golden(), 1600, 2).unwrap();
    let ind = SpectrumIndicator::from_intervals(&a.bands, -2.2, 2.2, 1e-4).unwrap();
    let r = homogeneity(&ind, 1e-3).unwrap();
    assert!(r.nu > 0.3 && r.nu < 1.0, "{}", r.nu);
    assert!((r.measure - 3.8).abs() < 0.02, "measure {}", r.measure);
}

#[test]
fn holder_exponent_near_one_half() {
    let eps: Vec<f64> = (0..7).map(|k| 10f64.powf(-4.0 + 0.5 * k as f64)).collect();
    let mut energies: Vec<f64> = (0..41).map(|k| -2.0 + 4.0 * k as f64 / 40.0).collect();
    let free_fit = holder_exponent(&free(), &golden(), &energies, &eps, 100_000).unwrap();
    assert!((free_fit.exponent - 0.5).abs() < 0.05, "{}", free_fit.exponent);
    let v = Potential::amo(0.05);
    let eigs = truncated_spectrum(&v, &golden(), &[0.0], 2000).unwrap();
    energies.extend([eigs[0], eigs[eigs.len() - 1]]);
    let fit = holder_exponent(&v, &golden(), &energies, &eps, 100_000).unwrap();
    assert!(fit.exponent >= 0.45, "{}", fit.exponent);
}

#[test]
fn free_transport_matches_bessel_oracle() {
    let t = 50.0;
    let r = transport_velocity(&free(), &golden(), &[0.0], 500, &[25.0, t], &InitialState::Site { n: 0 }).unwrap();
    let j = bessel_j(2.0 * t, 400);
    let second: f64 = 2.0 * (1..=400).map(|n| (n * n) as f64 * j[n] * j[n]).sum::<f64>();
    let p = &r.points[1];
    assert!((p.second_moment - second / (t * t)).abs() < 1e-9, "{} vs {}", p.second_moment, second / (t * t));
    assert!((p.second_moment - 2.0).abs() < 0.04);
    for p in &r.points {
        assert!(p.velocity.abs() < 1e-10 && p.time_avg_velocity.abs() < 1e-10);
        assert!(p.norm_error < 1e-12);
        assert!((p.speed - p.second_moment.sqrt()).abs() < 1e-10);
        assert!(p.velocity.abs() <= r.velocity_bound + 1e-9);
    }
    assert!(r.q_block.hermitian_defect < 1e-10);
    // Column 0 of the block is part of Q_T δ₀.
    let col: f64 = (-32..32).map(|a| {
        let (x, y) = r.q_block.get(a, 0);
        x * x + y * y
    }).sum();
    assert!(col <= p_speed_sq(&r) + 1e-9);
}

fn p_speed_sq(r: &TransportResult) -> f64 {
    let s = r.points.last().unwrap().speed;
    s * s
}

#[test]
fn wavepacket_moves_with_group_velocity() {
    let xi = -0.125;
    let init = InitialState::Wavepacket { center: 0.0, width: 20.0, momentum: xi };
    let r = transport_velocity(&free(), &golden(), &[0.0], 600, &[100.0, 150.0], &init).unwrap();
    let group = -2.0 * (2.0 * PI * xi).sin();
    for p in &r.points {
        assert!((p.velocity - group).abs() <= 0.02 * group.abs(), "{} vs {group}", p.velocity);
        assert!(p.identity_residual < 1e-6, "{}", p.identity_residual);
        assert!((p.time_avg_velocity - p.velocity).abs() < 1e-6);
        assert!(p.norm_error < 1e-12);
    }
}

#[test]
fn transport_rejects_bad_input_and_detects_boundary_mass() {
    let f = golden();
    let site = InitialState::Site { n: 0 };
    assert!(matches!(transport_velocity(&free(), &f, &[0.0], 400, &[10.0], &site), Err(Error::InvalidInput(_))));
    assert!(matches!(transport_velocity(&free(), &f, &[0.0], 500, &[200.0], &site), Err(Error::InvalidInput(_))));
    let edge = InitialState::Site { n: 495 };
    assert!(matches!(
        transport_velocity(&free(), &f, &[0.0], 500, &[20.0], &edge),
        Err(Error::BoundaryContamination { .. })
    ));
}

#[test]
fn amo_transport_speed_settles() {
    let v = Potential::amo(0.05);
    let r = transport_velocity(&v, &golden(), &[0.0], 600, &[75.0, 150.0], &InitialState::Site { n: 0 }).unwrap();
    let (a, b) = (r.points[0].speed, r.points[1].speed);
    assert!(b > 0.1);
    assert!((a - b).abs() / b < 0.05, "{a} {b}");
    for p in &r.points {
        assert!(p.time_avg_velocity.abs() <= r.velocity_bound + 1e-9);
        assert!(p.norm_error < 1e-12);
    }
}
