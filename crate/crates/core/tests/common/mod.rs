#![allow(dead_code)]

use kamred::linalg::{CMat2, Mat2};
use kamred::torus_fourier::{AlgebraTag, FourierMap, Mode, Period};
use num_complex::Complex64;
use rand::Rng;

pub fn traceless(rng: &mut impl Rng) -> Mat2 {
    let (x, y, z): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    Mat2::new(x, y, z, -x)
}

/// Real sl(2,ℝ) map `Σ X_n cos 2π⟨n,θ⟩ + Y_n sin 2π⟨n,θ⟩` over `count`
/// random nonzero modes with `|n_i| ≤ max`.
pub fn random_real_map(rng: &mut impl Rng, dim: usize, count: usize, max: i32) -> FourierMap {
    let mut f = FourierMap::zero(dim, Period::Standard, AlgebraTag::Sl2R);
    let mut used = 0;
    while used < count {
        let n: Vec<i32> = (0..dim).map(|_| rng.gen_range(-max..=max)).collect();
        let m = Mode(n.clone());
        if n.iter().all(|&x| x == 0) || f.coefficient(&m).norm() > 0.0 || f.coefficient(&m.neg()).norm() > 0.0 {
            continue;
        }
        let x = traceless(rng);
        let y = traceless(rng);
        let half = Complex64::new(0.5, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let c: CMat2 = (x.map(|v| Complex64::new(v, 0.0)) - y.map(|v| Complex64::new(v, 0.0)) * i) * half;
        let cc = c.map(|z| z.conj());
        f.insert(m.neg(), cc);
        f.insert(m, c);
        used += 1;
    }
    f.prune();
    f
}

/// Rescales `f` so that `|f|_r = target`.
pub fn normalize(f: &FourierMap, r: f64, target: f64) -> FourierMap {
    let s = target / f.strip_norm(r).unwrap();
    f.scale(Complex64::new(s, 0.0))
}

pub fn sl2_real(a: f64, b: f64, c: f64) -> Mat2 {
    // completes [[a, b], [c, ·]] to determinant one
    Mat2::new(a, b, c, (1.0 + b * c) / a)
}
