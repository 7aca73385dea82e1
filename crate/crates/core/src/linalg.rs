//! Closed-form 2×2 linear algebra: norms, exponential and logarithm of
//! traceless matrices, Schur triangularization and the sl(2,ℝ) ≅ su(1,1)
//! isomorphism.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<f64>;
pub type CMat2 = Matrix2<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Rotation by `phi` turns: `[[cos 2πφ, −sin 2πφ], [sin 2πφ, cos 2πφ]]`.
pub fn rotation(phi: f64) -> Mat2 {
    let (s, c) = (2.0 * PI * phi).sin_cos();
    Mat2::new(c, -s, s, c)
}

pub fn to_complex(m: &Mat2) -> CMat2 {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMat2) -> Mat2 {
    m.map(|z| z.re)
}

pub fn max_imag(m: &CMat2) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs()))
}

/// Largest singular value.
pub fn op_norm_c(m: &CMat2) -> f64 {
    let fro2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
    ((fro2 + disc.sqrt()) / 2.0).sqrt()
}

pub fn op_norm(m: &Mat2) -> f64 {
    let fro2 = m.iter().map(|x| x * x).sum::<f64>();
    let det = m.determinant().abs();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
    ((fro2 + disc.sqrt()) / 2.0).sqrt()
}

pub fn det_c(m: &CMat2) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

pub fn inverse_c(m: &CMat2) -> CMat2 {
    let d = det_c(m);
    CMat2::new(m[(1, 1)] / d, -m[(0, 1)] / d, -m[(1, 0)] / d, m[(0, 0)] / d)
}

/// Inverse of a matrix with determinant one (adjugate).
pub fn inverse_sl2(m: &Mat2) -> Mat2 {
    Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

// cosh(s) and sinh(s)/s as functions of q = s², accurate for small |q|.
fn cosh_sinhc(q: Complex64) -> (Complex64, Complex64) {
    if q.norm() < 1e-6 {
        let c = 1.0 + q / 2.0 + q * q / 24.0;
        let sc = 1.0 + q / 6.0 + q * q / 120.0;
        (c, sc)
    } else {
        let s = q.sqrt();
        (s.cosh(), s.sinh() / s)
    }
}

/// `exp(X)` for traceless complex `X`, using `X² = −det(X)·Id`.
pub fn expm_traceless_c(x: &CMat2) -> CMat2 {
    let q = -det_c(x);
    let (c, sc) = cosh_sinhc(q);
    CMat2::identity() * c + x * sc
}

/// `exp(X)` for traceless real `X`.
pub fn expm_traceless(x: &Mat2) -> Mat2 {
    let q = x[(0, 0)] * x[(0, 0)] + x[(0, 1)] * x[(1, 0)];
    let (c, sc) = if q.abs() < 1e-6 {
        (1.0 + q / 2.0 + q * q / 24.0, 1.0 + q / 6.0 + q * q / 120.0)
    } else if q > 0.0 {
        let s = q.sqrt();
        (s.cosh(), s.sinh() / s)
    } else {
        let s = (-q).sqrt();
        (s.cos(), s.sin() / s)
    };
    Mat2::identity() * c + x * sc
}

/// Real logarithm of `A ∈ SL(2,ℝ)`; the result is traceless. Matrices with
/// trace ≤ −2 have no real logarithm in general and are refused.
pub fn logm_sl2(a: &Mat2) -> Result<Mat2> {
    let half_tr = 0.5 * a.trace();
    if half_tr <= -1.0 + 5e-13 {
        return Err(Error::LogBranch { trace: a.trace() });
    }
    let d = half_tr - 1.0;
    // s / sinh(s) with cosh(s) = half_tr
    let h = if d.abs() < 1e-8 {
        1.0 - d / 3.0
    } else if half_tr > 1.0 {
        let s = half_tr.acosh();
        s / s.sinh()
    } else {
        let s = half_tr.acos();
        s / s.sin()
    };
    let mut x = (a - Mat2::identity() * half_tr) * h;
    // remove trace drift from rounding
    let t = 0.5 * (x[(0, 0)] + x[(1, 1)]);
    x[(0, 0)] -= t;
    x[(1, 1)] -= t;
    Ok(x)
}

/// Unitary triangularization `A = U·T·U^H` with `T = [[a, p], [0, 1/a]]`.
#[derive(Debug, Clone, Copy)]
pub struct Schur {
    pub u: CMat2,
    pub t: CMat2,
}

impl Schur {
    pub fn eigenvalue(&self) -> Complex64 {
        self.t[(0, 0)]
    }

    pub fn offdiag(&self) -> Complex64 {
        self.t[(0, 1)]
    }

    pub fn to_schur_basis(&self, x: &CMat2) -> CMat2 {
        self.u.adjoint() * x * self.u
    }

    pub fn from_schur_basis(&self, x: &CMat2) -> CMat2 {
        self.u * x * self.u.adjoint()
    }
}

/// Schur form of a real 2×2 matrix for a chosen eigenvalue `a`.
pub fn schur_with(a_mat: &Mat2, eig: Complex64) -> Schur {
    let m = to_complex(a_mat);
    let c1 = nalgebra::Vector2::new(m[(0, 1)], eig - m[(0, 0)]);
    let c2 = nalgebra::Vector2::new(eig - m[(1, 1)], m[(1, 0)]);
    let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
    let v = if v.norm() < 1e-300 {
        nalgebra::Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        v / Complex64::new(v.norm(), 0.0)
    };
    let w = nalgebra::Vector2::new(-v[1].conj(), v[0].conj());
    let u = CMat2::new(v[0], w[0], v[1], w[1]);
    let mut t = u.adjoint() * m * u;
    t[(1, 0)] = Complex64::new(0.0, 0.0);
    Schur { u, t }
}

/// The fixed matrix `M = (1/(1+i))·[[1, −i], [1, i]]` conjugating sl(2,ℝ) onto su(1,1).
pub fn su11_m() -> CMat2 {
    let k = Complex64::new(1.0, 0.0) / Complex64::new(1.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    CMat2::new(one, -I, one, I) * k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su11Direction {
    ToSu11,
    ToSl2R,
}

/// `X ↦ M X M⁻¹` (or the inverse map).
pub fn su11_transform(x: &CMat2, direction: Su11Direction) -> CMat2 {
    let m = su11_m();
    let m_inv = inverse_c(&m);
    match direction {
        Su11Direction::ToSu11 => m * x * m_inv,
        Su11Direction::ToSl2R => m_inv * x * m,
    }
}

/// An SL(2) element `c·I + W` with traceless `W`, kept in this split form so
/// that products of near-identity factors retain `W` to relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearId {
    pub c: f64,
    pub w: Mat2,
}

impl NearId {
    pub fn identity() -> Self {
        NearId { c: 1.0, w: Mat2::zeros() }
    }

    /// `exp(X)` for traceless `X`.
    pub fn exp(x: &Mat2) -> Self {
        let q = x[(0, 0)] * x[(0, 0)] + x[(0, 1)] * x[(1, 0)];
        let (c, sc) = if q.abs() < 1e-6 {
            (1.0 + q / 2.0 + q * q / 24.0, 1.0 + q / 6.0 + q * q / 120.0)
        } else if q > 0.0 {
            let s = q.sqrt();
            (s.cosh(), s.sinh() / s)
        } else {
            let s = (-q).sqrt();
            (s.cos(), s.sin() / s)
        };
        NearId { c, w: x * sc }
    }

    pub fn from_matrix(m: &Mat2) -> Self {
        let c = 0.5 * m.trace();
        NearId { c, w: m - Mat2::identity() * c }
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2::identity() * self.c + self.w
    }

    // (c₁ + W₁)(c₂ + W₂) = c₁c₂ + ½tr(W₁W₂) + c₁W₂ + c₂W₁ + ½[W₁, W₂]
    pub fn mul(&self, o: &NearId) -> NearId {
        let p = self.w * o.w;
        let q = o.w * self.w;
        NearId {
            c: self.c * o.c + 0.5 * p.trace(),
            w: o.w * self.c + self.w * o.c + (p - q) * 0.5,
        }
    }

    /// Real logarithm; accurate to relative precision in `W` when `c > 0`.
    pub fn log(&self) -> Result<Mat2> {
        if self.c <= 0.5 {
            return logm_sl2(&self.matrix());
        }
        let w = &self.w;
        // sinh² s = −det W (elliptic when negative)
        let q = w[(0, 0)] * w[(0, 0)] + w[(0, 1)] * w[(1, 0)];
        let h = if q.abs() < 1e-6 {
            1.0 - q / 6.0 + 3.0 * q * q / 40.0
        } else if q > 0.0 {
            let r = q.sqrt();
            r.asinh() / r
        } else {
            let r = (-q).sqrt();
            r.asin() / r
        };
        let mut x = w * h;
        let t = 0.5 * (x[(0, 0)] + x[(1, 1)]);
        x[(0, 0)] -= t;
        x[(1, 1)] -= t;
        Ok(x)
    }
}

/// `log(exp(X₁)·exp(X₂)···)` with relative accuracy for small factors.
pub fn log_of_exp_product(xs: &[Mat2]) -> Result<Mat2> {
    xs.iter()
        .fold(NearId::identity(), |acc, x| acc.mul(&NearId::exp(x)))
        .log()
}

/// Real `P` with `det P = 1` and `P⁻¹AP = R_φ` for elliptic `A`, where `φ`
/// is the oriented angle of `A` in turns.
pub fn rotation_normal_form(a: &Mat2) -> Result<(Mat2, f64)> {
    let c = 0.5 * a.trace();
    if c.abs() >= 1.0 - 1e-14 {
        return Err(Error::InvalidInput(format!(
            "matrix with half-trace {c} is not elliptic"
        )));
    }
    let s = (1.0 - c * c).sqrt() * (a[(1, 0)] - a[(0, 1)]).signum();
    let phi = mod1(s.atan2(c) / (2.0 * PI));
    let j = (a - Mat2::identity() * c) / s;
    // P = [p, Jp] conjugates J to the standard generator; the choice of p
    // only changes P by a rotation on the right
    let p1 = nalgebra::Vector2::new(1.0, 0.0);
    let p2 = j * p1;
    let p = Mat2::new(p1[0], p2[0], p1[1], p2[1]);
    let p = p / p.determinant().sqrt();
    Ok((p, phi))
}

/// Eigenbasis `S` (unit columns) with `S⁻¹AS = diag(a, b)`; for elliptic
/// `A` the columns are complex conjugate, for hyperbolic `A` they are real.
/// Fails for parabolic matrices.
pub fn eigenbasis(a: &Mat2) -> Result<(CMat2, CMat2, Complex64, Complex64)> {
    let half = 0.5 * a.trace();
    let disc = half * half - 1.0;
    if disc.abs() < 1e-12 {
        return Err(Error::InvalidInput("parabolic matrix is not diagonalizable".into()));
    }
    let root = Complex64::new(disc, 0.0).sqrt();
    let l1 = Complex64::new(half, 0.0) + root;
    let l2 = Complex64::new(half, 0.0) - root;
    let vec_for = |l: Complex64| {
        let m = to_complex(a);
        let c1 = nalgebra::Vector2::new(m[(0, 1)], l - m[(0, 0)]);
        let c2 = nalgebra::Vector2::new(l - m[(1, 1)], m[(1, 0)]);
        let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
        v / Complex64::new(v.norm(), 0.0)
    };
    let v1 = vec_for(l1);
    let v2 = if disc < 0.0 { v1.map(|z| z.conj()) } else { vec_for(l2) };
    let s = CMat2::new(v1[0], v2[0], v1[1], v2[1]);
    Ok((s, inverse_c(&s), l1, l2))
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_z(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Representative of `x` mod 1 in `[0, 1)`.
pub fn mod1(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(a: f64, b: f64, c: f64, d: f64) -> CMat2 {
        to_complex(&Mat2::new(a, b, c, d))
    }

    #[test]
    fn exp_log_round_trip() {
        for x in [
            Mat2::new(0.3, 0.1, -0.7, -0.3),
            Mat2::new(0.0, 1e-9, 0.0, 0.0),
            Mat2::new(1.2, 0.4, 0.5, -1.2),
        ] {
            let a = expm_traceless(&x);
            assert!((a.determinant() - 1.0).abs() < 1e-13);
            let back = logm_sl2(&a).unwrap();
            assert!((back - x).norm() < 1e-12, "{back} vs {x}");
        }
    }

    #[test]
    fn complex_exp_matches_real() {
        let x = Mat2::new(0.2, -0.9, 0.4, -0.2);
        let a = expm_traceless(&x);
        let b = expm_traceless_c(&to_complex(&x));
        assert!((to_complex(&a) - b).norm() < 1e-14);
    }

    #[test]
    fn log_refuses_negative_trace() {
        assert!(matches!(
            logm_sl2(&Mat2::new(-1.0, 0.0, 0.0, -1.0)),
            Err(Error::LogBranch { .. })
        ));
    }

    #[test]
    fn rotation_log_is_generator() {
        let x = logm_sl2(&rotation(0.1)).unwrap();
        let j = Mat2::new(0.0, -1.0, 1.0, 0.0) * (2.0 * PI * 0.1);
        assert!((x - j).norm() < 1e-13);
    }

    #[test]
    fn op_norm_of_diag() {
        assert!((op_norm(&Mat2::new(2.0, 0.0, 0.0, 0.5)) - 2.0).abs() < 1e-14);
        assert!((op_norm_c(&cm(0.0, 3.0, 0.0, 0.0)) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn su11_formula() {
        let (x, y, z) = (0.3, -1.1, 0.7);
        let img = su11_transform(&cm(x, y + z, y - z, -x), Su11Direction::ToSu11);
        let expect = CMat2::new(
            I * z,
            Complex64::new(x, -y),
            Complex64::new(x, y),
            -I * z,
        );
        assert!((img - expect).norm() < 1e-14);
        let back = su11_transform(&img, Su11Direction::ToSl2R);
        assert!((back - cm(x, y + z, y - z, -x)).norm() < 1e-14);
        let id = su11_transform(&CMat2::identity(), Su11Direction::ToSu11);
        assert!((id - CMat2::identity()).norm() < 1e-14);
    }

    #[test]
    fn schur_triangularizes() {
        let a = Mat2::new(1.3, -0.4, 2.0, 0.1);
        let a = a / a.determinant().sqrt();
        let tr = a.trace() / 2.0;
        let eig = Complex64::new(tr, (1.0 - tr * tr).sqrt());
        let s = schur_with(&a, eig);
        let back = s.from_schur_basis(&s.t);
        assert!((back - to_complex(&a)).norm() < 1e-13);
        assert!((s.t[(0, 0)] - eig).norm() < 1e-13);
        assert!((s.t[(0, 0)] * s.t[(1, 1)] - 1.0).norm() < 1e-13);
    }

    #[test]
    fn near_identity_product_keeps_relative_precision() {
        let x = Mat2::new(1e-9, 2e-9, -3e-9, -1e-9);
        let y = Mat2::new(-1e-9, 5e-10, 1e-9, 1e-9);
        let z = log_of_exp_product(&[x, y, -x, -y]).unwrap();
        // second order: [x, y]
        let comm = x * y - y * x;
        assert!((z - comm).norm() < 1e-6 * comm.norm());
    }

    #[test]
    fn rotation_normal_form_conjugates() {
        for a in [Mat2::new(0.5, -2.0, 0.5, 0.5), Mat2::new(-0.5, 0.5, -2.0, 0.3)] {
            let a = a / a.determinant().sqrt();
            let (p, phi) = rotation_normal_form(&a).unwrap();
            assert!((p.determinant() - 1.0).abs() < 1e-12);
            let r = inverse_sl2(&p) * a * p;
            assert!((r - rotation(phi)).norm() < 1e-10, "{r} vs {phi}");
        }
    }

    #[test]
    fn eigenbasis_diagonalizes() {
        for a in [Mat2::new(2.0, 1.0, 1.0, 1.0), Mat2::new(0.5, -1.0, 0.75, 0.5)] {
            let (s, si, l1, l2) = eigenbasis(&a).unwrap();
            let d = si * to_complex(&a) * s;
            assert!((d[(0, 0)] - l1).norm() < 1e-12 && (d[(1, 1)] - l2).norm() < 1e-12);
            assert!(d[(0, 1)].norm() < 1e-12 && d[(1, 0)].norm() < 1e-12);
        }
    }
}
