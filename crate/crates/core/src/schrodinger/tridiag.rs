//! Truncated and periodic Jacobi matrices with unit off-diagonal.

use std::os::raw::{c_char, c_int};

use nalgebra::DMatrix;

use crate::cocycle::Frequency;
use crate::error::{Error, Result};

use super::potential::Potential;

/// Diagonal `λV(θ + nα)` for `n ∈ [first, first + len)`.
pub fn truncated_diagonal(v: &Potential, freq: &Frequency, theta: &[f64], first: i64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| v.value(&freq.shift(theta, (first + k as i64) as f64)))
        .collect()
}

/// Number of eigenvalues `< e` of the Jacobi matrix with diagonal `diag`
/// and unit off-diagonal, from the signs of the `LDLᵀ` pivots of `H − e`.
pub fn sturm_count(diag: &[f64], e: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, a) in diag.iter().enumerate() {
        d = if i == 0 { a - e } else { (a - e) - 1.0 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + e.abs() + 2.0);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn dstemr(diag: &[f64], vectors: bool) -> Result<(Vec<f64>, Option<DMatrix<f64>>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), vectors.then(|| DMatrix::zeros(0, 0))));
    }
    let ni = n as c_int;
    let mut d = diag.to_vec();
    let mut e = vec![1.0; n];
    e[n - 1] = 0.0;
    let jobz = if vectors { b'V' } else { b'N' } as c_char;
    let range = b'A' as c_char;
    let (vl, vu, il, iu) = (0.0, 0.0, 0 as c_int, 0 as c_int);
    let mut m: c_int = 0;
    let mut w = vec![0.0; n];
    let ldz = if vectors { ni } else { 1 };
    let mut z = vec![0.0; if vectors { n * n } else { 1 }];
    let nzc = if vectors { ni } else { 0 };
    let mut isuppz = vec![0 as c_int; 2 * n];
    let mut tryrac: c_int = 1;
    let mut info: c_int = 0;
    let mut wq = 0.0;
    let mut iwq: c_int = 0;
    let query: c_int = -1;
    // SAFETY: buffers are sized per the routine's documentation; the first
    // call is a workspace query.
    unsafe {
        lapack_sys::dstemr_(
            &jobz, &range, &ni, d.as_mut_ptr(), e.as_mut_ptr(), &vl, &vu, &il, &iu, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr(), &ldz, &nzc, isuppz.as_mut_ptr(), &mut tryrac,
            &mut wq, &query, &mut iwq, &query, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dstemr", info });
    }
    let lwork = wq as c_int;
    let liwork = iwq;
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dstemr_(
            &jobz, &range, &ni, d.as_mut_ptr(), e.as_mut_ptr(), &vl, &vu, &il, &iu, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr(), &ldz, &nzc, isuppz.as_mut_ptr(), &mut tryrac,
            work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 || m as usize != n {
        return Err(Error::Lapack { routine: "dstemr", info });
    }
    let vecs = vectors.then(|| DMatrix::from_vec(n, n, z));
    Ok((w, vecs))
}

/// Ascending eigenvalues of the Jacobi matrix with unit off-diagonal.
pub fn jacobi_eigenvalues(diag: &[f64]) -> Result<Vec<f64>> {
    dstemr(diag, false).map(|(w, _)| w)
}

/// Eigenvalues and orthonormal eigenvectors (columns, matching order).
pub fn jacobi_eigensystem(diag: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (w, z) = dstemr(diag, true)?;
    Ok((w, z.expect("vectors requested")))
}

fn dsyev_values(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    let ni = n as c_int;
    let (jobz, uplo) = (b'N' as c_char, b'U' as c_char);
    let mut w = vec![0.0; n];
    let mut info: c_int = 0;
    let mut wq = 0.0;
    let query: c_int = -1;
    // SAFETY: `a` is a column-major n×n buffer; first call queries workspace.
    unsafe {
        lapack_sys::dsyev_(&jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), &mut wq, &query, &mut info);
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyev", info });
    }
    let lwork = (wq as c_int).max(1);
    let mut work = vec![0.0; lwork as usize];
    unsafe {
        lapack_sys::dsyev_(&jobz, &uplo, &ni, a.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork, &mut info);
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyev", info });
    }
    Ok(w)
}

/// Bands of the `q`-periodic Jacobi operator with diagonal `diag`
/// (one period). Band edges are the eigenvalues of the Floquet matrices
/// at quasi-momentum 0 and π, interlaced.
pub fn periodic_bands(diag: &[f64]) -> Result<Vec<(f64, f64)>> {
    let q = diag.len();
    if q == 0 {
        return Err(Error::InvalidInput("empty period".into()));
    }
    let mut edges = Vec::with_capacity(2 * q);
    for corner in [1.0, -1.0] {
        let mut a = vec![0.0; q * q];
        for i in 0..q {
            a[i * q + i] += diag[i];
            let j = (i + 1) % q;
            let t = if i + 1 == q { corner } else { 1.0 };
            a[j * q + i] += t;
            a[i * q + j] += t;
        }
        edges.extend(dsyev_values(a, q)?);
    }
    edges.sort_by(|a, b| a.total_cmp(b));
    Ok(edges.chunks(2).map(|c| (c[0], c[1])).collect())
}

/// Continued-fraction convergents `p/q` of `x ∈ (0, 1)` with `q ≤ q_max`.
pub fn convergents(x: f64, q_max: u64) -> Vec<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    let mut out = Vec::new();
    for _ in 0..64 {
        let a = r.floor();
        let a_int = a as u64;
        let p2 = a_int * p1 + p0;
        let q2 = a_int * q1 + q0;
        if q2 > q_max {
            break;
        }
        if q2 > 0 {
            out.push((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}
