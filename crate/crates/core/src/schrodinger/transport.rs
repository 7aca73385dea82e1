use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cocycle::Frequency;
use crate::error::{Error, Result};

use super::potential::Potential;
use super::tridiag::{jacobi_eigensystem, truncated_diagonal};

pub const MAX_STEP: f64 = 0.1;
pub const EDGE_SITES: usize = 10;
pub const EDGE_MASS: f64 = 1e-6;
/// Sites `−32..32` carry the matrix elements of the velocity operator.
pub const Q_BLOCK: usize = 64;
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitialState {
    /// `δ_n`.
    Site { n: i64 },
    /// `ψ_n ∝ exp(−(n−c)²/4w²)·e^{2πiξn}`; under `e^{−itH}` it travels with
    /// the group velocity `−2 sin 2πξ`.
    Wavepacket { center: f64, width: f64, momentum: f64 },
}

impl InitialState {
    fn vector(&self, l: i64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = (2 * l + 1) as usize;
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        match *self {
            InitialState::Site { n: site } => {
                if site.abs() > l {
                    return Err(Error::InvalidInput(format!("site {site} outside [-{l}, {l}]")));
                }
                re[(site + l) as usize] = 1.0;
            }
            InitialState::Wavepacket { center, width, momentum } => {
                if !(width > 0.0) {
                    return Err(Error::InvalidInput(format!("wavepacket width {width} must be positive")));
                }
                for i in 0..n {
                    let x = i as f64 - l as f64;
                    let a = (-(x - center).powi(2) / (4.0 * width * width)).exp();
                    let (s, c) = (2.0 * PI * momentum * x).sin_cos();
                    re[i] = a * c;
                    im[i] = a * s;
                }
                let norm = re.iter().chain(&im).map(|x| x * x).sum::<f64>().sqrt();
                re.iter_mut().chain(im.iter_mut()).for_each(|x| *x /= norm);
            }
        }
        Ok((re, im))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPoint {
    #[serde(rename = "T")]
    pub t: f64,
    /// `⟨X⟩_T / T`.
    pub velocity: f64,
    /// `(1/T)∫₀^T ⟨e^{itH} S e^{−itH}⟩ dt` by composite Simpson.
    pub time_avg_velocity: f64,
    /// `⟨X²⟩_T / T²`.
    pub second_moment: f64,
    /// `‖(X(T) − X)ψ₀‖/T = ‖Q_T ψ₀‖`.
    pub speed: f64,
    /// `|time_avg_velocity − (⟨X⟩_T − ⟨X⟩_0)/T|`, zero up to quadrature error.
    pub identity_residual: f64,
    pub edge_mass: f64,
    pub norm_error: f64,
}

/// `⟨δ_a, Q_T δ_b⟩` for `a, b ∈ [−32, 32)`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityBlock {
    #[serde(rename = "T")]
    pub t: f64,
    pub first_site: i64,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub hermitian_defect: f64,
}

impl VelocityBlock {
    pub fn get(&self, a: i64, b: i64) -> (f64, f64) {
        let i = ((a - self.first_site) as usize) * Q_BLOCK + (b - self.first_site) as usize;
        (self.re[i], self.im[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportResult {
    pub lattice_half_width: i64,
    pub initial_state: InitialState,
    pub points: Vec<TransportPoint>,
    /// `2 + 2·sup|λV|`.
    pub velocity_bound: f64,
    pub q_block: VelocityBlock,
}

struct Evolution {
    l: i64,
    w: Vec<f64>,
    u: DMatrix<f64>,
}

impl Evolution {
    // Coefficients of ψ in the eigenbasis.
    fn analyse(&self, re: &[f64], im: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = re.len();
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { re[i] } else { im[i] });
        let c = self.u.tr_mul(&x);
        (c.column(0).iter().copied().collect(), c.column(1).iter().copied().collect())
    }

    // Columns `e^{−iwt}c` (real parts then imaginary parts) mapped back to
    // sites, for each time in `ts`.
    fn evolve(&self, c: &(Vec<f64>, Vec<f64>), ts: &[f64]) -> DMatrix<f64> {
        let n = self.w.len();
        let b = ts.len();
        let mut m = DMatrix::zeros(n, 2 * b);
        for (k, &t) in ts.iter().enumerate() {
            for j in 0..n {
                let (s, co) = (self.w[j] * t).sin_cos();
                let (a, bb) = (c.0[j], c.1[j]);
                m[(j, k)] = a * co + bb * s;
                m[(j, b + k)] = bb * co - a * s;
            }
        }
        &self.u * m
    }

    fn site(&self, i: usize) -> f64 {
        i as f64 - self.l as f64
    }
}

// ⟨ψ, Sψ⟩ = −2 Im Σ conj(ψ_n) ψ_{n+1}.
fn s_expectation(re: &[f64], im: &[f64]) -> f64 {
    let mut z_im = 0.0;
    for n in 0..re.len() - 1 {
        z_im += re[n] * im[n + 1] - im[n] * re[n + 1];
    }
    -2.0 * z_im
}

fn simpson_nodes(a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut k = ((b - a) / MAX_STEP).ceil() as usize;
    k = k.max(2);
    if k % 2 == 1 {
        k += 1;
    }
    let h = (b - a) / k as f64;
    let nodes = (0..=k).map(|i| a + i as f64 * h).collect();
    let weights = (0..=k)
        .map(|i| {
            let w = if i == 0 || i == k { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Exact evolution of `initial` under the `(2L+1)`-site truncation of `H`
/// at phase `theta`, with the velocity observables at each requested time.
pub fn transport_velocity(
    v: &Potential,
    freq: &Frequency,
    theta: &[f64],
    l: i64,
    t_list: &[f64],
    initial: &InitialState,
) -> Result<TransportResult> {
    if l < 500 {
        return Err(Error::InvalidInput(format!("lattice half width {l} < 500")));
    }
    if t_list.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidInput("times must be positive".into()));
    }
    let t_max = t_list.iter().copied().fold(0.0, f64::max);
    if t_max > l as f64 / 4.0 {
        return Err(Error::InvalidInput(format!("max T = {t_max} exceeds L/4 = {}", l as f64 / 4.0)));
    }
    let n = (2 * l + 1) as usize;
    let diag = truncated_diagonal(v, freq, theta, -l, n);
    let (w, u) = jacobi_eigensystem(&diag)?;
    let ev = Evolution { l, w, u };
    let (re0, im0) = initial.vector(l)?;
    let c = ev.analyse(&re0, &im0);
    let x0: f64 = (0..n).map(|i| ev.site(i) * (re0[i] * re0[i] + im0[i] * im0[i])).sum();
    let xre: Vec<f64> = (0..n).map(|i| ev.site(i) * re0[i]).collect();
    let xim: Vec<f64> = (0..n).map(|i| ev.site(i) * im0[i]).collect();
    let cx = ev.analyse(&xre, &xim);

    let mut sorted: Vec<f64> = t_list.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let mut integral = 0.0;
    let mut prev = 0.0;
    let mut points = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        let (nodes, weights) = simpson_nodes(prev, t);
        for (chunk_t, chunk_w) in nodes.chunks(BATCH).zip(weights.chunks(BATCH)) {
            let psi = ev.evolve(&c, chunk_t);
            let b = chunk_t.len();
            for k in 0..b {
                let re = psi.column(k);
                let im = psi.column(b + k);
                integral += chunk_w[k] * s_expectation(re.as_slice(), im.as_slice());
            }
        }
        prev = t;

        let psi = ev.evolve(&c, &[t]);
        let phi = ev.evolve(&cx, &[t]);
        let (re, im) = (psi.column(0), psi.column(1));
        let (mut mass, mut x1, mut x2, mut edge, mut dq) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let p = re[i] * re[i] + im[i] * im[i];
            let x = ev.site(i);
            mass += p;
            x1 += x * p;
            x2 += x * x * p;
            if i < EDGE_SITES || i >= n - EDGE_SITES {
                edge += p;
            }
            let dr = x * re[i] - phi[(i, 0)];
            let di = x * im[i] - phi[(i, 1)];
            dq += dr * dr + di * di;
        }
        if edge > EDGE_MASS {
            return Err(Error::BoundaryContamination { time: t, mass: edge });
        }
        let time_avg = integral / t;
        points.push(TransportPoint {
            t,
            velocity: x1 / t,
            time_avg_velocity: time_avg,
            second_moment: x2 / (t * t),
            speed: dq.sqrt() / t,
            identity_residual: (time_avg - (x1 - x0) / t).abs(),
            edge_mass: edge,
            norm_error: (mass.sqrt() - 1.0).abs(),
        });
    }

    let q_block = velocity_block(&ev, t_max)?;
    Ok(TransportResult {
        lattice_half_width: l,
        initial_state: initial.clone(),
        points,
        velocity_bound: 2.0 + 2.0 * v.sup_bound(),
        q_block,
    })
}

// ⟨δ_a, (X(T) − X)δ_b⟩/T with X(T) = e^{iTH} X e^{−iTH}.
fn velocity_block(ev: &Evolution, t: f64) -> Result<VelocityBlock> {
    let n = ev.w.len();
    let first_site = -(Q_BLOCK as i64) / 2;
    let rows: Vec<usize> = (0..Q_BLOCK).map(|k| (first_site + k as i64 + ev.l) as usize).collect();
    let mut m = DMatrix::zeros(n, 2 * Q_BLOCK);
    for (k, &r) in rows.iter().enumerate() {
        for j in 0..n {
            let (s, co) = (ev.w[j] * t).sin_cos();
            let a = ev.u[(r, j)];
            m[(j, k)] = a * co;
            m[(j, Q_BLOCK + k)] = -a * s;
        }
    }
    let phi = &ev.u * m;
    let mut re = vec![0.0; Q_BLOCK * Q_BLOCK];
    let mut im = vec![0.0; Q_BLOCK * Q_BLOCK];
    for a in 0..Q_BLOCK {
        for b in 0..Q_BLOCK {
            let (mut sr, mut si) = (0.0, 0.0);
            for i in 0..n {
                let x = ev.site(i);
                let (ar, ai) = (phi[(i, a)], phi[(i, Q_BLOCK + a)]);
                let (br, bi) = (phi[(i, b)], phi[(i, Q_BLOCK + b)]);
                sr += x * (ar * br + ai * bi);
                si += x * (ar * bi - ai * br);
            }
            if a == b {
                sr -= (first_site + a as i64) as f64;
            }
            re[a * Q_BLOCK + b] = sr / t;
            im[a * Q_BLOCK + b] = si / t;
        }
    }
    let mut defect: f64 = 0.0;
    for a in 0..Q_BLOCK {
        for b in 0..Q_BLOCK {
            let (x, y) = (a * Q_BLOCK + b, b * Q_BLOCK + a);
            defect = defect.max((re[x] - re[y]).abs()).max((im[x] + im[y]).abs());
        }
    }
    Ok(VelocityBlock { t, first_site, re, im, hermitian_defect: defect })
}
