//! Dense full-Hilbert-space reference implementation built from Kronecker products.

#![allow(dead_code)]

use faer::{c64, Mat, Side};
use kickchain::{ChainConfig, PairSum, SectorBasis, SectorState};

fn zero() -> c64 {
    c64::new(0.0, 0.0)
}

/// 2x2 operators in the local basis (|down>, |up>).
pub fn sz() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| if i == j { c64::new(if i == 1 { 0.5 } else { -0.5 }, 0.0) } else { zero() })
}

pub fn s_plus() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| if i == 1 && j == 0 { c64::new(1.0, 0.0) } else { zero() })
}

pub fn s_minus() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c64::new(1.0, 0.0) } else { zero() })
}

pub fn kron(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// `op` on `site` (1-based, site 1 is the leftmost factor) and identity elsewhere.
pub fn site_operator(sites: usize, site: usize, op: &Mat<c64>) -> Mat<c64> {
    let mut out = Mat::<c64>::identity(1, 1);
    for s in 1..=sites {
        let factor = if s == site { op.clone() } else { Mat::<c64>::identity(2, 2) };
        out = kron(&out, &factor);
    }
    out
}

fn decay(exponent: f64, d: usize) -> f64 {
    if exponent >= 1e3 {
        if d == 1 {
            1.0
        } else {
            0.0
        }
    } else {
        (d as f64).powf(-exponent)
    }
}

/// Full `2^L` Hamiltonian summed literally over `i < j` or over all `i != j`.
pub fn full_hamiltonian(config: &ChainConfig) -> Mat<c64> {
    let l = config.sites;
    let n = 1 << l;
    let mut h = Mat::<c64>::zeros(n, n);
    let (sp, sm, z) = (s_plus(), s_minus(), sz());
    for i in 1..=l {
        for j in 1..=l {
            let keep = match config.pair_sum {
                PairSum::Single => i < j,
                PairSum::Double => i != j,
            };
            if !keep {
                continue;
            }
            let d = i.abs_diff(j);
            let flip = &site_operator(l, i, &sp) * &site_operator(l, j, &sm)
                + &site_operator(l, i, &sm) * &site_operator(l, j, &sp);
            let ising = &site_operator(l, i, &z) * &site_operator(l, j, &z);
            let cx = c64::new(-config.jx * decay(config.a.0, d) * 0.5, 0.0);
            let cz = c64::new(-config.jz * decay(config.b.0, d), 0.0);
            h = h + &flip * faer::Scale(cx) + &ising * faer::Scale(cz);
        }
    }
    h
}

fn one_norm(a: &Mat<c64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Mat<c64>) -> Mat<c64> {
    let n = a.nrows();
    let mut squarings = 0;
    let mut norm = one_norm(a);
    while norm > 0.25 {
        norm /= 2.0;
        squarings += 1;
    }
    let scaled = a * faer::Scale(c64::new(0.5f64.powi(squarings), 0.0));
    let mut term = Mat::<c64>::identity(n, n);
    let mut sum = Mat::<c64>::identity(n, n);
    for k in 1..=24 {
        term = &term * &scaled * faer::Scale(c64::new(1.0 / k as f64, 0.0));
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Full-space `R(theta) exp(-i H tau)` with `R = exp(-i sum_i theta_i S^z_i)`.
pub fn full_floquet(config: &ChainConfig, angles: &[f64]) -> Mat<c64> {
    let l = config.sites;
    let h = full_hamiltonian(config);
    let free = expm(&(&h * faer::Scale(c64::new(0.0, -config.tau))));
    let mut generator = Mat::<c64>::zeros(1 << l, 1 << l);
    for (i, &theta) in angles.iter().enumerate() {
        generator += site_operator(l, i + 1, &sz()) * faer::Scale(c64::new(0.0, -theta));
    }
    expm(&generator) * free
}

/// `u^t` by binary powering.
pub fn power(u: &Mat<c64>, mut t: u64) -> Mat<c64> {
    let n = u.nrows();
    let mut result = Mat::<c64>::identity(n, n);
    let mut base = u.clone();
    while t > 0 {
        if t & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        t >>= 1;
    }
    result
}

pub fn embed(state: &SectorState, basis: &SectorBasis) -> Vec<c64> {
    let mut full = vec![zero(); 1 << basis.sites()];
    for (k, &s) in basis.states().iter().enumerate() {
        full[s as usize] = state.amplitudes[k];
    }
    full
}

pub fn mat_vec(m: &Mat<c64>, v: &[c64]) -> Vec<c64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

/// Half-chain entropy of a full-space state via the reduced density matrix.
pub fn partial_trace_entropy(full: &[c64], sites: usize) -> f64 {
    let left = sites / 2;
    let right = sites - left;
    let (dl, dr) = (1usize << left, 1usize << right);
    // the left half holds the high bits
    let m = Mat::<c64>::from_fn(dl, dr, |i, j| full[(i << right) | j]);
    let rho = &m * m.adjoint();
    let eig = rho.self_adjoint_eigenvalues(Side::Lower).unwrap();
    eig.iter().filter(|&&p| p > 1e-300).map(|&p| -p * p.ln()).sum()
}

pub fn max_diff(a: &[c64], b: &[c64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
