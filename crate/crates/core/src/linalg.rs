//! Small dense helpers shared by the spectral modules.

use faer::{c64, MatRef};

pub(crate) fn max_abs_diff_real(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

pub(crate) fn identity_error_real(g: MatRef<'_, f64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            m = m.max((g[(i, j)] - target).abs());
        }
    }
    m
}

/// `max |a_ij - b_ij|` over complex entries.
pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// `max |g_ij - delta_ij|`.
pub fn identity_error(g: MatRef<'_, c64>) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) };
            m = m.max((g[(i, j)] - target).norm());
        }
    }
    m
}

/// `max |U^dagger U - I|`.
pub fn unitarity_error(u: MatRef<'_, c64>) -> f64 {
    let g = u.adjoint() * u;
    identity_error(g.as_ref())
}

/// Maps an angle onto `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}
