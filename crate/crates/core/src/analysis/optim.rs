//! Derivative-free simplex minimization and damped Gauss-Newton least squares.

use faer::prelude::*;
use faer::Mat;

#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best vertex after every iteration.
    pub history: Vec<(Vec<f64>, f64)>,
}

/// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2).
///
/// Non-finite objective values act as an infinite barrier. Stops when the spread
/// of vertex values and the simplex diameter both fall under `tol`.
pub fn nelder_mead<F>(f: F, start: &[f64], steps: &[f64], tol: f64, max_iter: usize) -> SimplexOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..n {
        let mut x = start.to_vec();
        x[i] += steps[i];
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= tol * (1.0 + best.abs()) && diameter <= tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..n).map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64).collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + coef * (c - w)).collect()
        };
        let reflected = along(1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 { along(0.5) } else { along(-0.5) };
            let fc = eval(&contracted);
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = vertex.0.iter().zip(&anchor).map(|(v, a)| a + 0.5 * (v - a)).collect();
                    let v = eval(&x);
                    *vertex = (x, v);
                }
            }
        }
        let best = simplex.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        history.push(best.clone());
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    SimplexOutcome { point, value, iterations, converged, history }
}

#[derive(Clone, Debug)]
pub struct LeastSquaresOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `s^2 (J^T J)^{-1}` at the solution, `s^2 = cost / (m - p)`.
    pub covariance: Option<Vec<Vec<f64>>>,
}

/// Levenberg-Marquardt on `residuals(p)` with an analytic Jacobian `jacobian(p)`
/// returned row-major as `m x p`.
pub fn levenberg_marquardt<R, J>(residuals: R, jacobian: J, start: &[f64], max_iter: usize) -> LeastSquaresOutcome
where
    R: Fn(&[f64]) -> Option<Vec<f64>>,
    J: Fn(&[f64]) -> Vec<Vec<f64>>,
{
    let np = start.len();
    let cost_of = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut params = start.to_vec();
    let Some(mut r) = residuals(&params) else {
        return LeastSquaresOutcome { params, cost: f64::INFINITY, iterations: 0, converged: false, covariance: None };
    };
    let mut cost = cost_of(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let jac = jacobian(&params);
        let mut jtj = vec![vec![0.0; np]; np];
        let mut jtr = vec![0.0; np];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..np {
                jtr[a] += row[a] * ri;
                for b in 0..np {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let damped = Mat::<f64>::from_fn(np, np, |a, b| {
                if a == b {
                    jtj[a][a] * (1.0 + lambda) + 1e-300
                } else {
                    jtj[a][b]
                }
            });
            let mut rhs = Mat::<f64>::from_fn(np, 1, |a, _| -jtr[a]);
            damped.partial_piv_lu().solve_in_place(rhs.as_mut());
            let trial: Vec<f64> = (0..np).map(|a| params[a] + rhs[(a, 0)]).collect();
            if let Some(rt) = residuals(&trial).filter(|v| v.iter().all(|x| x.is_finite())) {
                let ct = cost_of(&rt);
                if ct <= cost {
                    let step = (0..np).map(|a| rhs[(a, 0)].abs() / (params[a].abs() + 1e-12)).fold(0.0, f64::max);
                    let improvement = cost - ct;
                    params = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    if improvement <= 1e-14 * cost.max(1e-300) || step < 1e-12 || cost < 1e-28 {
                        converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step at any damping: stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }
    let covariance = covariance_at(&jacobian(&params), cost, r.len());
    LeastSquaresOutcome { params, cost, iterations, converged, covariance }
}

fn covariance_at(jac: &[Vec<f64>], cost: f64, m: usize) -> Option<Vec<Vec<f64>>> {
    let np = jac.first()?.len();
    if m <= np {
        return None;
    }
    let jtj = Mat::<f64>::from_fn(np, np, |a, b| jac.iter().map(|row| row[a] * row[b]).sum());
    let mut inv = Mat::<f64>::identity(np, np);
    jtj.partial_piv_lu().solve_in_place(inv.as_mut());
    let s2 = cost / (m - np) as f64;
    let cov: Vec<Vec<f64>> = (0..np).map(|a| (0..np).map(|b| s2 * inv[(a, b)]).collect()).collect();
    if cov.iter().flatten().all(|x| x.is_finite()) {
        Some(cov)
    } else {
        None
    }
}
