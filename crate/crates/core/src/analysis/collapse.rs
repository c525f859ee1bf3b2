//! Finite-size-scaling collapse of `<r>(tau)` curves onto `g((tau - tau_c) L^{1/nu})`.
//!
//! The quality of a trial `(tau_c, nu)` follows Houdayer and Hartmann: every
//! scaled point is compared with a master curve estimated from the *other* sizes
//! by error-weighted linear regression through the two points that bracket it in
//! each of those sizes,
//!
//! ```text
//! S = (1/N) sum (y - Y(x))^2 / (dy^2 + dY(x)^2),
//! ```
//!
//! where the sum runs over the `N` points bracketed by at least one other size.
//! `S` is close to 1 for a collapse consistent with the error bars. As `nu -> 0`
//! the sizes separate completely and the quality is undefined (no overlap).

use serde::{Deserialize, Serialize};

use super::optim::nelder_mead;
use crate::error::{Error, Result};

/// `<r>` versus `tau` at one system size; `tau` ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSeries {
    pub sites: usize,
    pub tau: Vec<f64>,
    pub mean_r: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingDataset {
    series: Vec<SizeSeries>,
}

impl ScalingDataset {
    /// Needs at least 3 distinct sizes, 5 ascending points per size and positive errors.
    pub fn new(mut series: Vec<SizeSeries>) -> Result<Self> {
        series.sort_by_key(|s| s.sites);
        if series.len() < 3 {
            return Err(Error::invalid("dataset", format!("need at least 3 sizes, got {}", series.len())));
        }
        if series.windows(2).any(|w| w[0].sites == w[1].sites) {
            return Err(Error::invalid("dataset", "system sizes must be distinct"));
        }
        for s in &series {
            let n = s.tau.len();
            if n < 5 || s.mean_r.len() != n || s.std_error.len() != n {
                return Err(Error::invalid("dataset", format!("L={} needs >= 5 complete points", s.sites)));
            }
            if s.tau.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid("dataset", format!("L={} tau values must be strictly increasing", s.sites)));
            }
            if s.std_error.iter().any(|e| !(*e > 0.0)) {
                return Err(Error::invalid("dataset", format!("L={} has a non-positive error bar", s.sites)));
            }
            if s.mean_r.iter().chain(&s.tau).any(|v| !v.is_finite()) {
                return Err(Error::invalid("dataset", format!("L={} has non-finite values", s.sites)));
            }
        }
        Ok(Self { series })
    }

    pub fn series(&self) -> &[SizeSeries] {
        &self.series
    }
}

struct Scaled {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

fn scale(data: &ScalingDataset, tau_c: f64, nu: f64) -> Vec<Scaled> {
    data.series
        .iter()
        .map(|s| {
            let factor = (s.sites as f64).powf(1.0 / nu);
            Scaled {
                x: s.tau.iter().map(|t| (t - tau_c) * factor).collect(),
                y: s.mean_r.clone(),
                dy: s.std_error.clone(),
            }
        })
        .collect()
}

/// Collapse quality `S(tau_c, nu)`; smaller is better.
pub fn collapse_quality(data: &ScalingDataset, tau_c: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() || !tau_c.is_finite() {
        return Err(Error::invalid("nu", format!("nu must be positive and finite (got {nu})")));
    }
    let scaled = scale(data, tau_c, nu);
    let mut total = 0.0;
    let mut counted = 0usize;
    for (i, own) in scaled.iter().enumerate() {
        for j in 0..own.x.len() {
            let x = own.x[j];
            // weighted sums over the bracketing neighbours from other sizes
            let (mut k, mut kx, mut ky, mut kxx, mut kxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let mut brackets = 0;
            for (other_idx, other) in scaled.iter().enumerate() {
                if other_idx == i {
                    continue;
                }
                let Some(m) = other.x.windows(2).position(|w| w[0] <= x && x <= w[1]) else { continue };
                brackets += 1;
                for q in [m, m + 1] {
                    let w = 1.0 / (other.dy[q] * other.dy[q]);
                    k += w;
                    kx += w * other.x[q];
                    ky += w * other.y[q];
                    kxx += w * other.x[q] * other.x[q];
                    kxy += w * other.x[q] * other.y[q];
                }
            }
            if brackets == 0 {
                continue;
            }
            let delta = k * kxx - kx * kx;
            if !(delta > 0.0) {
                continue;
            }
            let fit = (kxx * ky - kx * kxy + x * (k * kxy - kx * ky)) / delta;
            let fit_var = ((kxx - 2.0 * x * kx + x * x * k) / delta).max(0.0);
            let dy = own.dy[j];
            total += (own.y[j] - fit).powi(2) / (dy * dy + fit_var);
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(total / counted as f64)
}

/// Rectangle of `(tau_c, nu)` searched by [`fit_collapse`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub tau_c: (f64, f64),
    pub nu: (f64, f64),
    /// Grid points per axis of the coarse scan.
    pub grid: usize,
}

impl SearchBox {
    pub fn new(tau_c: (f64, f64), nu: (f64, f64)) -> Self {
        Self { tau_c, nu, grid: 41 }
    }

    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.tau_c) || !ok(self.nu) || self.nu.0 <= 0.0 {
            return Err(Error::invalid("search box", "ranges must be nonempty with nu > 0"));
        }
        if self.grid < 21 {
            return Err(Error::invalid("search box", "coarse grid needs at least 21 points per axis"));
        }
        Ok(())
    }

    fn contains(&self, tau_c: f64, nu: f64) -> bool {
        (self.tau_c.0..=self.tau_c.1).contains(&tau_c) && (self.nu.0..=self.nu.1).contains(&nu)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: String,
    pub iteration: usize,
    pub tau_c: f64,
    pub nu: f64,
    pub quality: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub tau_c: f64,
    pub nu: f64,
    pub quality: f64,
    /// The optimum sits within half a grid step of the search-box edge.
    pub on_boundary: bool,
    pub grid_evaluations: usize,
    pub simplex_converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// Largest quality accepted as a collapse of the curves.
pub const CLEAN_QUALITY_MAX: f64 = 2.0;

impl CollapseResult {
    /// Converged inside the box with an acceptable quality.
    pub fn is_clean(&self) -> bool {
        !self.on_boundary && self.simplex_converged && self.quality <= CLEAN_QUALITY_MAX
    }
}

/// Coarse grid scan followed by Nelder-Mead refinement from the best cell.
pub fn fit_collapse(data: &ScalingDataset, search: &SearchBox) -> Result<CollapseResult> {
    search.validate()?;
    let n = search.grid;
    let step_tau = (search.tau_c.1 - search.tau_c.0) / (n - 1) as f64;
    let step_nu = (search.nu.1 - search.nu.0) / (n - 1) as f64;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut evaluations = 0;
    for a in 0..n {
        for b in 0..n {
            let tau_c = search.tau_c.0 + a as f64 * step_tau;
            let nu = search.nu.0 + b as f64 * step_nu;
            evaluations += 1;
            if let Ok(q) = collapse_quality(data, tau_c, nu) {
                if best.is_none_or(|(_, _, bq)| q < bq) {
                    best = Some((tau_c, nu, q));
                }
            }
        }
    }
    let (g_tau, g_nu, g_q) = best.ok_or(Error::NoOverlap)?;
    let mut trace =
        vec![TraceEntry { stage: "grid".into(), iteration: 0, tau_c: g_tau, nu: g_nu, quality: g_q }];

    let objective = |p: &[f64]| {
        if !search.contains(p[0], p[1]) {
            return f64::INFINITY;
        }
        collapse_quality(data, p[0], p[1]).unwrap_or(f64::INFINITY)
    };
    let refined = nelder_mead(objective, &[g_tau, g_nu], &[0.5 * step_tau, 0.5 * step_nu], 1e-9, 2000);
    for (it, (p, q)) in refined.history.iter().enumerate() {
        trace.push(TraceEntry { stage: "simplex".into(), iteration: it + 1, tau_c: p[0], nu: p[1], quality: *q });
    }
    let (tau_c, nu, quality) = if refined.value <= g_q {
        (refined.point[0], refined.point[1], refined.value)
    } else {
        (g_tau, g_nu, g_q)
    };
    let on_boundary = tau_c - search.tau_c.0 < 0.5 * step_tau
        || search.tau_c.1 - tau_c < 0.5 * step_tau
        || nu - search.nu.0 < 0.5 * step_nu
        || search.nu.1 - nu < 0.5 * step_nu;
    if on_boundary {
        log::warn!("collapse optimum ({tau_c:.4}, {nu:.4}) lies on the search-box boundary");
    }
    Ok(CollapseResult {
        tau_c,
        nu,
        quality,
        on_boundary,
        grid_evaluations: evaluations,
        simplex_converged: refined.converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn master(x: f64) -> f64 {
        0.386 + 0.144 / (1.0 + (-x).exp())
    }

    fn noiseless(tau_c: f64, nu: f64, sizes: &[usize]) -> ScalingDataset {
        let tau: Vec<f64> = (0..12).map(|i| 0.05 + 0.05 * i as f64).collect();
        ScalingDataset::new(
            sizes
                .iter()
                .map(|&l| SizeSeries {
                    sites: l,
                    mean_r: tau.iter().map(|t| master((t - tau_c) * (l as f64).powf(1.0 / nu))).collect(),
                    std_error: vec![0.003; tau.len()],
                    tau: tau.clone(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let good = noiseless(0.25, 0.9, &[8, 10, 12]);
        let mut s = good.series().to_vec();
        assert!(ScalingDataset::new(s[..2].to_vec()).is_err());
        s[1].sites = 8;
        assert!(ScalingDataset::new(s.clone()).is_err());
        let mut s = good.series().to_vec();
        s[0].std_error[3] = 0.0;
        assert!(ScalingDataset::new(s).is_err());
    }

    #[test]
    fn noiseless_truth_is_near_perfect() {
        let d = noiseless(0.25, 0.9, &[8, 10, 12]);
        let at_truth = collapse_quality(&d, 0.25, 0.9).unwrap();
        let off = collapse_quality(&d, 0.35, 0.9).unwrap();
        // residual is only the curvature of the master curve between neighbours
        assert!(at_truth < 0.5, "{at_truth}");
        assert!(off > 20.0 * at_truth);
    }

    #[test]
    fn separated_sizes_do_not_overlap() {
        let series = [(8, 0.05), (10, 0.5), (12, 1.0)]
            .iter()
            .map(|&(l, start)| SizeSeries {
                sites: l,
                tau: (0..5).map(|i| start + 0.05 * i as f64).collect(),
                mean_r: vec![0.4; 5],
                std_error: vec![0.01; 5],
            })
            .collect();
        let d = ScalingDataset::new(series).unwrap();
        assert!(matches!(collapse_quality(&d, 0.0, 1.0), Err(Error::NoOverlap)));
        assert!(collapse_quality(&d, 0.0, 0.0).is_err());
    }

    #[test]
    fn size_order_does_not_matter() {
        let d = noiseless(0.25, 0.9, &[8, 10, 12]);
        let mut rev = d.series().to_vec();
        rev.reverse();
        let e = ScalingDataset::new(rev).unwrap();
        let a = collapse_quality(&d, 0.22, 1.1).unwrap();
        let b = collapse_quality(&e, 0.22, 1.1).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn fit_recovers_noiseless_parameters() {
        let d = noiseless(0.25, 0.9, &[8, 10, 12]);
        let r = fit_collapse(&d, &SearchBox::new((0.0, 0.6), (0.3, 3.0))).unwrap();
        assert!((r.tau_c - 0.25).abs() < 0.01, "{r:?}");
        assert!((r.nu - 0.9).abs() < 0.05);
        assert!(!r.on_boundary);
        assert_eq!(r.grid_evaluations, 41 * 41);
    }

    #[test]
    fn optimum_outside_box_is_flagged() {
        let d = noiseless(0.25, 0.9, &[8, 10, 12]);
        let r = fit_collapse(&d, &SearchBox::new((0.3, 0.6), (0.3, 3.0))).unwrap();
        assert!(r.on_boundary);
    }
}
