//! Growth-law fits for entanglement time series.
//!
//! Two candidate laws are compared on the same window, both by least squares on
//! `S` itself so they see identical noise weighting:
//!
//! * log-power: `S = c (ln t)^gamma + d (ln t)^(gamma - 1)` (or with `d = 0`),
//! * algebraic: `S = c t^gamma`.

use serde::{Deserialize, Serialize};

use super::optim::levenberg_marquardt;
use crate::error::{Error, Result};

/// Sampled kick counts with ensemble-averaged values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub std_error: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if t.len() != values.len() {
            return Err(Error::DimensionMismatch { context: "time series", expected: t.len(), found: values.len() });
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time series", "times must be strictly increasing"));
        }
        Ok(Self { t, values, std_error: None })
    }

    /// Mean of the values with `t_lo <= t <= t_hi`.
    pub fn window_mean(&self, t_lo: f64, t_hi: f64) -> Option<f64> {
        let sel: Vec<f64> =
            self.t.iter().zip(&self.values).filter(|(t, _)| **t >= t_lo && **t <= t_hi).map(|(_, v)| *v).collect();
        if sel.is_empty() {
            None
        } else {
            Some(sel.iter().sum::<f64>() / sel.len() as f64)
        }
    }

    fn select(&self, window: &FitWindow) -> (Vec<f64>, Vec<f64>) {
        self.t
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= window.t_min && **t <= window.t_max)
            .map(|(t, v)| (*t, *v))
            .unzip()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
}

/// Minimum number of samples inside a fit window.
pub const MIN_WINDOW_POINTS: usize = 10;
/// Lower edge of the automatic window.
pub const DEFAULT_T_MIN: f64 = 10.0;

/// Relative rise between the last two decades above which the series has no plateau yet.
pub const SATURATION_RISE: f64 = 0.05;

/// `[10, t*]` where `t*` is the first time the series reaches 95% of its plateau,
/// the plateau being the mean over the last decade of sampled times.
///
/// A series still rising by more than [`SATURATION_RISE`] from the second-to-last to the
/// last decade has no saturation tail, and the window runs to the last time.
pub fn default_window(series: &TimeSeries) -> Result<FitWindow> {
    let last = *series.t.last().ok_or_else(|| Error::invalid("time series", "empty"))?;
    let plateau = series
        .window_mean(last / 10.0, last)
        .ok_or_else(|| Error::invalid("time series", "no samples in the last decade"))?;
    let still_rising = series
        .window_mean(last / 100.0, last / 10.0)
        .is_some_and(|before| before > 0.0 && plateau > (1.0 + SATURATION_RISE) * before);
    let t_star = if still_rising {
        last
    } else {
        series
            .t
            .iter()
            .zip(&series.values)
            .find(|(t, v)| **t >= DEFAULT_T_MIN && **v >= 0.95 * plateau)
            .map(|(t, _)| *t)
            .unwrap_or(last)
    };
    Ok(FitWindow { t_min: DEFAULT_T_MIN, t_max: t_star.max(DEFAULT_T_MIN) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    /// `c (ln t)^gamma + d (ln t)^(gamma - 1)`.
    LogPower,
    /// `c (ln t)^gamma`.
    LogPowerLeading,
    /// `c t^gamma`.
    Algebraic,
}

impl GrowthModel {
    pub fn name(self) -> &'static str {
        match self {
            GrowthModel::LogPower => "log_power",
            GrowthModel::LogPowerLeading => "log_power_leading",
            GrowthModel::Algebraic => "algebraic",
        }
    }

    fn variable(self, t: f64) -> f64 {
        match self {
            GrowthModel::Algebraic => t,
            _ => t.ln(),
        }
    }

    fn eval(self, p: &[f64], x: f64) -> f64 {
        match self {
            GrowthModel::LogPower => p[0] * x.powf(p[1]) + p[2] * x.powf(p[1] - 1.0),
            _ => p[0] * x.powf(p[1]),
        }
    }

    fn gradient(self, p: &[f64], x: f64) -> Vec<f64> {
        let lx = x.ln();
        match self {
            GrowthModel::LogPower => {
                let a = x.powf(p[1]);
                let b = x.powf(p[1] - 1.0);
                vec![a, (p[0] * a + p[2] * b) * lx, b]
            }
            _ => {
                let a = x.powf(p[1]);
                vec![a, p[0] * a * lx]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    pub c: f64,
    pub gamma: f64,
    /// Subleading amplitude, present for [`GrowthModel::LogPower`].
    pub d: Option<f64>,
    pub gamma_std_error: Option<f64>,
    /// Mean squared residual of `S`.
    pub residual: f64,
    /// Mean squared residual of `ln S`.
    pub log_residual: f64,
    pub window: FitWindow,
    pub points: usize,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 2000;

/// Least-squares fit of `model` to the series restricted to `window`.
pub fn fit_growth(series: &TimeSeries, window: FitWindow, model: GrowthModel) -> Result<GrowthFit> {
    let (t, s) = series.select(&window);
    if t.len() < MIN_WINDOW_POINTS {
        return Err(Error::invalid(
            "window",
            format!("[{}, {}] holds {} points, need {MIN_WINDOW_POINTS}", window.t_min, window.t_max, t.len()),
        ));
    }
    if t.iter().any(|&t| t < 2.0) {
        return Err(Error::invalid("window", "fit windows must start at t >= 2"));
    }
    if s.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DegenerateFit("series is not strictly positive inside the window".into()));
    }
    let spread = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - s.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if spread <= 1e-10 * scale {
        return Err(Error::DegenerateFit("series does not grow inside the window".into()));
    }

    // ln S = ln c + gamma ln x  (x = ln t or t), exact when d = 0
    let xs: Vec<f64> = t.iter().map(|&t| model.variable(t)).collect();
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let (init_gamma, init_lnc) = linear_regression(&lx, &ly);
    let init_c = init_lnc.exp();
    if !(init_gamma > 1e-6) {
        return Err(Error::DegenerateFit(format!("linearized exponent {init_gamma:.3e} is not positive")));
    }
    let start: Vec<f64> = match model {
        GrowthModel::LogPower => vec![init_c, init_gamma, 0.0],
        _ => vec![init_c, init_gamma],
    };

    let residuals = |p: &[f64]| -> Option<Vec<f64>> {
        let r: Vec<f64> = xs.iter().zip(&s).map(|(&x, &y)| model.eval(p, x) - y).collect();
        r.iter().all(|v| v.is_finite()).then_some(r)
    };
    let jacobian = |p: &[f64]| xs.iter().map(|&x| model.gradient(p, x)).collect::<Vec<_>>();
    let out = levenberg_marquardt(residuals, jacobian, &start, MAX_ITERATIONS);
    if !out.converged || !out.cost.is_finite() {
        return Err(Error::NonConvergence { iterations: out.iterations, init_c, init_gamma });
    }
    let p = &out.params;
    if !(p[1] > 0.0) {
        return Err(Error::DegenerateFit(format!("fitted exponent {} is not positive", p[1])));
    }
    let n = xs.len() as f64;
    let log_residual = xs
        .iter()
        .zip(&s)
        .map(|(&x, &y)| {
            let m = model.eval(p, x);
            if m > 0.0 {
                (m.ln() - y.ln()).powi(2)
            } else {
                f64::INFINITY
            }
        })
        .sum::<f64>()
        / n;
    Ok(GrowthFit {
        model,
        c: p[0],
        gamma: p[1],
        d: (model == GrowthModel::LogPower).then(|| p[2]),
        gamma_std_error: out.covariance.as_ref().map(|c| c[1][1].max(0.0).sqrt()),
        residual: out.cost / n,
        log_residual,
        window,
        points: xs.len(),
        iterations: out.iterations,
    })
}

/// `S = c (ln t)^gamma + d (ln t)^(gamma - 1)` over `window`.
pub fn fit_log_power(series: &TimeSeries, window: FitWindow) -> Result<GrowthFit> {
    fit_growth(series, window, GrowthModel::LogPower)
}

fn linear_regression(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Residual ratio above which one model is declared better.
pub const PREFERENCE_RATIO: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    First,
    Second,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub first: GrowthFit,
    pub second: GrowthFit,
    /// `second.residual / first.residual`; above 1.5 the first model wins.
    pub residual_ratio: f64,
    pub preference: Preference,
}

impl ModelComparison {
    pub fn preferred_model(&self) -> Option<GrowthModel> {
        match self.preference {
            Preference::First => Some(self.first.model),
            Preference::Second => Some(self.second.model),
            Preference::Inconclusive => None,
        }
    }
}

/// Fits both models on the same window and compares their mean squared residuals.
pub fn compare_models(
    series: &TimeSeries,
    window: FitWindow,
    first: GrowthModel,
    second: GrowthModel,
) -> Result<ModelComparison> {
    let a = fit_growth(series, window, first)?;
    let b = fit_growth(series, window, second)?;
    let residual_ratio = b.residual / a.residual;
    let preference = if residual_ratio > PREFERENCE_RATIO {
        Preference::First
    } else if residual_ratio < 1.0 / PREFERENCE_RATIO {
        Preference::Second
    } else {
        Preference::Inconclusive
    };
    Ok(ModelComparison { first: a, second: b, residual_ratio, preference })
}

/// Log-power law (with subleading term) against algebraic growth.
pub fn compare_growth_models(series: &TimeSeries, window: FitWindow) -> Result<ModelComparison> {
    compare_models(series, window, GrowthModel::LogPower, GrowthModel::Algebraic)
}
