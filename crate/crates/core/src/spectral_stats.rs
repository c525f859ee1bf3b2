//! Consecutive-gap ratios of quasi-energy phases.
//!
//! Phases live on a circle, so the gap between the largest and the smallest phase
//! (`2 pi - (phi_max - phi_min)`) is included and every phase contributes one
//! ratio. Gaps below [`DEGENERATE_GAP`] come from solver noise on exact
//! degeneracies; ratios touching them are dropped and counted.
//!
//! Reference means: Poisson `2 ln 2 - 1 = 0.3863`, circular orthogonal ensemble `0.5307`.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use crate::ensemble::derive_seed;
use crate::error::{Error, Result};
use crate::floquet::{unitary_phases, FloquetModel};
use crate::hamiltonian::{hamiltonian_spectrum, ChainConfig};
use crate::stats::RunningStats;
use crate::SectorBasis;

/// Gaps below this are excluded from the ratio statistics.
pub const DEGENERATE_GAP: f64 = 1e-12;

/// `2 ln 2 - 1`, the Poisson mean of `r`.
pub const POISSON_MEAN_R: f64 = 0.386_294_361_119_890_6;

#[derive(Clone, Debug, PartialEq)]
pub struct GapRatioSet {
    pub r_values: Vec<f64>,
    pub mean_r: f64,
    /// Number of phases.
    pub dim: usize,
    /// Ratios dropped because one of their gaps was degenerate.
    pub excluded: usize,
}

/// Ratios `min(d_k, d_{k+1}) / max(d_k, d_{k+1})` over circularly adjacent gaps.
pub fn gap_ratios(phases: &[f64]) -> Result<GapRatioSet> {
    let n = phases.len();
    if n < 3 {
        return Err(Error::invalid("phases", format!("need at least 3 phases, got {n}")));
    }
    if phases.iter().any(|p| !(p.is_finite() && *p >= -PI - 1e-12 && *p <= PI + 1e-12)) {
        return Err(Error::invalid("phases", "phases must lie in (-pi, pi]"));
    }
    if phases.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("phases", "phases must be sorted ascending"));
    }
    let gaps: Vec<f64> = (0..n)
        .map(|k| if k + 1 < n { phases[k + 1] - phases[k] } else { TAU - (phases[n - 1] - phases[0]) })
        .collect();
    let mut r_values = Vec::with_capacity(n);
    let mut excluded = 0;
    for k in 0..n {
        let (a, b) = (gaps[k], gaps[(k + 1) % n]);
        if a < DEGENERATE_GAP || b < DEGENERATE_GAP {
            excluded += 1;
            continue;
        }
        r_values.push(a.min(b) / a.max(b));
    }
    if r_values.is_empty() {
        return Err(Error::numerical("gap ratios", "every gap is degenerate"));
    }
    if excluded > 0 {
        log::debug!("gap ratios: excluded {excluded} of {n} ratios with degenerate gaps");
    }
    let mean_r = r_values.iter().sum::<f64>() / r_values.len() as f64;
    Ok(GapRatioSet { r_values, mean_r, dim: n, excluded })
}

/// Gap-ratio statistics of one disorder sample.
pub fn sample_gap_ratios(model: &FloquetModel, seed: u64) -> Result<GapRatioSet> {
    let u = model.operator(&model.kick(seed)?)?;
    gap_ratios(&unitary_phases(u.as_ref())?)
}

/// Ensemble average of the per-sample mean `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleMean {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub failed: usize,
}

/// Averages per-sample `mean_r` over `(config, sample index)` jobs.
///
/// Distinct configurations are numbered in order of first appearance; the kick
/// of each job is seeded with `derive_seed(master_seed, that number, sample index)`.
/// Samples are reduced in job order. Up to 1% of samples may fail.
pub fn mean_r_over_ensemble(jobs: &[(ChainConfig, u64)], master_seed: u64) -> Result<EnsembleMean> {
    if jobs.len() < 2 {
        return Err(Error::invalid("jobs", "need at least 2 samples"));
    }
    let mut models: Vec<FloquetModel> = Vec::new();
    let mut bases: HashMap<usize, Arc<SectorBasis>> = HashMap::new();
    let mut stats = RunningStats::new();
    let mut failed = 0;
    let mut last_error = None;
    for (config, sample) in jobs {
        let point = match models.iter().position(|m| &m.config == config) {
            Some(p) => p,
            None => {
                config.validate()?;
                let basis = match bases.get(&config.sites) {
                    Some(b) => b.clone(),
                    None => {
                        let b = Arc::new(SectorBasis::half_filling(config.sites)?);
                        bases.insert(config.sites, b.clone());
                        b
                    }
                };
                let spectrum = hamiltonian_spectrum(config, &basis)?;
                models.push(FloquetModel::new(config, basis, &spectrum)?);
                models.len() - 1
            }
        };
        match sample_gap_ratios(&models[point], derive_seed(master_seed, point as u64, *sample)) {
            Ok(set) => stats.push(set.mean_r),
            Err(e) => {
                failed += 1;
                last_error = Some(e);
            }
        }
    }
    if failed * 100 > jobs.len() {
        log::error!("last sample failure: {:?}", last_error);
        return Err(Error::TooManyFailures { point: "ensemble".into(), failed, total: jobs.len() });
    }
    Ok(EnsembleMean { mean: stats.mean(), std_error: stats.std_error(), samples: stats.count() as usize, failed })
}
