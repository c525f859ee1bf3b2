//! Benchmark fixtures shared by the criterion targets.

use kickchain::ChainConfig;

/// Uniform-coupling chain at the critical-region parameters used throughout the benches.
pub fn bench_config(sites: usize) -> ChainConfig {
    ChainConfig::uniform(sites, 1.75, std::f64::consts::PI, 0.25)
}

/// Evenly spread phases with a deterministic jitter, sorted in `(-pi, pi]`.
pub fn jittered_phases(n: usize) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut phases: Vec<f64> =
        (0..n).map(|k| -PI + TAU * (k as f64 + 0.5 + 0.3 * ((k * 7919) as f64).sin()) / n as f64).collect();
    phases.sort_by(f64::total_cmp);
    phases
}
