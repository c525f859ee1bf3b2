//! Seeded disorder sweeps over chain configurations.
//!
//! A [`SweepPlan`] expands into grid points (the Cartesian product of its axes)
//! times sample indices. The kick angles of each job are seeded by
//! [`derive_seed`]`(master, point, sample)`, so a job's randomness does not depend
//! on scheduling. Per-sample observables are buffered and reduced in sample order,
//! which makes the aggregates bit-identical for any worker count.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::dynamics::{for_each_time, neel_state, HalfChainCut, ImbalanceWeights, TimeGrid};
use crate::error::{Error, Result};
use crate::floquet::{diagonalize_unitary, FloquetModel};
use crate::hamiltonian::{hamiltonian_spectrum, ChainConfig, Exponent, HamiltonianKey, HermitianSpectrum};
use crate::spectral_stats::sample_gap_ratios;
use crate::stats::RunningStats;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sample `sample` at grid point `point`; a pure function of its inputs.
pub fn derive_seed(master: u64, point: u64, sample: u64) -> u64 {
    mix(mix(mix(master) ^ point) ^ sample.rotate_left(32))
}

/// How the Ising exponent relates to the tunneling exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Couplings {
    /// `a` and `b` vary independently.
    #[default]
    Independent,
    /// `b = a` at every grid point; the `b` axis is ignored.
    Uniform,
}

/// Values swept along each parameter; `None` keeps the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub sites: Option<Vec<usize>>,
    pub a: Option<Vec<Exponent>>,
    pub b: Option<Vec<Exponent>>,
    pub theta: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: ChainConfig,
    pub axes: SweepAxes,
    #[serde(default)]
    pub couplings: Couplings,
    pub samples: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub config: ChainConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Job {
    pub point: usize,
    pub sample: u64,
    pub seed: u64,
}

/// Grid points in sweep order (`L`, `a`, `b`, `theta`, `tau`; `tau` fastest) and their jobs.
#[derive(Clone, Debug, PartialEq)]
pub struct JobList {
    pub points: Vec<GridPoint>,
    pub jobs: Vec<Job>,
}

fn axis<T: Clone>(name: &'static str, values: &Option<Vec<T>>, base: T) -> Result<Vec<T>> {
    match values {
        None => Ok(vec![base]),
        Some(v) if v.is_empty() => Err(Error::invalid(name, "sweep axis is empty")),
        Some(v) => Ok(v.clone()),
    }
}

/// Expands a plan into its ordered job list.
pub fn plan_sweep(plan: &SweepPlan) -> Result<JobList> {
    if plan.samples == 0 {
        return Err(Error::invalid("samples", "need at least one sample per point"));
    }
    let base = &plan.base;
    let sites = axis("sites", &plan.axes.sites, base.sites)?;
    let a_axis = axis("a", &plan.axes.a, base.a)?;
    let b_axis = match plan.couplings {
        Couplings::Independent => axis("b", &plan.axes.b, base.b)?,
        Couplings::Uniform => vec![base.b],
    };
    let theta = axis("theta", &plan.axes.theta, base.theta)?;
    let tau = axis("tau", &plan.axes.tau, base.tau)?;

    let mut points = Vec::new();
    for &l in &sites {
        for &a in &a_axis {
            for &b in &b_axis {
                for &th in &theta {
                    for &t in &tau {
                        let b = if plan.couplings == Couplings::Uniform { a } else { b };
                        let config = ChainConfig { sites: l, a, b, theta: th, tau: t, ..base.clone() };
                        config.validate()?;
                        points.push(GridPoint { index: points.len(), config });
                    }
                }
            }
        }
    }
    let jobs: Vec<Job> = points
        .iter()
        .flat_map(|p| {
            (0..plan.samples as u64).map(move |s| Job {
                point: p.index,
                sample: s,
                seed: derive_seed(plan.master_seed, p.index as u64, s),
            })
        })
        .collect();
    let mut seeds: Vec<u64> = jobs.iter().map(|j| j.seed).collect();
    seeds.sort_unstable();
    if seeds.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("master_seed", "derived sample seeds collide; choose another master seed"));
    }
    Ok(JobList { points, jobs })
}

/// A per-sample measurement producing a fixed list of named scalars.
pub trait Observable: Sync {
    fn names(&self) -> Vec<String>;
    fn evaluate(&self, model: &FloquetModel, seed: u64) -> Result<Vec<f64>>;
}

/// Per-sample mean gap ratio of the quasi-energy spectrum.
#[derive(Clone, Copy, Debug, Default)]
pub struct LevelStatistics;

impl Observable for LevelStatistics {
    fn names(&self) -> Vec<String> {
        vec!["mean_r".to_string()]
    }

    fn evaluate(&self, model: &FloquetModel, seed: u64) -> Result<Vec<f64>> {
        Ok(vec![sample_gap_ratios(model, seed)?.mean_r])
    }
}

/// Entanglement entropy and imbalance of the evolved Néel state on a time grid.
///
/// Output order: `SvN` at every time, then `imbalance` at every time.
#[derive(Clone, Debug)]
pub struct NeelDynamics {
    pub grid: TimeGrid,
}

impl NeelDynamics {
    pub fn entropy_name(t: u64) -> String {
        format!("SvN@{t}")
    }

    pub fn imbalance_name(t: u64) -> String {
        format!("imbalance@{t}")
    }
}

impl Observable for NeelDynamics {
    fn names(&self) -> Vec<String> {
        let t = self.grid.times();
        t.iter().map(|&t| Self::entropy_name(t)).chain(t.iter().map(|&t| Self::imbalance_name(t))).collect()
    }

    fn evaluate(&self, model: &FloquetModel, seed: u64) -> Result<Vec<f64>> {
        let basis = &model.basis;
        let u = model.operator(&model.kick(seed)?)?;
        let decomp = diagonalize_unitary(u.as_ref())?;
        let cut = HalfChainCut::new(basis)?;
        let weights = ImbalanceWeights::new(basis);
        let n = self.grid.len();
        let mut out = vec![0.0; 2 * n];
        let mut k = 0;
        for_each_time(&decomp, &neel_state(basis)?, &self.grid, |_, psi| {
            out[k] = cut.entropy(&psi)?;
            out[n + k] = weights.imbalance(&psi)?;
            k += 1;
            Ok(())
        })?;
        Ok(out)
    }
}

/// Ensemble statistics of one observable at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub point: usize,
    pub config: ChainConfig,
    pub observable: String,
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
    /// Failed samples left out of the average.
    pub excluded: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointEntry {
    point: usize,
    records: Vec<AggregateRecord>,
}

fn fingerprint(plan: &SweepPlan, names: &[String]) -> Result<String> {
    let text = serde_json::to_string(&(plan, names))?;
    // FNV-1a of the serialized plan and observable names
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in text.bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    Ok(format!("{h:016x}"))
}

fn load_checkpoint(path: &Path, expected: &str) -> Result<Vec<CheckpointEntry>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let Some(header) = lines.next() else { return Ok(Vec::new()) };
    let header: CheckpointHeader = serde_json::from_str(&header?)?;
    if header.fingerprint != expected {
        return Err(Error::invalid("checkpoint", format!("{} belongs to a different sweep", path.display())));
    }
    let mut entries = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted run is dropped
        match serde_json::from_str::<CheckpointEntry>(&line) {
            Ok(e) => entries.push(e),
            Err(_) => break,
        }
    }
    Ok(entries)
}

/// Runs every job with at most `workers` concurrent samples.
pub fn run_sweep(plan: &SweepPlan, workers: usize, observable: &dyn Observable) -> Result<Vec<AggregateRecord>> {
    run_sweep_with_checkpoint(plan, workers, observable, None)
}

/// Like [`run_sweep`], appending each finished grid point to `checkpoint` and
/// skipping points already recorded there by an identical plan.
pub fn run_sweep_with_checkpoint(
    plan: &SweepPlan,
    workers: usize,
    observable: &dyn Observable,
    checkpoint: Option<&Path>,
) -> Result<Vec<AggregateRecord>> {
    if workers == 0 {
        return Err(Error::invalid("workers", "need at least one worker"));
    }
    let list = plan_sweep(plan)?;
    let names = observable.names();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    // sequential dense kernels regardless of worker count
    faer::set_global_parallelism(faer::Par::Seq);

    let mut done: Vec<Option<Vec<AggregateRecord>>> = vec![None; list.points.len()];
    let mut sink = None;
    if let Some(path) = checkpoint {
        let fp = fingerprint(plan, &names)?;
        let entries = load_checkpoint(path, &fp)?;
        let fresh = entries.is_empty();
        for e in entries {
            if e.point < done.len() {
                done[e.point] = Some(e.records);
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            file.set_len(0)?;
            writeln!(file, "{}", serde_json::to_string(&CheckpointHeader { fingerprint: fp })?)?;
        }
        sink = Some(file);
    }

    let mut basis: Option<Arc<SectorBasis>> = None;
    let mut spectrum: Option<(HamiltonianKey, Arc<HermitianSpectrum>)> = None;
    let mut records = Vec::new();
    for point in &list.points {
        if let Some(r) = done[point.index].take() {
            records.extend(r);
            continue;
        }
        let config = &point.config;
        if basis.as_ref().is_none_or(|b| b.sites() != config.sites) {
            basis = Some(Arc::new(SectorBasis::half_filling(config.sites)?));
        }
        let basis = basis.clone().unwrap();
        let key = config.hamiltonian_key();
        if spectrum.as_ref().is_none_or(|(k, _)| *k != key) {
            spectrum = Some((key, Arc::new(hamiltonian_spectrum(config, &basis)?)));
        }
        let model = FloquetModel::new(config, basis, &spectrum.as_ref().unwrap().1)?;

        let jobs: Vec<&Job> = list.jobs.iter().filter(|j| j.point == point.index).collect();
        let results: Vec<Result<Vec<f64>>> =
            pool.install(|| jobs.par_iter().map(|job| observable.evaluate(&model, job.seed)).collect());

        let mut acc = vec![RunningStats::new(); names.len()];
        let mut failed = 0;
        for (job, result) in jobs.iter().zip(results) {
            match result {
                Ok(values) if values.len() == names.len() => {
                    for (a, v) in acc.iter_mut().zip(values) {
                        a.push(v);
                    }
                }
                Ok(values) => {
                    return Err(Error::DimensionMismatch {
                        context: "observable output",
                        expected: names.len(),
                        found: values.len(),
                    })
                }
                Err(e) => {
                    log::warn!("sample {} at [{}] failed: {e}", job.sample, config);
                    failed += 1;
                }
            }
        }
        if failed * 100 > jobs.len() {
            return Err(Error::TooManyFailures { point: config.to_string(), failed, total: jobs.len() });
        }
        let point_records: Vec<AggregateRecord> = names
            .iter()
            .zip(&acc)
            .map(|(name, s)| AggregateRecord {
                point: point.index,
                config: config.clone(),
                observable: name.clone(),
                mean: s.mean(),
                std_error: s.std_error(),
                count: s.count() as usize,
                excluded: failed,
            })
            .collect();
        if let Some(file) = sink.as_mut() {
            let entry = CheckpointEntry { point: point.index, records: point_records.clone() };
            writeln!(file, "{}", serde_json::to_string(&entry)?)?;
            file.flush()?;
        }
        log::info!("finished grid point {} of {} [{}]", point.index + 1, list.points.len(), config);
        records.extend(point_records);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(samples: usize) -> SweepPlan {
        SweepPlan {
            base: ChainConfig::uniform(6, 1.5, std::f64::consts::PI, 0.2),
            axes: SweepAxes::default(),
            couplings: Couplings::Uniform,
            samples,
            master_seed: 17,
        }
    }

    #[test]
    fn single_point_three_samples() {
        let list = plan_sweep(&plan(3)).unwrap();
        assert_eq!(list.points.len(), 1);
        assert_eq!(list.jobs.len(), 3);
        let mut seeds: Vec<u64> = list.jobs.iter().map(|j| j.seed).collect();
        seeds.dedup();
        assert_eq!(seeds.len(), 3);
    }

    #[test]
    fn product_grid_and_determinism() {
        let mut p = plan(10);
        p.couplings = Couplings::Independent;
        p.axes.tau = Some(vec![0.1, 0.2]);
        p.axes.a = Some(vec![Exponent(1.0), Exponent(2.0)]);
        let list = plan_sweep(&p).unwrap();
        assert_eq!(list.points.len(), 4);
        assert_eq!(list.jobs.len(), 40);
        assert_eq!(list, plan_sweep(&p).unwrap());
    }

    #[test]
    fn uniform_couplings_tie_b_to_a() {
        let mut p = plan(1);
        p.axes.a = Some(vec![Exponent(1.0), Exponent(3.0)]);
        p.axes.b = Some(vec![Exponent(9.0)]);
        let list = plan_sweep(&p).unwrap();
        assert!(list.points.iter().all(|g| g.config.a == g.config.b));
    }

    #[test]
    fn empty_axis_and_zero_samples_rejected() {
        let mut p = plan(1);
        p.axes.tau = Some(vec![]);
        assert!(plan_sweep(&p).is_err());
        assert!(plan_sweep(&plan(0)).is_err());
    }

    #[test]
    fn seeds_are_distinct_across_points_and_samples() {
        let mut seen = std::collections::HashSet::new();
        for point in 0..50 {
            for sample in 0..200 {
                assert!(seen.insert(derive_seed(1, point, sample)));
            }
        }
    }

    #[test]
    fn no_kick_means_no_variance() {
        let mut p = plan(4);
        p.base.theta = 0.0;
        p.axes.tau = Some(vec![0.3, 0.9]);
        let records = run_sweep(&p, 1, &LevelStatistics).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.std_error == 0.0 && r.count == 4));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut p = plan(6);
        p.axes.tau = Some(vec![0.2, 0.8]);
        let one = run_sweep(&p, 1, &LevelStatistics).unwrap();
        let three = run_sweep(&p, 3, &LevelStatistics).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn checkpoint_resume_reproduces_the_sweep() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.ckpt");
        let mut p = plan(3);
        p.axes.tau = Some(vec![0.2, 0.5, 0.8]);
        let full = run_sweep_with_checkpoint(&p, 1, &LevelStatistics, Some(&path)).unwrap();
        // drop the last point and resume
        let text = std::fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().take(3).collect();
        std::fs::write(&path, kept.join("\n") + "\n").unwrap();
        let resumed = run_sweep_with_checkpoint(&p, 1, &LevelStatistics, Some(&path)).unwrap();
        assert_eq!(full, resumed);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);

        let mut other = p.clone();
        other.master_seed += 1;
        assert!(run_sweep_with_checkpoint(&other, 1, &LevelStatistics, Some(&path)).is_err());
    }
}
