//! Command-line driver: sweeps write CSV tables, analyses read them and write JSON.
//!
//! Each command also writes `<out>.manifest.json` describing the run, and every
//! output names that manifest.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use kickchain::analysis::{
    compare_growth_models, default_window, fit_collapse, fit_growth, FitWindow, GrowthFit, GrowthModel, Preference,
    SearchBox,
};
use kickchain::dynamics::TimeGrid;
use kickchain::ensemble::{run_sweep_with_checkpoint, LevelStatistics, NeelDynamics};
use kickchain::io::{self, Conventions, RunManifest};
use kickchain::Error;

use config::{Overrides, RunConfig, DEFAULT_TIME_POINTS, DEFAULT_T_MAX};

/// Late-time window used by `--expect-imbalance`.
pub const IMBALANCE_WINDOW: (f64, f64) = (1e3, 1e4);

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Check(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Check(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "kickchain", version, about = "Randomly kicked long-range spin chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean gap ratio of the Floquet spectrum on a parameter grid.
    Levelstats(SweepArgs),
    /// Entanglement entropy and imbalance after a quench from the Neel state.
    Dynamics(SweepArgs),
    /// Finite-size scaling collapse of a level-statistics table.
    Collapse(CollapseArgs),
    /// Growth-law fits of the entropy in a dynamics table.
    Fit(FitArgs),
}

/// `LO:HI`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range(pub f64, pub f64);

impl std::str::FromStr for Range {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or("expected LO:HI")?;
        let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
        let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err("lower bound exceeds upper bound".into());
        }
        Ok(Range(lo, hi))
    }
}

impl Range {
    fn contains(self, x: f64) -> bool {
        self.0 <= x && x <= self.1
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Last sampled kick count (dynamics).
    #[arg(long)]
    pub t_max: Option<u64>,
    /// Checkpoint file; defaults to `<out>.checkpoint`, removed after success.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Exit with code 3 unless every mean gap ratio lies in LO:HI (levelstats).
    #[arg(long, value_name = "LO:HI")]
    pub expect_mean_r: Option<Range>,
    /// Exit with code 3 unless the mean imbalance over 1e3 <= t <= 1e4 lies in LO:HI (dynamics).
    #[arg(long, value_name = "LO:HI")]
    pub expect_imbalance: Option<Range>,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    /// Level-statistics CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_name = "LO:HI", default_value = "0.01:1.5")]
    pub tau_c: Range,
    #[arg(long, value_name = "LO:HI", default_value = "0.2:5")]
    pub nu: Range,
    /// Grid points per axis of the initial scan.
    #[arg(long, default_value_t = 41)]
    pub grid: usize,
    /// Exit with code 3 unless the collapse converges away from the box edges.
    #[arg(long)]
    pub expect_clean: bool,
    #[arg(long, value_name = "LO:HI")]
    pub expect_tau_c: Option<Range>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Dynamics CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Window start; default 10.
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Window end; default where the entropy reaches 95% of its plateau.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Exit with code 3 unless (ln t)^gamma is preferred over t^gamma.
    #[arg(long)]
    pub expect_log_power: bool,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn write_manifest(manifest: &mut RunManifest, out: &Path, started: Instant) -> Result<(), Failure> {
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let path = manifest_path(out);
    std::fs::write(&path, manifest.to_json()? + "\n").map_err(|e| io_failure(&path, e))
}

fn json_value<T: Serialize>(v: &T) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Usage(e.to_string()))
}

struct Prepared {
    config: RunConfig,
    manifest: RunManifest,
    checkpoint: PathBuf,
}

fn prepare(command: &str, args: &SweepArgs) -> Result<Prepared, Failure> {
    let mut config = RunConfig::load(&args.config)?;
    config.apply(&Overrides { samples: args.samples, seed: args.seed, workers: args.workers, t_max: args.t_max });
    if config.workers() == 0 {
        return Err(Failure::Usage("invalid `workers`: need at least one".into()));
    }
    let checkpoint = args
        .checkpoint
        .clone()
        .or_else(|| config.checkpoint.clone())
        .unwrap_or_else(|| {
            let mut name = args.out.as_os_str().to_os_string();
            name.push(".checkpoint");
            PathBuf::from(name)
        });
    let mut manifest = RunManifest::new(command, json_value(&config)?, Some(config.seed()));
    manifest.conventions = Conventions::new(config.pair_sum);
    manifest.inputs.push(args.config.display().to_string());
    manifest.outputs.push(file_name(&args.out));
    Ok(Prepared { config, manifest, checkpoint })
}

pub fn cmd_levelstats(args: &SweepArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let Prepared { config, mut manifest, checkpoint } = prepare("levelstats", args)?;
    let plan = config.sweep_plan()?;

    let t = Instant::now();
    let records = run_sweep_with_checkpoint(&plan, config.workers(), &LevelStatistics, Some(&checkpoint))?;
    manifest.record_stage("sweep", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let rows = io::levelstats_rows(&records);
    let mut out = create(&args.out)?;
    io::write_levelstats(&mut out, &rows, &file_name(&manifest_path(&args.out)))?;
    out.flush().map_err(|e| io_failure(&args.out, e))?;
    manifest.record_stage("write", t.elapsed().as_secs_f64());
    write_manifest(&mut manifest, &args.out, started)?;
    let _ = std::fs::remove_file(&checkpoint);

    if let Some(range) = args.expect_mean_r {
        if let Some(bad) = rows.iter().find(|r| !range.contains(r.mean_r)) {
            return Err(Failure::Check(format!(
                "mean_r = {} at L={} tau={} outside [{}, {}]",
                bad.mean_r, bad.sites, bad.tau, range.0, range.1
            )));
        }
    }
    Ok(())
}

pub fn cmd_dynamics(args: &SweepArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let Prepared { config, mut manifest, checkpoint } = prepare("dynamics", args)?;
    let plan = config.sweep_plan()?;
    let single = [
        config.sites.values().len(),
        config.a.values().len(),
        config.b.as_ref().map_or(1, |b| b.values().len()),
        config.theta.values().len(),
        config.tau.values().len(),
    ];
    if single.iter().any(|&n| n != 1) {
        return Err(Failure::Usage("dynamics takes a single parameter point (no lists)".into()));
    }
    if plan.base.sites % 2 != 0 {
        return Err(Failure::Usage(format!("invalid `sites`: the Neel state needs even L, got {}", plan.base.sites)));
    }
    let t_max = config.t_max.unwrap_or(DEFAULT_T_MAX);
    let grid = TimeGrid::log_spaced(config.time_points.unwrap_or(DEFAULT_TIME_POINTS), t_max)?.with_origin();
    let observable = NeelDynamics { grid: grid.clone() };

    let t = Instant::now();
    let records = run_sweep_with_checkpoint(&plan, config.workers(), &observable, Some(&checkpoint))?;
    manifest.record_stage("sweep", t.elapsed().as_secs_f64());

    let t = Instant::now();
    let rows = io::dynamics_rows(&records, &grid)?;
    let mut out = create(&args.out)?;
    io::write_dynamics(&mut out, &rows, &file_name(&manifest_path(&args.out)))?;
    out.flush().map_err(|e| io_failure(&args.out, e))?;
    manifest.record_stage("write", t.elapsed().as_secs_f64());
    write_manifest(&mut manifest, &args.out, started)?;
    let _ = std::fs::remove_file(&checkpoint);

    if let Some(range) = args.expect_imbalance {
        let (lo, hi) = IMBALANCE_WINDOW;
        let window: Vec<f64> =
            rows.iter().filter(|r| (lo..=hi).contains(&(r.t as f64))).map(|r| r.mean_imbalance).collect();
        if window.is_empty() {
            return Err(Failure::Check(format!("no sampled times in [{lo}, {hi}]")));
        }
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        if !range.contains(mean) {
            return Err(Failure::Check(format!("late-time imbalance {mean} outside [{}, {}]", range.0, range.1)));
        }
    }
    Ok(())
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

#[derive(Serialize)]
struct TraceSummary {
    grid_evaluations: usize,
    simplex_iterations: usize,
    simplex_converged: bool,
    grid_best: Option<kickchain::analysis::collapse::TraceEntry>,
    final_entry: Option<kickchain::analysis::collapse::TraceEntry>,
}

#[derive(Serialize)]
struct CollapseReport {
    manifest: String,
    input: String,
    input_manifest: Option<String>,
    search_box: SearchBox,
    tau_c: f64,
    nu: f64,
    quality: f64,
    on_boundary: bool,
    clean: bool,
    trace: TraceSummary,
}

pub fn cmd_collapse(args: &CollapseArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let text = read_input(&args.input)?;
    let (rows, input_manifest) = io::read_levelstats(&text)?;
    let data = io::scaling_dataset(&rows)?;
    if args.grid < 21 {
        return Err(Failure::Usage("invalid `grid`: need at least 21 points per axis".into()));
    }
    let search = SearchBox { tau_c: (args.tau_c.0, args.tau_c.1), nu: (args.nu.0, args.nu.1), grid: args.grid };
    let mut manifest = RunManifest::new("collapse", json_value(&search)?, None);
    manifest.inputs.push(args.input.display().to_string());
    manifest.outputs.push(file_name(&args.out));

    let t = Instant::now();
    let result = fit_collapse(&data, &search)?;
    manifest.record_stage("collapse", t.elapsed().as_secs_f64());

    let grid_best = result
        .trace
        .iter()
        .filter(|e| e.stage == "grid")
        .min_by(|x, y| x.quality.total_cmp(&y.quality))
        .cloned();
    let report = CollapseReport {
        manifest: file_name(&manifest_path(&args.out)),
        input: file_name(&args.input),
        input_manifest,
        search_box: search,
        tau_c: result.tau_c,
        nu: result.nu,
        quality: result.quality,
        on_boundary: result.on_boundary,
        clean: result.is_clean(),
        trace: TraceSummary {
            grid_evaluations: result.grid_evaluations,
            simplex_iterations: result.trace.iter().filter(|e| e.stage == "simplex").count(),
            simplex_converged: result.simplex_converged,
            grid_best,
            final_entry: result.trace.last().cloned(),
        },
    };
    write_json(&args.out, &report)?;
    write_manifest(&mut manifest, &args.out, started)?;

    if args.expect_clean && !result.is_clean() {
        return Err(Failure::Check(format!(
            "collapse not clean (on_boundary = {}, converged = {}, quality = {})",
            result.on_boundary, result.simplex_converged, result.quality
        )));
    }
    if let Some(range) = args.expect_tau_c {
        if !range.contains(result.tau_c) {
            return Err(Failure::Check(format!("tau_c = {} outside [{}, {}]", result.tau_c, range.0, range.1)));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    manifest: String,
    input: String,
    input_manifest: Option<String>,
    window: FitWindow,
    log_power: GrowthFit,
    algebraic: GrowthFit,
    log_power_leading: Option<GrowthFit>,
    /// Algebraic residual over log-power residual.
    residual_ratio: f64,
    preference: Preference,
    preferred_model: Option<GrowthModel>,
}

pub fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let text = read_input(&args.input)?;
    let (rows, input_manifest) = io::read_dynamics(&text)?;
    let series = io::entropy_series(&rows)?;
    let mut window = match (args.t_min, args.t_max) {
        (Some(lo), Some(hi)) => FitWindow { t_min: lo, t_max: hi },
        _ => default_window(&series)?,
    };
    if let Some(lo) = args.t_min {
        window.t_min = lo;
    }
    if let Some(hi) = args.t_max {
        window.t_max = hi;
    }
    let mut manifest = RunManifest::new("fit", json_value(&window)?, None);
    manifest.inputs.push(args.input.display().to_string());
    manifest.outputs.push(file_name(&args.out));

    let t = Instant::now();
    let comparison = compare_growth_models(&series, window)?;
    let leading = fit_growth(&series, window, GrowthModel::LogPowerLeading).ok();
    manifest.record_stage("fit", t.elapsed().as_secs_f64());

    let report = FitReport {
        manifest: file_name(&manifest_path(&args.out)),
        input: file_name(&args.input),
        input_manifest,
        window,
        residual_ratio: comparison.residual_ratio,
        preference: comparison.preference,
        preferred_model: comparison.preferred_model(),
        log_power: comparison.first,
        algebraic: comparison.second,
        log_power_leading: leading,
    };
    write_json(&args.out, &report)?;
    write_manifest(&mut manifest, &args.out, started)?;

    if args.expect_log_power && report.preferred_model != Some(GrowthModel::LogPower) {
        return Err(Failure::Check(format!(
            "log-power growth not preferred (residual ratio {})",
            report.residual_ratio
        )));
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Levelstats(a) => cmd_levelstats(a),
        Command::Dynamics(a) => cmd_dynamics(a),
        Command::Collapse(a) => cmd_collapse(a),
        Command::Fit(a) => cmd_fit(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!("0.1:0.4".parse::<Range>().unwrap(), Range(0.1, 0.4));
        assert!("0.4:0.1".parse::<Range>().is_err());
        assert!("0.4".parse::<Range>().is_err());
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("/x/run.csv")), PathBuf::from("/x/run.csv.manifest.json"));
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::NoOverlap).exit_code(), 2);
        assert_eq!(Failure::from(Error::Parse { line: 3, reason: "x".into() }).exit_code(), 1);
        assert_eq!(Failure::Check(String::new()).exit_code(), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
