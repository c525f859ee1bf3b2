//! CSV tables and run manifests.
//!
//! Every table starts with a comment line carrying the format version and the
//! file name of the manifest that produced it, followed by a fixed header. Floats
//! are written with 17 significant digits so reruns can be compared byte for byte.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::{ScalingDataset, SizeSeries, TimeSeries};
use crate::dynamics::TimeGrid;
use crate::ensemble::{AggregateRecord, NeelDynamics};
use crate::error::{Error, Result};
use crate::hamiltonian::{Exponent, PairSum};

pub const LEVELSTATS_FORMAT: &str = "kickchain-levelstats/1";
pub const DYNAMICS_FORMAT: &str = "kickchain-dynamics/1";
pub const LEVELSTATS_HEADER: &str = "L,a,b,theta,tau,mean_r,stderr_r,samples,excluded";
pub const DYNAMICS_HEADER: &str = "t,mean_SvN,stderr_SvN,mean_imbalance,stderr_imbalance,samples";

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStatsRow {
    pub sites: usize,
    pub a: Exponent,
    pub b: Exponent,
    pub theta: f64,
    pub tau: f64,
    pub mean_r: f64,
    pub stderr_r: f64,
    pub samples: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRow {
    pub t: u64,
    pub mean_svn: f64,
    pub stderr_svn: f64,
    pub mean_imbalance: f64,
    pub stderr_imbalance: f64,
    pub samples: usize,
}

/// One row per grid point from `mean_r` records.
pub fn levelstats_rows(records: &[AggregateRecord]) -> Vec<LevelStatsRow> {
    records
        .iter()
        .filter(|r| r.observable == "mean_r")
        .map(|r| LevelStatsRow {
            sites: r.config.sites,
            a: r.config.a,
            b: r.config.b,
            theta: r.config.theta,
            tau: r.config.tau,
            mean_r: r.mean,
            stderr_r: r.std_error,
            samples: r.count,
            excluded: r.excluded,
        })
        .collect()
}

/// One row per time from the records of a single-point dynamics sweep.
pub fn dynamics_rows(records: &[AggregateRecord], grid: &TimeGrid) -> Result<Vec<DynamicsRow>> {
    let by_name: BTreeMap<&str, &AggregateRecord> = records.iter().map(|r| (r.observable.as_str(), r)).collect();
    if records.iter().any(|r| r.point != records[0].point) {
        return Err(Error::invalid("records", "dynamics table needs a single grid point"));
    }
    grid.times()
        .iter()
        .map(|&t| {
            let find = |name: String| {
                by_name.get(name.as_str()).copied().ok_or_else(|| Error::invalid("records", format!("missing {name}")))
            };
            let s = find(NeelDynamics::entropy_name(t))?;
            let i = find(NeelDynamics::imbalance_name(t))?;
            Ok(DynamicsRow {
                t,
                mean_svn: s.mean,
                stderr_svn: s.std_error,
                mean_imbalance: i.mean,
                stderr_imbalance: i.std_error,
                samples: s.count,
            })
        })
        .collect()
}

fn write_table<const N: usize>(
    out: &mut dyn Write,
    format: &str,
    manifest: &str,
    header: &str,
    rows: impl Iterator<Item = [String; N]>,
) -> Result<()> {
    writeln!(out, "# {format} manifest={manifest}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header.split(','))?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_levelstats(out: &mut dyn Write, rows: &[LevelStatsRow], manifest: &str) -> Result<()> {
    let cells = rows.iter().map(|r| {
        [
            r.sites.to_string(),
            format_float(r.a.0),
            format_float(r.b.0),
            format_float(r.theta),
            format_float(r.tau),
            format_float(r.mean_r),
            format_float(r.stderr_r),
            r.samples.to_string(),
            r.excluded.to_string(),
        ]
    });
    write_table(out, LEVELSTATS_FORMAT, manifest, LEVELSTATS_HEADER, cells)
}

pub fn write_dynamics(out: &mut dyn Write, rows: &[DynamicsRow], manifest: &str) -> Result<()> {
    let cells = rows.iter().map(|r| {
        [
            r.t.to_string(),
            format_float(r.mean_svn),
            format_float(r.stderr_svn),
            format_float(r.mean_imbalance),
            format_float(r.stderr_imbalance),
            r.samples.to_string(),
        ]
    });
    write_table(out, DYNAMICS_FORMAT, manifest, DYNAMICS_HEADER, cells)
}

/// A parsed table: manifest reference plus records with their 1-based line numbers.
struct Table {
    manifest: Option<String>,
    rows: Vec<(usize, csv::StringRecord)>,
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { line, reason: e.to_string() }
}

fn parse_table(text: &str, format: &str, header: &str) -> Result<Table> {
    let mut manifest = None;
    for (i, line) in text.lines().enumerate().take_while(|(_, l)| l.trim_start().starts_with('#')) {
        let mut parts = line.trim_start()[1..].split_whitespace();
        if let Some(tag) = parts.next().filter(|t| t.starts_with("kickchain-")) {
            if tag != format {
                return Err(Error::Parse { line: i + 1, reason: format!("expected format {format}, found {tag}") });
            }
        }
        manifest = parts.find_map(|p| p.strip_prefix("manifest=")).map(str::to_string).or(manifest);
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = reader.headers().map_err(csv_error)?.clone();
    let header_line = found.position().map_or(1, |p| p.line() as usize);
    if found.iter().ne(header.split(',')) {
        return Err(Error::Parse { line: header_line, reason: format!("expected header `{header}`") });
    }
    let rows = reader
        .records()
        .map(|r| {
            let r = r.map_err(csv_error)?;
            Ok((r.position().map_or(0, |p| p.line() as usize), r))
        })
        .collect::<Result<_>>()?;
    Ok(Table { manifest, rows })
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse { line, reason: format!("{name}: cannot parse `{raw}`") })
}

/// Rows plus the manifest reference, if any.
pub fn read_levelstats(text: &str) -> Result<(Vec<LevelStatsRow>, Option<String>)> {
    let table = parse_table(text, LEVELSTATS_FORMAT, LEVELSTATS_HEADER)?;
    let rows = table
        .rows
        .iter()
        .map(|(n, f)| {
            Ok(LevelStatsRow {
                sites: field(*n, "L", &f[0])?,
                a: Exponent(field(*n, "a", &f[1])?),
                b: Exponent(field(*n, "b", &f[2])?),
                theta: field(*n, "theta", &f[3])?,
                tau: field(*n, "tau", &f[4])?,
                mean_r: field(*n, "mean_r", &f[5])?,
                stderr_r: field(*n, "stderr_r", &f[6])?,
                samples: field(*n, "samples", &f[7])?,
                excluded: field(*n, "excluded", &f[8])?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((rows, table.manifest))
}

pub fn read_dynamics(text: &str) -> Result<(Vec<DynamicsRow>, Option<String>)> {
    let table = parse_table(text, DYNAMICS_FORMAT, DYNAMICS_HEADER)?;
    let rows = table
        .rows
        .iter()
        .map(|(n, f)| {
            Ok(DynamicsRow {
                t: field(*n, "t", &f[0])?,
                mean_svn: field(*n, "mean_SvN", &f[1])?,
                stderr_svn: field(*n, "stderr_SvN", &f[2])?,
                mean_imbalance: field(*n, "mean_imbalance", &f[3])?,
                stderr_imbalance: field(*n, "stderr_imbalance", &f[4])?,
                samples: field(*n, "samples", &f[5])?,
            })
        })
        .collect::<Result<_>>()?;
    Ok((rows, table.manifest))
}

/// Groups level-statistics rows by size into a collapse dataset.
///
/// All rows must share `a`, `b` and `theta`.
pub fn scaling_dataset(rows: &[LevelStatsRow]) -> Result<ScalingDataset> {
    let Some(first) = rows.first() else {
        return Err(Error::invalid("dataset", "no rows"));
    };
    if rows.iter().any(|r| r.a != first.a || r.b != first.b || r.theta != first.theta) {
        return Err(Error::invalid("dataset", "rows mix different a, b or theta values"));
    }
    let mut by_size: BTreeMap<usize, Vec<&LevelStatsRow>> = BTreeMap::new();
    for r in rows {
        by_size.entry(r.sites).or_default().push(r);
    }
    let series = by_size
        .into_iter()
        .map(|(sites, mut rs)| {
            rs.sort_by(|x, y| x.tau.total_cmp(&y.tau));
            SizeSeries {
                sites,
                tau: rs.iter().map(|r| r.tau).collect(),
                mean_r: rs.iter().map(|r| r.mean_r).collect(),
                std_error: rs.iter().map(|r| r.stderr_r).collect(),
            }
        })
        .collect();
    ScalingDataset::new(series)
}

/// Mean entanglement entropy against time, with error bars.
pub fn entropy_series(rows: &[DynamicsRow]) -> Result<TimeSeries> {
    let mut s = TimeSeries::new(rows.iter().map(|r| r.t as f64).collect(), rows.iter().map(|r| r.mean_svn).collect())?;
    s.std_error = Some(rows.iter().map(|r| r.stderr_svn).collect());
    Ok(s)
}

/// Conventions that change numerical results and are echoed into every manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub pair_sum: String,
    pub gap_ratio: String,
    pub bit_order: String,
    pub kick_distribution: String,
    pub units: String,
}

impl Conventions {
    pub fn new(pair_sum: PairSum) -> Self {
        Self {
            pair_sum: match pair_sum {
                PairSum::Single => "single: each unordered pair i<j counted once".into(),
                PairSum::Double => "double: sum over i != j, each pair counted twice".into(),
            },
            gap_ratio: "circular, wrap-around gap included, gaps < 1e-12 excluded".into(),
            bit_order: "site i at bit L-i, set bit = spin up".into(),
            kick_distribution: "theta_i uniform on [-theta/2, theta/2], quenched".into(),
            units: "hbar = 1, energies in units of the couplings, tau in 1/J, theta in radians, t in kicks".into(),
        }
    }
}

impl Default for Conventions {
    fn default() -> Self {
        Self::new(PairSum::Single)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Effective configuration after flags are applied.
    pub config: serde_json::Value,
    pub master_seed: Option<u64>,
    pub conventions: Conventions,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, master_seed: Option<u64>) -> Self {
        let started_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            master_seed,
            conventions: Conventions::default(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix,
            wall_clock_seconds: 0.0,
            stages: Vec::new(),
        }
    }

    pub fn record_stage(&mut self, stage: &str, seconds: f64) {
        self.stages.push(StageTiming { stage: stage.to_string(), seconds });
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
