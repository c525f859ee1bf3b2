//! Flat TOML run configuration.
//!
//! ```toml
//! sites = [8, 10, 12]
//! a = 1.75            # tunneling exponent, `inf` for nearest neighbour
//! # b = 1.75          # Ising exponent; omit to tie b to a
//! theta = 3.141592653589793
//! tau = [0.05, 0.1, 0.2]
//! samples = 300
//! seed = 2024
//! pair_sum = "single" # or "double" to count every pair twice
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kickchain::ensemble::{Couplings, SweepAxes, SweepPlan};
use kickchain::{ChainConfig, Exponent, PairSum};

use crate::Failure;

/// A scalar or a list of values for a sweep axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Axis<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Axis::One(v) => vec![v.clone()],
            Axis::Many(v) => v.clone(),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Chain lengths `L`.
    pub sites: Axis<usize>,
    #[serde(default = "one")]
    pub jx: f64,
    #[serde(default = "one")]
    pub jz: f64,
    pub a: Axis<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Axis<f64>>,
    /// Kick strength in radians.
    pub theta: Axis<f64>,
    /// Drive period in units of `1/J`.
    pub tau: Axis<f64>,
    /// `single` (pairs i<j) or `double` (all i != j).
    #[serde(default)]
    pub pair_sum: PairSum,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Last sampled kick count for dynamics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_T_MAX: u64 = 1_000_000;
pub const DEFAULT_TIME_POINTS: usize = 120;

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub t_max: Option<u64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Usage(format!("invalid config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        self.samples = o.samples.or(self.samples);
        self.seed = o.seed.or(self.seed);
        self.workers = o.workers.or(self.workers);
        self.t_max = o.t_max.or(self.t_max);
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan, Failure> {
        fn first<T: Copy>(name: &str, v: &[T]) -> Result<T, Failure> {
            v.first().copied().ok_or_else(|| Failure::Usage(format!("invalid `{name}`: empty list")))
        }
        let sites = self.sites.values();
        let a: Vec<Exponent> = self.a.values().into_iter().map(Exponent).collect();
        let b: Option<Vec<Exponent>> = self.b.as_ref().map(|b| b.values().into_iter().map(Exponent).collect());
        let theta = self.theta.values();
        let tau = self.tau.values();
        let base = ChainConfig {
            sites: first("sites", &sites)?,
            jx: self.jx,
            jz: self.jz,
            a: first("a", &a)?,
            b: match &b {
                Some(b) => first("b", b)?,
                None => first("a", &a)?,
            },
            theta: first("theta", &theta)?,
            tau: first("tau", &tau)?,
            pair_sum: self.pair_sum,
        };
        let couplings = if b.is_some() { Couplings::Independent } else { Couplings::Uniform };
        Ok(SweepPlan {
            base,
            axes: SweepAxes { sites: Some(sites), a: Some(a), b, theta: Some(theta), tau: Some(tau) },
            couplings,
            samples: self.samples.unwrap_or(DEFAULT_SAMPLES),
            master_seed: self.seed(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_and_lists() {
        let c = RunConfig::parse("sites = [8, 10]\na = inf\ntheta = 3.0\ntau = [0.1, 0.2]\n").unwrap();
        assert_eq!(c.sites.values(), vec![8, 10]);
        assert!(c.a.values()[0].is_infinite());
        let plan = c.sweep_plan().unwrap();
        assert_eq!(plan.couplings, Couplings::Uniform);
        assert_eq!(plan.samples, DEFAULT_SAMPLES);
        assert_eq!(plan.base.jx, 1.0);
        assert_eq!(plan.base.pair_sum, PairSum::Single);
        let d = RunConfig::parse("sites = 8\na = 1\ntheta = 1\ntau = 1\npair_sum = \"double\"\n").unwrap();
        assert_eq!(d.sweep_plan().unwrap().base.pair_sum, PairSum::Double);
        assert!(RunConfig::parse("sites = 8\na = 1\ntheta = 1\ntau = 1\npair_sum = \"triple\"\n").is_err());
    }

    #[test]
    fn unknown_key_is_named() {
        match RunConfig::parse("sites = 8\na = 1\ntheta = 1\ntau = 1\nbogus = 2\n") {
            Err(Failure::Usage(msg)) => assert!(msg.contains("bogus"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::parse("sites = 8\na = 1\ntheta = 1\ntau = 1\nsamples = 5\nseed = 9\n").unwrap();
        c.apply(&Overrides { samples: Some(7), ..Default::default() });
        assert_eq!(c.samples, Some(7));
        assert_eq!(c.seed(), 9);
    }
}
