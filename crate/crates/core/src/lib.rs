//! Disorder-free long-range spin-1/2 chains driven by random local Floquet kicks.
//!
//! The pipeline goes from the fixed-magnetization [`basis`] through the
//! [`hamiltonian`] and the kicked single-period operator in [`floquet`], to
//! quasi-energy [`spectral_stats`] and stroboscopic [`dynamics`]. The
//! [`ensemble`] module runs seeded disorder sweeps, [`analysis`] extracts
//! critical points and growth laws from the averages, and [`io`] holds the
//! on-disk formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod basis;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod floquet;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod spectral_stats;
pub mod stats;

pub use basis::SectorBasis;
pub use error::{Error, Result};
pub use analysis::{CollapseResult, GrowthFit, GrowthModel, ModelComparison, ScalingDataset, TimeSeries};
pub use dynamics::{SectorState, TimeGrid};
pub use ensemble::{AggregateRecord, SweepPlan};
pub use floquet::{FloquetDecomposition, FloquetModel, KickAngles};
pub use hamiltonian::{ChainConfig, Exponent, HermitianSpectrum, PairSum};
pub use io::RunManifest;
pub use spectral_stats::GapRatioSet;
pub use stats::RunningStats;

pub use faer::{c64, Mat};
