//! Scaling collapse of level statistics and growth-law fits of entanglement.

pub mod collapse;
pub mod growth;
pub mod optim;

pub use collapse::{collapse_quality, fit_collapse, CLEAN_QUALITY_MAX, CollapseResult, ScalingDataset, SearchBox, SizeSeries};
pub use growth::{
    compare_growth_models, compare_models, default_window, fit_growth, fit_log_power, FitWindow, GrowthFit,
    GrowthModel, ModelComparison, Preference, TimeSeries,
};
