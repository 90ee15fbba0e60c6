//! Null calibration and decisions: the indicator-summand covariance `Ω̂`,
//! its spectrum, the Monte Carlo weighted chi-square null, the omnibus test
//! and the fixed-cell z-test.

mod covariance;
mod null;
mod omnibus;

pub use covariance::{
    auto_bandwidth, bartlett_weight, eigenvalues, estimate_omega, indicator_summands,
    CovarianceEstimate, SummandMatrix, MIN_SUMMAND_ROWS,
};
pub use null::{
    critical_value, mc_null_sample, mc_p_value, NullSpec, DEFAULT_REPLICATES, MIN_REPLICATES,
};
pub use omnibus::{
    fixed_cell_test, omnibus_test, Bandwidth, CriticalValue, FixedCellResult, OmnibusConfig,
    SigmaMode, TestResult,
};
