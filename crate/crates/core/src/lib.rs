//! Functional quantile autocorrelation and the omnibus test of serial
//! independence for functional time series.
//!
//! Curves are rows of a `T × p` matrix sampled on a common grid of `[0,1]`.
//! The pipeline maps them to pointwise quantile curves, per-curve excursion
//! fractions, binary indicator series, and finally the stacked correlation
//! vector whose squared norm is calibrated against a weighted chi-square
//! law estimated from the data.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below fix the choice.

pub mod curves;
pub mod dgp;
pub mod error;
pub mod fqa;
pub mod harness;
pub mod inference;
pub mod linalg;
pub mod quantiles;
pub mod scalar;
pub mod seed;

pub use curves::{load_csv, log_returns, read_csv, save_csv, validate, write_csv, CurveMatrix, EvalGrid};
pub use dgp::{
    contaminate, gen_brownian, gen_far1, gen_fourier_cauchy, gen_gaussian_wn, gen_noise,
    gen_t3_quadratic, gen_tfar1, Contamination, NoiseKind, ScenarioKind, ScenarioSpec,
};
pub use error::{FqaError, Result, Violation};
pub use fqa::{
    fqa_hat, fqa_vector, joint_prob, marginal_prob, omnibus_stat, Cell, FqaGrid, FqaParams,
    FqaVector, OmnibusStatistic,
};
pub use harness::{
    run_data_test, run_power, run_size, shuffle_series, time_pipeline, DataTestConfig,
    ExperimentReport, ExperimentSpec, Sweep,
};
pub use inference::{
    fixed_cell_test, omnibus_test, Bandwidth, FixedCellResult, OmnibusConfig, SigmaMode,
    TestResult,
};
pub use quantiles::{
    excursion_fraction, excursion_table, quantile_curves, ExcursionTable, QuantileCurveSet,
};
pub use scalar::Scalar;
pub use seed::derive_seed;

pub type CurveMatrix64 = CurveMatrix<f64>;
pub type CurveMatrix32 = CurveMatrix<f32>;
pub type FqaGrid64 = FqaGrid<f64>;
pub type FqaGrid32 = FqaGrid<f32>;
pub type FqaParams64 = FqaParams<f64>;
pub type FqaParams32 = FqaParams<f32>;
pub type FqaVector64 = FqaVector<f64>;
pub type FqaVector32 = FqaVector<f32>;
pub type ExcursionTable64 = ExcursionTable<f64>;
pub type ExcursionTable32 = ExcursionTable<f32>;
pub type OmnibusConfig64 = OmnibusConfig<f64>;
pub type OmnibusConfig32 = OmnibusConfig<f32>;
