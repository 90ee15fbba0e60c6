//! The omnibus test at a single lag and the fixed-cell z-test.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use super::covariance::{auto_bandwidth, cell_summands, estimate_omega, indicator_summands};
use super::null::{critical_value, mc_null_sample, mc_p_value, NullSpec, DEFAULT_REPLICATES, MIN_REPLICATES};
use crate::curves::CurveMatrix;
use crate::error::{FqaError, Result};
use crate::fqa::{cell_estimate, fqa_vector, omnibus_stat, FqaGrid, FqaParams, Indicator};
use crate::quantiles::{excursion_table, quantile_curves};
use crate::scalar::{same_level, Scalar};

/// Lag-window half-width used for `Ω̂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bandwidth {
    /// `⌊T^{1/3}⌋`.
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Auto => serializer.serialize_str("auto"),
            Bandwidth::Fixed(h) => serializer.serialize_u64(*h as u64),
        }
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = FqaError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Bandwidth::Auto);
        }
        s.parse()
            .map(Bandwidth::Fixed)
            .map_err(|_| FqaError::param("bandwidth", format!("{s:?} is neither \"auto\" nor a size")))
    }
}

impl Bandwidth {
    pub fn resolve(self, series_len: usize) -> usize {
        match self {
            Bandwidth::Auto => auto_bandwidth(series_len),
            Bandwidth::Fixed(h) => h,
        }
    }
}

/// Settings of one omnibus test.
#[derive(Debug, Clone, PartialEq)]
pub struct OmnibusConfig<F> {
    pub lag: usize,
    pub grid: FqaGrid<F>,
    pub alphas: Vec<f64>,
    pub mc_replicates: usize,
    pub seed: u64,
    pub bandwidth: Bandwidth,
}

impl<F: Scalar> OmnibusConfig<F> {
    /// Lag `l`, reduced grid over `{0.05, …, 0.95}`, `α = 0.05`,
    /// 10 000 Monte Carlo draws and automatic bandwidth.
    pub fn new(lag: usize, seed: u64) -> Self {
        OmnibusConfig {
            lag,
            grid: FqaGrid::default_reduced(),
            alphas: vec![0.05],
            mc_replicates: DEFAULT_REPLICATES,
            seed,
            bandwidth: Bandwidth::Auto,
        }
    }

    fn check(&self) -> Result<()> {
        if self.mc_replicates < MIN_REPLICATES {
            return Err(FqaError::param(
                "mc_replicates",
                format!("{} is below the minimum of {MIN_REPLICATES}", self.mc_replicates),
            ));
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(FqaError::param("alpha", format!("{a} is outside (0,1)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalValue {
    pub alpha: f64,
    pub value: f64,
}

/// Outcome of [`omnibus_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// `T · Ŝ_T(l)`.
    pub statistic: f64,
    pub s_hat: f64,
    pub lag: usize,
    pub series_len: usize,
    pub p_value: f64,
    pub critical_values: Vec<CriticalValue>,
    pub used_cells: usize,
    pub masked_cells: usize,
    pub null: NullSpec,
    pub runtime_seconds: f64,
}

impl TestResult {
    /// `c_{1−α}(l)` if `α` was requested.
    pub fn critical_value(&self, alpha: f64) -> Option<f64> {
        self.critical_values
            .iter()
            .find(|c| same_level(c.alpha, alpha))
            .map(|c| c.value)
    }

    /// Whether `T·Ŝ_T(l) > c_{1−α}(l)`; `None` if `α` was not requested.
    pub fn rejects(&self, alpha: f64) -> Option<bool> {
        self.critical_value(alpha).map(|c| self.statistic > c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl Serialize for TestResult {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            statistic: f64,
            lag: usize,
            p_value: f64,
            critical_values: BTreeMap<String, f64>,
            eigenvalue_count: usize,
            masked_cells: usize,
            degenerate_policy: &'static str,
            seed: u64,
            #[serde(rename = "M")]
            replicates: usize,
            bandwidth: usize,
            series_len: usize,
            s_hat: f64,
            runtime_seconds: f64,
            #[serde(skip)]
            _marker: std::marker::PhantomData<&'a ()>,
        }
        Wire {
            statistic: self.statistic,
            lag: self.lag,
            p_value: self.p_value,
            critical_values: self
                .critical_values
                .iter()
                .map(|c| (c.alpha.to_string(), c.value))
                .collect(),
            eigenvalue_count: self.null.eigenvalues.len(),
            masked_cells: self.masked_cells,
            degenerate_policy: "masked",
            seed: self.null.seed,
            replicates: self.null.replicates,
            bandwidth: self.null.bandwidth,
            series_len: self.series_len,
            s_hat: self.s_hat,
            runtime_seconds: self.runtime_seconds,
            _marker: std::marker::PhantomData,
        }
        .serialize(serializer)
    }
}

/// Omnibus test of serial independence at one lag.
///
/// Runs quantile curves → excursion table → stacked FQA vector →
/// `T·Ŝ_T(l)` → summands → `Ω̂` → eigenvalues → weighted chi-square Monte
/// Carlo sample, and reports the p-value and `c_{1−α}(l)` for every
/// requested `α`.
pub fn omnibus_test<F: Scalar>(m: &CurveMatrix<F>, config: &OmnibusConfig<F>) -> Result<TestResult> {
    config.check()?;
    let start = Instant::now();
    let t = m.len();
    let lag = config.lag;
    if lag == 0 || lag + 2 > t {
        return Err(FqaError::LagOutOfRange { lag, len: t });
    }

    let q = quantile_curves(m.view(), config.grid.levels())?;
    let table = excursion_table(m.view(), &q)?;
    let v = fqa_vector(&table, &config.grid, lag)?;
    let stat = omnibus_stat(&v)?;

    let summands = indicator_summands(&table, &config.grid, lag)?;
    let bandwidth = config.bandwidth.resolve(t);
    let omega = estimate_omega(&summands, bandwidth)?;
    let lambdas = omega.eigenvalues();
    let sample = mc_null_sample(lambdas, config.mc_replicates, config.seed);

    let statistic = stat.scaled.as_f64();
    let critical_values = config
        .alphas
        .iter()
        .map(|&alpha| CriticalValue {
            alpha,
            value: critical_value(&sample, alpha).as_f64(),
        })
        .collect();

    Ok(TestResult {
        statistic,
        s_hat: stat.s_hat.as_f64(),
        lag,
        series_len: t,
        p_value: mc_p_value(&sample, stat.scaled),
        critical_values,
        used_cells: stat.used_cells,
        masked_cells: stat.masked_cells,
        null: NullSpec {
            eigenvalues: lambdas.iter().map(|l| l.as_f64()).collect(),
            replicates: config.mc_replicates,
            seed: config.seed,
            bandwidth,
        },
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Source of `σ̂` in the fixed-cell test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    /// `σ̂ = 1`, the asymptotic standard deviation of `√T ρ̂` under
    /// independence at a positive lag.
    #[default]
    NullCalibrated,
    /// Sample standard deviation of the cell's summand series.
    PlugIn,
}

/// Outcome of [`fixed_cell_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedCellResult {
    pub rho: f64,
    pub sigma: f64,
    pub z: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub series_len: usize,
}

impl FixedCellResult {
    /// Two-sided rejection at the configured `α`.
    pub fn rejects(&self) -> bool {
        self.p_value < self.alpha
    }

    pub fn covers(&self, rho: f64) -> bool {
        self.ci_low <= rho && rho <= self.ci_high
    }
}

/// Two-sided z-test of `ρ(τ, τ', l, β, β') = 0` with a `(1 − α)` interval
/// `ρ̂ ± σ̂ z_{1−α/2} / √T`.
pub fn fixed_cell_test<F: Scalar>(
    m: &CurveMatrix<F>,
    params: &FqaParams<F>,
    alpha: f64,
    mode: SigmaMode,
) -> Result<FixedCellResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(FqaError::param("alpha", format!("{alpha} is outside (0,1)")));
    }
    let t = m.len();
    if params.lag + 2 > t {
        return Err(FqaError::LagOutOfRange {
            lag: params.lag,
            len: t,
        });
    }
    let mut levels = vec![params.tau];
    if !same_level(params.tau, params.tau_prime) {
        levels.push(params.tau_prime);
        levels.sort_by(|a, b| a.partial_cmp(b).expect("finite levels"));
    }
    let q = quantile_curves(m.view(), &levels)?;
    let table = excursion_table(m.view(), &q)?;
    let column = |level: F| {
        let i = table.level_index(level).expect("level present");
        table.column(i)
    };
    let x = Indicator::new(column(params.tau), params.beta);
    let y = Indicator::new(column(params.tau_prime), params.beta_prime);
    let est = cell_estimate::<F>(&x, &y, params.lag)?;

    let sigma = match mode {
        SigmaMode::NullCalibrated => 1.0,
        SigmaMode::PlugIn => {
            let s: Vec<f64> = cell_summands(&x, &y, params.lag, est.p_hat, est.q_hat)
                .into_iter()
                .map(Scalar::as_f64)
                .collect();
            let n = s.len() as f64;
            let mean = s.iter().sum::<f64>() / n;
            let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            if var <= 0.0 {
                return Err(FqaError::DegenerateCell {
                    p_hat: est.p_hat.as_f64(),
                    q_hat: est.q_hat.as_f64(),
                });
            }
            var.sqrt()
        }
    };

    let rho = est.rho.as_f64();
    let root_t = (t as f64).sqrt();
    let z = root_t * rho / sigma;
    let normal = Normal::standard();
    let p_value = (2.0 * normal.sf(z.abs())).min(1.0);
    let half = sigma / root_t * normal.inverse_cdf(1.0 - alpha / 2.0);
    Ok(FixedCellResult {
        rho,
        sigma,
        z,
        p_value,
        alpha,
        ci_low: rho - half,
        ci_high: rho + half,
        series_len: t,
    })
}
