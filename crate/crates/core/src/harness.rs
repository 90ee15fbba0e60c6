//! Size and power experiments, multi-lag tests on data files, permutation
//! diagnostics and pipeline timing.
//!
//! Replicate `r` at sweep point `s` draws its data from
//! `derive_seed(base_seed, r, s)` and its Monte Carlo null from a child of
//! that seed. Outcomes are collected in replicate order, so reports do not
//! depend on the number of worker threads.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use log::warn;
use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::curves::{load_csv, log_returns, CurveMatrix};
use crate::dgp::{ScenarioKind, ScenarioSpec};
use crate::error::{FqaError, Result};
use crate::fqa::FqaGrid;
use crate::inference::{omnibus_test, Bandwidth, OmnibusConfig, TestResult, DEFAULT_REPLICATES};
use crate::scalar::same_level;
use crate::seed::{child_seed, derive_seed};

/// Version stamp written into every report.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Default number of simulated series per configuration.
pub const DEFAULT_EXPERIMENT_REPLICATES: usize = 500;

/// A named parameter and the values it takes across a power curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<f64>,
}

/// Full description of a size or power experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSpec,
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub lag: usize,
    pub grid: FqaGrid<f64>,
    #[serde(rename = "M")]
    pub mc_replicates: usize,
    pub bandwidth: Bandwidth,
    pub base_seed: u64,
    /// Worker threads; 0 uses rayon's default.
    #[serde(skip)]
    pub threads: usize,
    pub sweep: Option<Sweep>,
}

impl ExperimentSpec {
    /// 500 replicates at lag 1, `α = 0.05`, default grid and `M`.
    pub fn new(scenario: ScenarioSpec, base_seed: u64) -> Self {
        ExperimentSpec {
            scenario,
            replicates: DEFAULT_EXPERIMENT_REPLICATES,
            alphas: vec![0.05],
            lag: 1,
            grid: FqaGrid::default_reduced(),
            mc_replicates: DEFAULT_REPLICATES,
            bandwidth: Bandwidth::Auto,
            base_seed,
            threads: 0,
            sweep: None,
        }
    }

    fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(FqaError::param("N", "must be at least 1"));
        }
        if self.alphas.is_empty() {
            return Err(FqaError::param("alpha", "at least one level is required"));
        }
        Ok(())
    }

    /// Scenario templates, one per sweep point, each validated.
    fn sweep_points(&self) -> Result<Vec<(Option<f64>, ScenarioSpec)>> {
        let Some(sweep) = &self.sweep else {
            self.scenario.validate()?;
            return Ok(vec![(None, self.scenario.clone())]);
        };
        if sweep.values.is_empty() {
            return Err(FqaError::param("sweep", "no values"));
        }
        sweep
            .values
            .iter()
            .map(|&v| {
                let mut s = self.scenario.clone();
                s.set_param(&sweep.name, v)?;
                s.validate()?;
                Ok((Some(v), s))
            })
            .collect()
    }

    fn omnibus_config(&self, seed: u64) -> OmnibusConfig<f64> {
        OmnibusConfig {
            lag: self.lag,
            grid: self.grid.clone(),
            alphas: self.alphas.clone(),
            mc_replicates: self.mc_replicates,
            seed,
            bandwidth: self.bandwidth,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| FqaError::param("threads", e.to_string()))
    }
}

/// Result of one simulated series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub seed: u64,
    pub statistic: f64,
    pub p_value: f64,
    /// Rejection at each requested `α`, in request order.
    pub rejected: Vec<bool>,
    pub runtime_seconds: f64,
}

/// Runs `spec.replicates` omnibus tests on fresh draws of `scenario` at
/// sweep index `sweep`, returned in replicate order.
pub fn run_replicates(
    spec: &ExperimentSpec,
    scenario: &ScenarioSpec,
    sweep: usize,
) -> Result<Vec<ReplicateOutcome>> {
    spec.check()?;
    let one = |index: usize| -> Result<ReplicateOutcome> {
        let seed = derive_seed(spec.base_seed, index as u64, sweep as u64);
        let data: CurveMatrix<f64> = scenario.with_seed(seed).generate()?;
        let result = omnibus_test(&data, &spec.omnibus_config(child_seed(seed, 3)))?;
        Ok(ReplicateOutcome {
            index,
            seed,
            statistic: result.statistic,
            p_value: result.p_value,
            rejected: spec
                .alphas
                .iter()
                .map(|&a| result.rejects(a).expect("requested level"))
                .collect(),
            runtime_seconds: result.runtime_seconds,
        })
    };
    spec.pool()?
        .install(|| (0..spec.replicates).into_par_iter().map(one).collect())
}

/// Rejection frequency at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RejectionRate {
    pub alpha: f64,
    pub rejections: usize,
    pub replicates: usize,
    pub rate: f64,
    /// Binomial standard error `sqrt(r(1 − r)/N)`.
    pub se: f64,
}

impl RejectionRate {
    pub fn new(alpha: f64, rejections: usize, replicates: usize) -> Self {
        let rate = rejections as f64 / replicates as f64;
        RejectionRate {
            alpha,
            rejections,
            replicates,
            rate,
            se: (rate * (1.0 - rate) / replicates as f64).sqrt(),
        }
    }
}

/// Outcome of one configuration (one sweep point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigurationResult {
    pub sweep_value: Option<f64>,
    pub series_len: usize,
    pub rates: Vec<RejectionRate>,
    pub mean_runtime_seconds: f64,
    pub p_values: Vec<f64>,
}

impl ConfigurationResult {
    pub fn rate(&self, alpha: f64) -> Option<&RejectionRate> {
        self.rates.iter().find(|r| same_level(r.alpha, alpha))
    }
}

/// Tabulated size or power experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub experiment: &'static str,
    pub spec: ExperimentSpec,
    pub configurations: Vec<ConfigurationResult>,
}

impl ExperimentReport {
    fn sweep_name(&self) -> &str {
        self.spec.sweep.as_ref().map_or("", |s| s.name.as_str())
    }

    /// One line per configuration and level. Runtimes are omitted so that
    /// identical specs give identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("experiment,scenario,noise,sweep,value,T,p,lag,alpha,N,rejections,rate,se\n");
        let s = &self.spec.scenario;
        for c in &self.configurations {
            let value = c.sweep_value.map_or(String::new(), |v| v.to_string());
            for r in &c.rates {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    self.experiment,
                    s.kind,
                    s.noise,
                    self.sweep_name(),
                    value,
                    c.series_len,
                    s.p,
                    self.spec.lag,
                    r.alpha,
                    r.replicates,
                    r.rejections,
                    r.rate,
                    r.se
                )
                .expect("writing to a string");
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Two-column `value rate` blocks (plus SE), one per level, separated by
    /// blank lines for gnuplot's `index`.
    pub fn to_gnuplot(&self) -> String {
        let mut out = String::new();
        for (k, &alpha) in self.spec.alphas.iter().enumerate() {
            if k > 0 {
                out.push_str("\n\n");
            }
            writeln!(out, "# alpha={alpha} {} rate se", self.sweep_name()).expect("string");
            for (i, c) in self.configurations.iter().enumerate() {
                let x = c.sweep_value.unwrap_or(i as f64);
                let r = &c.rates[k];
                writeln!(out, "{x} {} {}", r.rate, r.se).expect("string");
            }
        }
        out
    }

    /// Writes `<stem>.csv`, `<stem>.json` and, for swept runs, `<stem>.dat`
    /// next to `csv_path`.
    pub fn save(&self, csv_path: impl AsRef<Path>) -> Result<()> {
        let csv_path = csv_path.as_ref();
        write_file(csv_path, self.to_csv().as_bytes())?;
        write_file(&csv_path.with_extension("json"), self.to_json()?.as_bytes())?;
        if self.spec.sweep.is_some() {
            write_file(&csv_path.with_extension("dat"), self.to_gnuplot().as_bytes())?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| FqaError::io(path, e))
}

fn run_experiment(spec: &ExperimentSpec, experiment: &'static str) -> Result<ExperimentReport> {
    spec.check()?;
    let points = spec.sweep_points()?;
    let mut configurations = Vec::with_capacity(points.len());
    for (sweep, (value, scenario)) in points.iter().enumerate() {
        let outcomes = run_replicates(spec, scenario, sweep)?;
        let n = outcomes.len();
        let rates = spec
            .alphas
            .iter()
            .enumerate()
            .map(|(k, &a)| RejectionRate::new(a, outcomes.iter().filter(|o| o.rejected[k]).count(), n))
            .collect();
        configurations.push(ConfigurationResult {
            sweep_value: *value,
            series_len: scenario.series_len,
            rates,
            mean_runtime_seconds: outcomes.iter().map(|o| o.runtime_seconds).sum::<f64>() / n as f64,
            p_values: outcomes.iter().map(|o| o.p_value).collect(),
        });
    }
    Ok(ExperimentReport {
        format_version: REPORT_FORMAT_VERSION,
        experiment,
        spec: spec.clone(),
        configurations,
    })
}

/// Empirical size: rejection frequency of the omnibus test on serially
/// independent data.
///
/// An alternative scenario is run anyway after a warning.
pub fn run_size(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if !spec.scenario.kind.is_null() {
        warn!(
            "size run on {} data, which is serially dependent; rates measure power",
            spec.scenario.kind
        );
    }
    run_experiment(spec, "size")
}

/// Power curve over `spec.sweep`; every sweep value must satisfy the
/// scenario's stationarity bound.
pub fn run_power(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if !matches!(spec.scenario.kind, ScenarioKind::Far1 | ScenarioKind::Tfar1) {
        warn!("power run on {} data, which is serially independent", spec.scenario.kind);
    }
    run_experiment(spec, "power")
}

/// Settings of a multi-lag test on one data file.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTestConfig {
    pub lags: Vec<usize>,
    pub grid: FqaGrid<f64>,
    pub alphas: Vec<f64>,
    pub mc_replicates: usize,
    pub bandwidth: Bandwidth,
    pub seed: u64,
    pub log_returns: bool,
    pub has_header: bool,
}

impl DataTestConfig {
    pub fn new(lags: Vec<usize>, seed: u64) -> Self {
        DataTestConfig {
            lags,
            grid: FqaGrid::default_reduced(),
            alphas: vec![0.05],
            mc_replicates: DEFAULT_REPLICATES,
            bandwidth: Bandwidth::Auto,
            seed,
            log_returns: false,
            has_header: false,
        }
    }
}

/// One omnibus test per lag on an in-memory series. Lag `l` uses Monte Carlo
/// seed `child_seed(seed, l)`.
pub fn run_lags(m: &CurveMatrix<f64>, config: &DataTestConfig) -> Result<Vec<TestResult>> {
    if config.lags.is_empty() {
        return Err(FqaError::param("lags", "at least one lag is required"));
    }
    let data = if config.log_returns {
        log_returns(m)?
    } else {
        m.clone()
    };
    if let Some(&lag) = config.lags.iter().find(|&&l| l == 0 || l + 1 >= data.len()) {
        return Err(FqaError::LagOutOfRange {
            lag,
            len: data.len(),
        });
    }
    config
        .lags
        .iter()
        .map(|&lag| {
            let omnibus = OmnibusConfig {
                lag,
                grid: config.grid.clone(),
                alphas: config.alphas.clone(),
                mc_replicates: config.mc_replicates,
                seed: child_seed(config.seed, lag as u64),
                bandwidth: config.bandwidth,
            };
            omnibus_test(&data, &omnibus)
        })
        .collect()
}

/// Loads a curve CSV and runs [`run_lags`] on it.
pub fn run_data_test(path: impl AsRef<Path>, config: &DataTestConfig) -> Result<Vec<TestResult>> {
    let m = load_csv(path, config.has_header)?;
    run_lags(&m, config)
}

/// Fixed-width table of per-lag results with p-values to three decimals.
pub fn format_lag_table(results: &[TestResult]) -> String {
    let alphas: Vec<f64> = results
        .first()
        .map(|r| r.critical_values.iter().map(|c| c.alpha).collect())
        .unwrap_or_default();
    let mut out = format!("{:>4} {:>12} {:>8}", "lag", "statistic", "p-value");
    for a in &alphas {
        write!(out, " {:>12}", format!("c({a})")).expect("string");
    }
    out.push_str(&format!(" {:>7}\n", "masked"));
    for r in results {
        write!(out, "{:>4} {:>12.3} {:>8.3}", r.lag, r.statistic, r.p_value).expect("string");
        for c in &r.critical_values {
            write!(out, " {:>12.3}", c.value).expect("string");
        }
        writeln!(out, " {:>7}", r.masked_cells).expect("string");
    }
    out
}

/// Rows in uniformly random order.
pub fn shuffle_series(m: &CurveMatrix<f64>, seed: u64) -> CurveMatrix<f64> {
    CurveMatrix::new(shuffle_rows(m.view(), seed)).expect("rows of a valid matrix")
}

fn shuffle_rows(v: ArrayView2<'_, f64>, seed: u64) -> Array2<f64> {
    let mut order: Vec<usize> = (0..v.nrows()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Array2::from_shape_fn(v.dim(), |(t, j)| v[[order[t], j]])
}

/// Mean wall-clock time of one omnibus test, data generation excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuntimeSummary {
    pub replicates: usize,
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
}

/// Times `replicates` sequential omnibus tests on fresh draws of `spec`.
pub fn time_pipeline(
    spec: &ScenarioSpec,
    config: &OmnibusConfig<f64>,
    replicates: usize,
) -> Result<RuntimeSummary> {
    if replicates == 0 {
        return Err(FqaError::param("replicates", "must be at least 1"));
    }
    let mut times = Vec::with_capacity(replicates);
    for r in 0..replicates {
        let data: CurveMatrix<f64> = spec.with_seed(derive_seed(spec.seed, r as u64, 0)).generate()?;
        let start = Instant::now();
        omnibus_test(&data, config)?;
        times.push(start.elapsed().as_secs_f64());
    }
    Ok(RuntimeSummary {
        replicates,
        mean_seconds: times.iter().sum::<f64>() / replicates as f64,
        min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
        max_seconds: times.iter().copied().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::NoiseKind;

    fn small(kind: ScenarioKind) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(ScenarioSpec::new(kind, 40, 20, 0), 5);
        spec.replicates = 6;
        spec.mc_replicates = 1000;
        spec.alphas = vec![0.05, 0.5];
        spec.grid = FqaGrid::reduced(vec![0.25, 0.5, 0.75]).unwrap();
        spec
    }

    #[test]
    fn rate_identities() {
        let r = RejectionRate::new(0.05, 7, 20);
        assert_eq!(r.rate, 7.0 / 20.0);
        assert_eq!(r.se, (0.35_f64 * 0.65 / 20.0).sqrt());
        let one = RejectionRate::new(0.05, 1, 1);
        assert_eq!((one.rate, one.se), (1.0, 0.0));
    }

    #[test]
    fn single_replicate_rate_is_binary() {
        let mut spec = small(ScenarioKind::Brownian);
        spec.replicates = 1;
        let report = run_size(&spec).unwrap();
        for r in &report.configurations[0].rates {
            assert!(r.rate == 0.0 || r.rate == 1.0);
            assert_eq!(r.se, 0.0);
        }
    }

    #[test]
    fn reports_are_identical_across_thread_counts() {
        let mut spec = small(ScenarioKind::GaussianWn);
        spec.threads = 1;
        let a = run_size(&spec).unwrap();
        spec.threads = 3;
        let b = run_size(&spec).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.configurations[0].p_values, b.configurations[0].p_values);
    }

    #[test]
    fn seeds_are_isolated_per_replicate() {
        let spec = small(ScenarioKind::Brownian);
        let all = run_replicates(&spec, &spec.scenario, 0).unwrap();
        let mut shorter = spec.clone();
        shorter.replicates = 3;
        let first = run_replicates(&shorter, &spec.scenario, 0).unwrap();
        assert_eq!(
            all[..3].iter().map(|o| o.p_value).collect::<Vec<_>>(),
            first.iter().map(|o| o.p_value).collect::<Vec<_>>()
        );
    }

    #[test]
    fn power_sweep_validates_and_orders_points() {
        let mut spec = small(ScenarioKind::Far1);
        spec.scenario.noise = NoiseKind::Brownian;
        spec.replicates = 2;
        spec.sweep = Some(Sweep {
            name: "c".into(),
            values: vec![0.0, 0.4],
        });
        let report = run_power(&spec).unwrap();
        let values: Vec<_> = report.configurations.iter().map(|c| c.sweep_value).collect();
        assert_eq!(values, vec![Some(0.0), Some(0.4)]);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 1 + 2 * 2);
        assert!(report.to_gnuplot().contains("0.4 "));
        spec.sweep = Some(Sweep {
            name: "c".into(),
            values: vec![0.2, 1.5],
        });
        assert!(run_power(&spec).is_err());
    }

    #[test]
    fn shuffle_permutes_rows() {
        let m = CurveMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap();
        let s = shuffle_series(&m, 1);
        let mut rows: Vec<Vec<f64>> = s.values().rows().into_iter().map(|r| r.to_vec()).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let orig: Vec<Vec<f64>> = m.values().rows().into_iter().map(|r| r.to_vec()).collect();
        assert_eq!(rows, orig);
        let single = ndarray::array![[1.0, 2.0, 3.0]];
        assert_eq!(shuffle_rows(single.view(), 9), single);
    }

    #[test]
    fn lag_checks_and_constant_prices() {
        let m: CurveMatrix<f64> = ScenarioSpec::new(ScenarioKind::GaussianWn, 20, 10, 1).generate().unwrap();
        let mut cfg = DataTestConfig::new(vec![1, 19], 3);
        cfg.mc_replicates = 1000;
        assert!(matches!(run_lags(&m, &cfg), Err(FqaError::LagOutOfRange { lag: 19, .. })));
        let prices = CurveMatrix::new(Array2::from_elem((20, 6), 4.0)).unwrap();
        cfg.lags = vec![1];
        cfg.log_returns = true;
        assert!(matches!(run_lags(&prices, &cfg), Err(FqaError::AllCellsMasked(_))));
    }

    #[test]
    fn lag_table_rounds_p_values() {
        let m: CurveMatrix<f64> = ScenarioSpec::new(ScenarioKind::GaussianWn, 60, 10, 2).generate().unwrap();
        let mut cfg = DataTestConfig::new(vec![1, 2], 3);
        cfg.mc_replicates = 1000;
        let results = run_lags(&m, &cfg).unwrap();
        let table = format_lag_table(&results);
        assert_eq!(table.lines().count(), 3);
        let p = format!("{:.3}", results[1].p_value);
        assert!(table.lines().nth(2).unwrap().contains(&p));
    }
}
