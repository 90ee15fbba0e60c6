use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fqa_core::harness::{format_lag_table, ExperimentReport};
use fqa_core::{
    run_data_test, run_power, run_size, Bandwidth, Contamination, DataTestConfig, ExperimentSpec,
    FqaError, FqaGrid, NoiseKind, ScenarioKind, ScenarioSpec, Sweep,
};
use serde_json::json;

/// Functional quantile autocorrelation white-noise test.
#[derive(Parser, Debug)]
#[command(name = "fqa", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test a curve CSV for serial dependence at one or more lags.
    Test(TestArgs),
    /// Generate a simulated series as CSV with a JSON sidecar.
    Simulate(SimulateArgs),
    /// Empirical size of the omnibus test on a null scenario.
    Size(ExperimentArgs),
    /// Power curve of the omnibus test over a parameter sweep.
    Power(ExperimentArgs),
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Quantile levels as `start:end:step` or a comma list.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    levels: String,
    /// Identify thresholds with levels (the default).
    #[arg(long, conflicts_with = "general")]
    reduced: bool,
    /// Use the full level × threshold grid.
    #[arg(long, requires = "thresholds")]
    general: bool,
    /// Excursion thresholds for `--general`, same syntax as `--levels`.
    #[arg(long)]
    thresholds: Option<String>,
    /// Monte Carlo draws for the null law.
    #[arg(long, default_value_t = 10_000)]
    mc: usize,
    /// Lag-window bandwidth: `auto` or a non-negative integer.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
}

impl GridArgs {
    fn grid(&self) -> anyhow::Result<FqaGrid<f64>> {
        let levels = parse_values(&self.levels)?;
        Ok(match (&self.thresholds, self.general) {
            (Some(t), true) => FqaGrid::general(levels, parse_values(t)?)?,
            _ => FqaGrid::reduced(levels)?,
        })
    }

    fn bandwidth(&self) -> anyhow::Result<Bandwidth> {
        Ok(self.bandwidth.parse()?)
    }
}

#[derive(Args, Debug)]
struct TestArgs {
    /// Curve CSV: one curve per row, one grid point per column.
    csv: PathBuf,
    /// Lags as `a..b`, a comma list, or a single lag.
    #[arg(long, default_value = "1")]
    lags: String,
    /// Significance levels, comma separated.
    #[arg(long, default_value = "0.05")]
    alpha: String,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace prices by intraday log-returns first.
    #[arg(long)]
    log_returns: bool,
    /// The CSV starts with a header row.
    #[arg(long)]
    header: bool,
    /// JSON report path; the table goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long = "T", default_value_t = 200)]
    series_len: usize,
    #[arg(long, default_value_t = 500)]
    p: usize,
    /// FAR(1) kernel coefficient.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// TFAR(1) total coefficient.
    #[arg(long = "C", default_value_t = 0.0)]
    c_total: f64,
    #[arg(long, default_value = "gaussian")]
    noise: String,
    /// Spikes as `curve_frac,point_frac,height`.
    #[arg(long)]
    contaminate: Option<String>,
    #[arg(long, default_value_t = fqa_core::dgp::DEFAULT_BURN_IN)]
    burn_in: usize,
}

impl ScenarioArgs {
    fn spec(&self, seed: u64) -> anyhow::Result<ScenarioSpec> {
        let kind: ScenarioKind = self.scenario.parse()?;
        let mut spec = ScenarioSpec::new(kind, self.series_len, self.p, seed);
        spec.c = self.c;
        spec.c_total = self.c_total;
        spec.noise = self.noise.parse::<NoiseKind>()?;
        spec.burn_in = self.burn_in;
        spec.contamination = self.contaminate.as_deref().map(parse_contamination).transpose()?;
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; the sidecar is written next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Replicates per configuration.
    #[arg(long = "N", default_value_t = 500)]
    replicates: usize,
    #[arg(long, default_value = "0.05")]
    alpha: String,
    #[arg(long, default_value_t = 1)]
    lag: usize,
    #[command(flatten)]
    grid: GridArgs,
    /// Parameter sweep as `name=start:end:step` or `name=v1,v2,…`.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// CSV report path; JSON (and `.dat` for sweeps) go alongside.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::new(self.scenario.spec(self.seed)?, self.seed);
        spec.replicates = self.replicates;
        spec.alphas = parse_values(&self.alpha)?;
        spec.lag = self.lag;
        spec.grid = self.grid.grid()?;
        spec.mc_replicates = self.grid.mc;
        spec.bandwidth = self.grid.bandwidth()?;
        spec.threads = self.threads;
        spec.sweep = self.sweep.as_deref().map(parse_sweep).transpose()?;
        Ok(spec)
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// `start:end:step` (inclusive) or a comma-separated list.
fn parse_values(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let [start, end, step] = [parts[0], parts[1], parts[2]]
            .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in {text:?}")));
        let (start, end, step) = (start?, end?, step?);
        if !(step > 0.0) || end < start {
            bail!("range {text:?} needs start ≤ end and a positive step");
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|k| round_grid(start + k as f64 * step)).collect());
    }
    if parts.len() != 1 {
        bail!("expected start:end:step or a comma list, got {text:?}");
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in {text:?}")))
        .collect()
}

/// `a..b` (inclusive), a comma list, or one lag.
fn parse_lags(text: &str) -> anyhow::Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
        if a > b {
            bail!("empty lag range {text:?}");
        }
        return Ok((a..=b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().with_context(|| format!("bad lag {s:?}")))
        .collect()
}

fn parse_sweep(text: &str) -> anyhow::Result<Sweep> {
    let (name, values) = text
        .split_once('=')
        .with_context(|| format!("sweep {text:?} is not name=values"))?;
    Ok(Sweep {
        name: name.trim().to_string(),
        values: parse_values(values)?,
    })
}

fn parse_contamination(text: &str) -> anyhow::Result<Contamination> {
    let v = parse_values(text)?;
    let [curve_frac, point_frac, height] = v[..] else {
        bail!("--contaminate takes curve_frac,point_frac,height, got {text:?}");
    };
    Ok(Contamination {
        curve_frac,
        point_frac,
        height,
    })
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_test(args: &TestArgs) -> anyhow::Result<()> {
    let config = DataTestConfig {
        lags: parse_lags(&args.lags)?,
        grid: args.grid.grid()?,
        alphas: parse_values(&args.alpha)?,
        mc_replicates: args.grid.mc,
        bandwidth: args.grid.bandwidth()?,
        seed: args.seed,
        log_returns: args.log_returns,
        has_header: args.header,
    };
    let results = run_data_test(&args.csv, &config)?;
    print!("{}", format_lag_table(&results));
    if let Some(out) = &args.out {
        write_text(out, &serde_json::to_string_pretty(&results)?)?;
    }
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let spec = args.scenario.spec(args.seed)?;
    let m = spec.generate::<f64>()?;
    fqa_core::save_csv(&m, &args.out)?;
    let sidecar = json!({ "format_version": 1, "scenario": spec });
    write_text(&args.out.with_extension("json"), &serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn emit(report: &ExperimentReport, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => report.save(path)?,
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Test(args) => run_test(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Size(args) => emit(&run_size(&args.spec()?)?, args.out.as_deref()),
        Command::Power(args) => emit(&run_power(&args.spec()?)?, args.out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let io = matches!(err.downcast_ref::<FqaError>(), Some(FqaError::Io { .. }))
                || err.downcast_ref::<std::io::Error>().is_some();
            ExitCode::from(if io { 1 } else { 2 })
        }
    }
}
