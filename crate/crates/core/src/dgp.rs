//! Seeded generators for the simulation scenarios: iid Brownian paths,
//! Gaussian white noise, Student-t₃ around a quadratic mean, Cauchy Fourier
//! curves, FAR(1) and threshold FAR(1) processes, plus spike contamination.
//!
//! Every generator is a pure function of its arguments. Curves live on the
//! uniform grid `u_j = (j − 1)/(p − 1)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::curves::{CurveMatrix, EvalGrid};
use crate::error::{FqaError, Result};
use crate::scalar::Scalar;
use crate::seed::child_seed;

/// `∫₀¹ e^{−u²} du`, the Hilbert–Schmidt norm of the unit Gaussian kernel.
pub const GAUSSIAN_KERNEL_NORM: f64 = 0.746_824;

/// Curves discarded before a FAR or TFAR sample is recorded.
pub const DEFAULT_BURN_IN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Brownian,
    GaussianWn,
    T3Quadratic,
    FourierCauchy,
    Far1,
    Tfar1,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Brownian,
        ScenarioKind::GaussianWn,
        ScenarioKind::T3Quadratic,
        ScenarioKind::FourierCauchy,
        ScenarioKind::Far1,
        ScenarioKind::Tfar1,
    ];

    /// Serially independent scenarios, used for size experiments.
    pub fn is_null(self) -> bool {
        !matches!(self, ScenarioKind::Far1 | ScenarioKind::Tfar1)
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Brownian => "brownian",
            ScenarioKind::GaussianWn => "gaussian_wn",
            ScenarioKind::T3Quadratic => "t3_quadratic",
            ScenarioKind::FourierCauchy => "fourier_cauchy",
            ScenarioKind::Far1 => "far1",
            ScenarioKind::Tfar1 => "tfar1",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = FqaError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FqaError::UnknownKind {
                what: "scenario",
                value: s.to_string(),
            })
    }
}

/// Innovation process of the FAR and TFAR scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    T3,
    Brownian,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::T3 => "t3",
            NoiseKind::Brownian => "brownian",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = FqaError;

    fn from_str(s: &str) -> Result<Self> {
        [NoiseKind::Gaussian, NoiseKind::T3, NoiseKind::Brownian]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FqaError::UnknownKind {
                what: "noise",
                value: s.to_string(),
            })
    }
}

/// Additive spikes on a random subset of curves and grid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    pub curve_frac: f64,
    pub point_frac: f64,
    pub height: f64,
}

impl Default for Contamination {
    fn default() -> Self {
        Contamination {
            curve_frac: 0.1,
            point_frac: 0.1,
            height: 10.0,
        }
    }
}

/// Complete description of one simulated series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    #[serde(rename = "T")]
    pub series_len: usize,
    pub p: usize,
    /// FAR(1) kernel coefficient.
    #[serde(default)]
    pub c: f64,
    /// TFAR(1) total coefficient `|c₁| + |c₂|`.
    #[serde(rename = "C", default)]
    pub c_total: f64,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub contamination: Option<Contamination>,
    pub seed: u64,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, series_len: usize, p: usize, seed: u64) -> Self {
        ScenarioSpec {
            kind,
            series_len,
            p,
            c: 0.0,
            c_total: 0.0,
            noise: NoiseKind::Gaussian,
            burn_in: DEFAULT_BURN_IN,
            contamination: None,
            seed,
        }
    }

    /// The same scenario under another seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioSpec {
            seed,
            ..self.clone()
        }
    }

    /// Sets a sweepable parameter by name: `c`, `C`, `T` or `p`.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let as_size = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(FqaError::param("sweep", format!("{name}={v} is not a size")))
            }
        };
        match name {
            "c" => self.c = value,
            "C" => self.c_total = value,
            "T" => self.series_len = as_size(value)?,
            "p" => self.p = as_size(value)?,
            other => {
                return Err(FqaError::UnknownKind {
                    what: "sweep parameter",
                    value: other.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(self.series_len, self.p)?;
        match self.kind {
            ScenarioKind::Far1 => check_far_coefficient(self.c)?,
            ScenarioKind::Tfar1 => check_tfar_total(self.c_total)?,
            _ => {}
        }
        if let Some(c) = &self.contamination {
            check_fraction("curve_frac", c.curve_frac)?;
            check_fraction("point_frac", c.point_frac)?;
            if !c.height.is_finite() {
                return Err(FqaError::param("height", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn generate<F: Scalar>(&self) -> Result<CurveMatrix<F>> {
        self.validate()?;
        let (t, p, seed) = (self.series_len, self.p, self.seed);
        let m = match self.kind {
            ScenarioKind::Brownian => brownian(t, p, seed),
            ScenarioKind::GaussianWn => gaussian(t, p, seed),
            ScenarioKind::T3Quadratic => t3_quadratic(t, p, seed),
            ScenarioKind::FourierCauchy => fourier_cauchy(t, p, seed),
            ScenarioKind::Far1 => far1(t, p, self.c, self.noise, seed, self.burn_in),
            ScenarioKind::Tfar1 => tfar1(t, p, self.c_total, self.noise, seed, self.burn_in),
        };
        let m = match &self.contamination {
            Some(c) => spikes(m, c.curve_frac, c.point_frac, c.height, child_seed(seed, 2)),
            None => m,
        };
        finish(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check_sizes(t: usize, p: usize) -> Result<()> {
    if t < 2 {
        return Err(FqaError::param("T", format!("{t} is below 2")));
    }
    if p < 2 {
        return Err(FqaError::param("p", format!("{p} is below 2")));
    }
    Ok(())
}

fn check_far_coefficient(c: f64) -> Result<()> {
    if !c.is_finite() || (c * GAUSSIAN_KERNEL_NORM).abs() >= 1.0 {
        return Err(FqaError::param(
            "c",
            format!("{c} violates |c|·{GAUSSIAN_KERNEL_NORM} < 1"),
        ));
    }
    Ok(())
}

fn check_tfar_total(c: f64) -> Result<()> {
    if !(0.0..1.0).contains(&c) {
        return Err(FqaError::param("C", format!("{c} is outside [0,1)")));
    }
    Ok(())
}

fn check_fraction(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(FqaError::param(name, format!("{v} is outside [0,1]")));
    }
    Ok(())
}

fn finish<F: Scalar>(m: Array2<f64>) -> Result<CurveMatrix<F>> {
    CurveMatrix::new(m.mapv(F::of))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid_points(p: usize) -> Vec<f64> {
    EvalGrid::<f64>::uniform(p).points().to_vec()
}

fn gaussian(t: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_simple_fn((t, p), || r.sample(StandardNormal))
}

fn brownian(t: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let sd = (1.0 / (p - 1) as f64).sqrt();
    let mut m = Array2::zeros((t, p));
    for mut row in m.rows_mut() {
        let mut level = 0.0;
        for j in 1..p {
            let z: f64 = r.sample(StandardNormal);
            level += sd * z;
            row[j] = level;
        }
    }
    m
}

fn t3_noise(t: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let dist = StudentT::new(3.0).expect("valid degrees of freedom");
    Array2::from_shape_simple_fn((t, p), || dist.sample(&mut r))
}

fn t3_quadratic(t: usize, p: usize, seed: u64) -> Array2<f64> {
    let u = Array1::from(grid_points(p));
    t3_noise(t, p, seed) + &u.mapv(|x| x * x)
}

/// Basis `1, cos 2πu, sin 2πu, …, cos 6πu, sin 6πu` evaluated at `u`; the
/// argument is reduced mod 1 so both endpoints give identical values.
fn fourier_basis(u: f64) -> [f64; 7] {
    let x = u - u.floor();
    let mut b = [1.0; 7];
    for k in 1..=3 {
        let a = 2.0 * PI * k as f64 * x;
        b[2 * k - 1] = a.cos();
        b[2 * k] = a.sin();
    }
    b
}

/// Curve with Fourier coefficients `coeffs` in basis order
/// `(1, cos 2πu, sin 2πu, cos 4πu, sin 4πu, cos 6πu, sin 6πu)`.
pub fn fourier_curve(coeffs: &[f64; 7], points: &[f64]) -> Vec<f64> {
    points
        .iter()
        .map(|&u| {
            fourier_basis(u)
                .iter()
                .zip(coeffs)
                .map(|(b, c)| b * c)
                .sum()
        })
        .collect()
}

fn fourier_cauchy(t: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    let cauchy = Cauchy::new(0.0, 1.0).expect("valid scale");
    let points = grid_points(p);
    let mut m = Array2::zeros((t, p));
    for mut row in m.rows_mut() {
        let coeffs: [f64; 7] = std::array::from_fn(|_| cauchy.sample(&mut r));
        row.assign(&Array1::from(fourier_curve(&coeffs, &points)));
    }
    m
}

fn noise(kind: NoiseKind, t: usize, p: usize, seed: u64) -> Array2<f64> {
    match kind {
        NoiseKind::Gaussian => gaussian(t, p, seed),
        NoiseKind::T3 => t3_noise(t, p, seed),
        NoiseKind::Brownian => brownian(t, p, seed),
    }
}

/// Rank-one Gaussian kernel operator `X ↦ ∫ e^{−(u²+v²)/2} X(v) dv` under
/// trapezoidal quadrature, evaluated in `O(p)` through the kernel's
/// factorisation `e^{−u²/2} · e^{−v²/2}`.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    profile: Array1<f64>,
    weighted: Array1<f64>,
    quadrature: Array1<f64>,
}

impl GaussianKernel {
    pub fn new(p: usize) -> Self {
        let grid = EvalGrid::<f64>::uniform(p);
        let profile = Array1::from_iter(grid.points().iter().map(|u| (-u * u / 2.0).exp()));
        let quadrature = Array1::from(grid.trapezoid_weights());
        let weighted = &profile * &quadrature;
        GaussianKernel {
            profile,
            weighted,
            quadrature,
        }
    }

    /// `∫ X(u) du` by trapezoidal quadrature.
    pub fn integral(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.quadrature.dot(&x)
    }

    /// Adds `c · (Kx)(u_j)` to `out`.
    pub fn apply_add(&self, c: f64, x: ArrayView1<'_, f64>, out: &mut Array1<f64>) {
        if c == 0.0 {
            return;
        }
        out.scaled_add(c * self.weighted.dot(&x), &self.profile);
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut out = Array1::zeros(self.profile.len());
        self.apply_add(1.0, x, &mut out);
        out
    }
}

/// Runs `X_t = c(X_{t−1}) · K X_{t−1} + ε_t` from `X_0 = ε_0` and keeps the
/// last `t` curves.
fn autoregress(
    t: usize,
    p: usize,
    kind: NoiseKind,
    seed: u64,
    burn_in: usize,
    coefficient: impl Fn(f64) -> f64,
) -> Array2<f64> {
    let eps = noise(kind, burn_in + t + 1, p, child_seed(seed, 0));
    let kernel = GaussianKernel::new(p);
    let mut out = Array2::zeros((t, p));
    let mut prev = eps.row(0).to_owned();
    for step in 1..=burn_in + t {
        let mut next = eps.row(step).to_owned();
        let c = coefficient(kernel.integral(prev.view()));
        kernel.apply_add(c, prev.view(), &mut next);
        if step > burn_in {
            out.row_mut(step - burn_in - 1).assign(&next);
        }
        prev = next;
    }
    out
}

fn far1(t: usize, p: usize, c: f64, kind: NoiseKind, seed: u64, burn_in: usize) -> Array2<f64> {
    autoregress(t, p, kind, seed, burn_in, |_| c)
}

fn tfar1(
    t: usize,
    p: usize,
    c_total: f64,
    kind: NoiseKind,
    seed: u64,
    burn_in: usize,
) -> Array2<f64> {
    let (c1, c2) = tfar_coefficients(c_total, seed);
    autoregress(t, p, kind, seed, burn_in, |r| if r <= 0.0 { c1 } else { c2 })
}

/// Regime coefficients `(c₁, c₂)` with `c₁ ~ U(0, C)` and `c₂ = c₁ − C`.
pub fn tfar_coefficients(c_total: f64, seed: u64) -> (f64, f64) {
    if c_total == 0.0 {
        return (0.0, 0.0);
    }
    let c1 = rng(child_seed(seed, 1)).random_range(0.0..c_total);
    (c1, c1 - c_total)
}

fn spikes(
    mut m: Array2<f64>,
    curve_frac: f64,
    point_frac: f64,
    height: f64,
    seed: u64,
) -> Array2<f64> {
    let (t, p) = m.dim();
    let rows = ((curve_frac * t as f64).round() as usize).min(t);
    let cols = ((point_frac * p as f64).round() as usize).min(p);
    let mut r = rng(seed);
    for row in sample(&mut r, t, rows).into_vec() {
        for col in sample(&mut r, p, cols).into_vec() {
            m[[row, col]] += height;
        }
    }
    m
}

/// Scenario 1: iid standard Brownian paths with `W(0) = 0`.
pub fn gen_brownian<F: Scalar>(t: usize, p: usize, seed: u64) -> Result<CurveMatrix<F>> {
    check_sizes(t, p)?;
    finish(brownian(t, p, seed))
}

/// Scenario 2: all entries iid `N(0, 1)`.
pub fn gen_gaussian_wn<F: Scalar>(t: usize, p: usize, seed: u64) -> Result<CurveMatrix<F>> {
    check_sizes(t, p)?;
    finish(gaussian(t, p, seed))
}

/// Scenario 3: `u² + ε` with `ε` iid unit-scale Student-t₃.
pub fn gen_t3_quadratic<F: Scalar>(t: usize, p: usize, seed: u64) -> Result<CurveMatrix<F>> {
    check_sizes(t, p)?;
    finish(t3_quadratic(t, p, seed))
}

/// Scenario 4: seven iid standard Cauchy Fourier coefficients per curve.
pub fn gen_fourier_cauchy<F: Scalar>(t: usize, p: usize, seed: u64) -> Result<CurveMatrix<F>> {
    check_sizes(t, p)?;
    finish(fourier_cauchy(t, p, seed))
}

/// Innovation curves of the given kind.
pub fn gen_noise<F: Scalar>(kind: NoiseKind, t: usize, p: usize, seed: u64) -> Result<CurveMatrix<F>> {
    check_sizes(t, p)?;
    finish(noise(kind, t, p, seed))
}

/// Scenario 5: FAR(1) with kernel `c · e^{−(u²+v²)/2}`.
///
/// Innovations are `gen_noise(kind, burn_in + T + 1, p, child_seed(seed, 0))`,
/// so with `c = 0` the output equals its last `T` rows exactly.
pub fn gen_far1<F: Scalar>(
    t: usize,
    p: usize,
    c: f64,
    kind: NoiseKind,
    seed: u64,
    burn_in: usize,
) -> Result<CurveMatrix<F>> {
    check_sizes(t, p)?;
    check_far_coefficient(c)?;
    finish(far1(t, p, c, kind, seed, burn_in))
}

/// Scenario 6: threshold FAR(1) switching on the sign of `∫ X_{t−1}`,
/// kernel coefficient `c₁` when it is `≤ 0` and `c₂` otherwise.
pub fn gen_tfar1<F: Scalar>(
    t: usize,
    p: usize,
    c_total: f64,
    kind: NoiseKind,
    seed: u64,
    burn_in: usize,
) -> Result<CurveMatrix<F>> {
    check_sizes(t, p)?;
    check_tfar_total(c_total)?;
    finish(tfar1(t, p, c_total, kind, seed, burn_in))
}

/// Adds `height` at `round(point_frac · p)` distinct grid points of each of
/// `round(curve_frac · T)` distinct curves, all drawn uniformly.
pub fn contaminate<F: Scalar>(
    m: &CurveMatrix<F>,
    curve_frac: f64,
    point_frac: f64,
    height: f64,
    seed: u64,
) -> Result<CurveMatrix<F>> {
    check_fraction("curve_frac", curve_frac)?;
    check_fraction("point_frac", point_frac)?;
    let base = m.values().mapv(Scalar::as_f64);
    finish(spikes(base, curve_frac, point_frac, height, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Axis;

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    fn lag_one(series: &[f64]) -> f64 {
        correlation(&series[..series.len() - 1], &series[1..])
    }

    fn median(v: &mut [f64]) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }

    #[test]
    fn brownian_rows_start_at_zero_with_right_increment_variance() {
        let m = gen_brownian::<f64>(500, 500, 1).unwrap();
        assert!(m.values().column(0).iter().all(|&x| x == 0.0));
        let v = m.values();
        let inc: Vec<f64> = v
            .rows()
            .into_iter()
            .flat_map(|r| (1..500).map(move |j| r[j] - r[j - 1]).collect::<Vec<_>>())
            .collect();
        let n = inc.len() as f64;
        let mean = inc.iter().sum::<f64>() / n;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var * 499.0 - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn brownian_terminal_values_are_serially_uncorrelated() {
        let t = 1000;
        let m = gen_brownian::<f64>(t, 50, 2).unwrap();
        let last: Vec<f64> = m.values().column(49).to_vec();
        assert!(lag_one(&last).abs() < 3.0 / (t as f64).sqrt());
    }

    #[test]
    fn gaussian_moments_and_seed_contract() {
        let m = gen_gaussian_wn::<f64>(500, 500, 3).unwrap();
        let n = 250_000.0;
        let mean = m.values().sum() / n;
        let var = m.values().mapv(|x| (x - mean).powi(2)).sum() / (n - 1.0);
        assert!(mean.abs() < 3.0 / n.sqrt());
        assert!((var - 1.0).abs() < 0.05);
        assert_eq!(m, gen_gaussian_wn::<f64>(500, 500, 3).unwrap());
        assert_ne!(m, gen_gaussian_wn::<f64>(500, 500, 4).unwrap());
    }

    #[test]
    fn t3_quadratic_centres_on_the_mean_and_has_heavy_tails() {
        let (t, p) = (2000, 60);
        let m = gen_t3_quadratic::<f64>(t, p, 5).unwrap();
        let u = grid_points(p);
        for j in (0..p).step_by(7) {
            let mut col = m.values().column(j).to_vec();
            assert!((median(&mut col) - u[j] * u[j]).abs() < 0.1);
        }
        let resid: Vec<f64> = m
            .values()
            .indexed_iter()
            .map(|((_, j), &x)| x - u[j] * u[j])
            .collect();
        let n = resid.len() as f64;
        let mean = resid.iter().sum::<f64>() / n;
        let m2 = resid.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = resid.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        assert!(m4 / (m2 * m2) - 3.0 > 3.0);
        assert_eq!(m, gen_t3_quadratic::<f64>(t, p, 5).unwrap());
    }

    #[test]
    fn fourier_curves_are_periodic_and_basis_is_exact() {
        let m = gen_fourier_cauchy::<f64>(300, 101, 6).unwrap();
        for row in m.values().rows() {
            assert_eq!(row[0], row[100]);
        }
        let flat = fourier_curve(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &grid_points(33));
        assert!(flat.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn fourier_row_medians_are_serially_uncorrelated() {
        let t = 1000;
        let m = gen_fourier_cauchy::<f64>(t, 40, 7).unwrap();
        let medians: Vec<f64> = m
            .values()
            .rows()
            .into_iter()
            .map(|r| median(&mut r.to_vec()))
            .collect();
        assert!(lag_one(&medians).abs() < 3.0 / (t as f64).sqrt());
    }

    #[test]
    fn noise_dispatch() {
        let g: CurveMatrix<f64> = gen_noise(NoiseKind::Gaussian, 20, 10, 8).unwrap();
        assert_eq!(g, gen_gaussian_wn(20, 10, 8).unwrap());
        let b: CurveMatrix<f64> = gen_noise(NoiseKind::Brownian, 20, 10, 8).unwrap();
        assert!(b.values().column(0).iter().all(|&x| x == 0.0));
        assert!(matches!(
            "cauchy".parse::<NoiseKind>(),
            Err(FqaError::UnknownKind { .. })
        ));
    }

    #[test]
    fn far_with_zero_coefficient_is_the_noise() {
        let (t, p, burn) = (30, 12, 50);
        for kind in [NoiseKind::Gaussian, NoiseKind::T3, NoiseKind::Brownian] {
            let far: CurveMatrix<f64> = gen_far1(t, p, 0.0, kind, 9, burn).unwrap();
            let eps: CurveMatrix<f64> = gen_noise(kind, burn + t + 1, p, child_seed(9, 0)).unwrap();
            assert_eq!(far.values(), &eps.values().slice(ndarray::s![burn + 1.., ..]));
            let tfar: CurveMatrix<f64> = gen_tfar1(t, p, 0.0, kind, 9, burn).unwrap();
            assert_eq!(tfar.values(), far.values());
        }
    }

    #[test]
    fn far_rejects_explosive_coefficients() {
        assert!(gen_far1::<f64>(10, 5, 1.34, NoiseKind::Gaussian, 1, 5).is_err());
        assert!(gen_far1::<f64>(10, 5, 1.33, NoiseKind::Gaussian, 1, 5).is_ok());
        assert!(gen_tfar1::<f64>(10, 5, 1.0, NoiseKind::Gaussian, 1, 5).is_err());
        assert!(gen_tfar1::<f64>(10, 5, -0.1, NoiseKind::Gaussian, 1, 5).is_err());
    }

    #[test]
    fn far_curve_means_are_positively_dependent() {
        let t = 500;
        let m = gen_far1::<f64>(t, 100, 0.6, NoiseKind::Gaussian, 10, 50).unwrap();
        let means: Vec<f64> = m.values().mean_axis(Axis(1)).unwrap().to_vec();
        assert!(lag_one(&means) > 3.0 / (t as f64).sqrt());
    }

    #[test]
    fn tfar_coefficients_split_the_total() {
        for seed in 0..200 {
            let (c1, c2) = tfar_coefficients(0.7, seed);
            assert!(c1 > 0.0 && c1 < 0.7 && c2 <= 0.0);
            assert!((c1.abs() + c2.abs() - 0.7).abs() < 1e-15);
        }
        assert_eq!(tfar_coefficients(0.0, 3), (0.0, 0.0));
    }

    #[test]
    fn kernel_matches_double_sum_and_converges_in_p() {
        let p = 37;
        let k = GaussianKernel::new(p);
        let u = grid_points(p);
        let w = EvalGrid::<f64>::uniform(p).trapezoid_weights();
        let x = Array1::from_iter(u.iter().map(|v| (3.0 * v).sin() + v));
        let fast = k.apply(x.view());
        for i in 0..p {
            let slow: f64 = (0..p)
                .map(|j| (-(u[i] * u[i] + u[j] * u[j]) / 2.0).exp() * x[j] * w[j])
                .sum();
            assert!((fast[i] - slow).abs() < 1e-13);
        }

        // The output is `a_p · e^{−u²/2}` with `a_p = (Kx)(0)`, so the fine
        // operator can be evaluated on the coarse grid exactly.
        let eval = |p: usize| {
            let pts = grid_points(p);
            let x = Array1::from_iter(pts.iter().map(|v| (2.0 * v).cos() * v));
            GaussianKernel::new(p).apply(x.view())
        };
        let coarse = eval(500);
        let fine_at_zero = eval(2000)[0];
        let sup = grid_points(500)
            .iter()
            .zip(coarse.iter())
            .map(|(u, c)| (c - fine_at_zero * (-u * u / 2.0).exp()).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1e-3, "sup-norm gap {sup}");
    }

    #[test]
    fn contamination_counts_and_increments() {
        let m = gen_gaussian_wn::<f64>(200, 500, 11).unwrap();
        let c = contaminate(&m, 0.1, 0.1, 10.0, 12).unwrap();
        let diff = c.values() - m.values();
        assert!(diff.iter().all(|&d| d == 0.0 || (d - 10.0).abs() < 1e-12));
        let per_row: Vec<usize> = diff
            .rows()
            .into_iter()
            .map(|r| r.iter().filter(|&&d| d != 0.0).count())
            .filter(|&k| k > 0)
            .collect();
        assert_eq!(per_row.len(), 20);
        assert!(per_row.iter().all(|&k| k == 50));
        assert_eq!(contaminate(&m, 0.0, 0.1, 10.0, 12).unwrap(), m);
    }

    #[test]
    fn spec_round_trips_and_dispatches() {
        let mut spec = ScenarioSpec::new(ScenarioKind::Far1, 40, 20, 13);
        spec.c = 0.5;
        spec.noise = NoiseKind::Brownian;
        spec.contamination = Some(Contamination::default());
        let json = spec.to_json().unwrap();
        assert!(json.contains("\"T\": 40") && json.contains("\"far1\""));
        let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let a: CurveMatrix<f64> = spec.generate().unwrap();
        assert_eq!(a, back.generate().unwrap());
        assert_eq!(a.len(), 40);
        assert_eq!("tfar1".parse::<ScenarioKind>().unwrap(), ScenarioKind::Tfar1);
        spec.c = 2.0;
        assert!(spec.generate::<f64>().is_err());
    }

    #[test]
    fn generators_work_in_single_precision() {
        let m = gen_brownian::<f32>(10, 8, 1).unwrap();
        assert_eq!(m.values().column(0).iter().filter(|&&x| x == 0.0).count(), 10);
    }
}
