//! Sample functional quantile autocorrelation and the omnibus statistic.
//!
//! For a level pair `(τ, τ')`, thresholds `(β, β')` and lag `l`, the sample
//! FQA correlates the indicator series `X_t = 1{frac_τ(t) ≤ β}` and
//! `Y_t = 1{frac_τ'(t) ≤ β'}` at lag `l`:
//!
//! ```text
//! p̂ = (1/T) Σ_t X_t        q̂ = (1/T) Σ_t Y_t
//! Ĵ = (1/T) Σ_{t ≤ T-l} X_t Y_{t+l}
//! ρ̂ = (Ĵ − p̂ q̂) / sqrt(p̂(1−p̂) q̂(1−q̂))
//! ```
//!
//! The joint term divides by `T` even though it sums `T − l` products.
//! Cells whose marginal estimate is exactly 0 or 1 have no defined
//! correlation; [`fqa_hat`] reports them as errors and [`fqa_vector`] masks
//! them out of every downstream quantity.

use ndarray::ArrayView1;
use serde::Serialize;

use crate::error::{FqaError, Result};
use crate::quantiles::{check_levels, ExcursionTable};
use crate::scalar::Scalar;

/// Slack allowed when clamping `ρ̂` back into `[-1, 1]`.
const CLAMP_SLACK: f64 = 1e-12;

/// One cell of the FQA parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FqaParams<F> {
    pub tau: F,
    pub tau_prime: F,
    pub lag: usize,
    pub beta: F,
    pub beta_prime: F,
}

impl<F: Scalar> FqaParams<F> {
    pub fn new(tau: F, tau_prime: F, lag: usize, beta: F, beta_prime: F) -> Result<Self> {
        for (name, v) in [
            ("tau", tau),
            ("tau_prime", tau_prime),
            ("beta", beta),
            ("beta_prime", beta_prime),
        ] {
            if !(v > F::zero() && v < F::one()) {
                return Err(FqaError::param(name, format!("{v} is outside (0,1)")));
            }
        }
        if lag == 0 {
            return Err(FqaError::param("lag", "must be at least 1"));
        }
        Ok(FqaParams {
            tau,
            tau_prime,
            lag,
            beta,
            beta_prime,
        })
    }

    /// Cell with thresholds tied to the levels, `(τ, τ', l, τ, τ')`.
    pub fn reduced(tau: F, tau_prime: F, lag: usize) -> Result<Self> {
        Self::new(tau, tau_prime, lag, tau, tau_prime)
    }
}

/// Position of a cell in the grid: level indices `(i, j)` and threshold
/// indices `(k, ℓ)`. In reduced mode `k = i` and `ℓ = j` index the levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
}

/// Levels `𝒯` and thresholds `𝓑` over which the omnibus statistic sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FqaGrid<F> {
    levels: Vec<F>,
    thresholds: Vec<F>,
    reduced: bool,
}

impl<F: Scalar> FqaGrid<F> {
    /// Reduced grid: thresholds identified with levels, `P²` cells.
    pub fn reduced(levels: Vec<F>) -> Result<Self> {
        check_grid_values(&levels)?;
        Ok(FqaGrid {
            thresholds: levels.clone(),
            levels,
            reduced: true,
        })
    }

    /// General grid over all `(τ_i, τ_j, β_k, β_ℓ)`, `P²B²` cells.
    pub fn general(levels: Vec<F>, thresholds: Vec<F>) -> Result<Self> {
        check_grid_values(&levels)?;
        check_grid_values(&thresholds)?;
        Ok(FqaGrid {
            levels,
            thresholds,
            reduced: false,
        })
    }

    /// Reduced grid over `{0.05, 0.10, …, 0.95}`.
    pub fn default_reduced() -> Self {
        let levels = (1..=19).map(|k| F::count(k) / F::count(20)).collect();
        Self::reduced(levels).expect("default levels are valid")
    }

    pub fn levels(&self) -> &[F] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[F] {
        &self.thresholds
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// Number of cells in the stacked vector.
    pub fn cell_count(&self) -> usize {
        let p = self.levels.len();
        if self.reduced {
            p * p
        } else {
            let b = self.thresholds.len();
            p * p * b * b
        }
    }

    /// All cells in the frozen lexicographic order `(i, j[, k, ℓ])`.
    pub fn cells(&self) -> Vec<Cell> {
        let p = self.levels.len();
        let b = self.thresholds.len();
        let mut out = Vec::with_capacity(self.cell_count());
        for i in 0..p {
            for j in 0..p {
                if self.reduced {
                    out.push(Cell { i, j, k: i, l: j });
                } else {
                    for k in 0..b {
                        for l in 0..b {
                            out.push(Cell { i, j, k, l });
                        }
                    }
                }
            }
        }
        out
    }

    /// Position of `cell` in the stacked vector, if it belongs to the grid.
    pub fn position(&self, cell: Cell) -> Option<usize> {
        let p = self.levels.len();
        let b = self.thresholds.len();
        if cell.i >= p || cell.j >= p {
            return None;
        }
        if self.reduced {
            (cell.k == cell.i && cell.l == cell.j).then_some(cell.i * p + cell.j)
        } else if cell.k < b && cell.l < b {
            Some(((cell.i * p + cell.j) * b + cell.k) * b + cell.l)
        } else {
            None
        }
    }

    /// Concrete `(τ, τ', β, β')` values of a cell.
    pub fn values(&self, cell: Cell) -> (F, F, F, F) {
        (
            self.levels[cell.i],
            self.levels[cell.j],
            self.thresholds[cell.k],
            self.thresholds[cell.l],
        )
    }
}

fn check_grid_values<F: Scalar>(values: &[F]) -> Result<()> {
    if values.is_empty() {
        return Err(FqaError::param("grid", "needs at least one value"));
    }
    check_levels(values)
}

/// `(1/T) Σ 1{fractions_i ≤ β}`.
pub fn marginal_prob<F: Scalar>(fractions: ArrayView1<'_, F>, beta: F) -> Result<F> {
    if fractions.is_empty() {
        return Err(FqaError::EmptySample);
    }
    let hits = fractions.iter().filter(|&&f| f <= beta).count();
    Ok(F::count(hits) / F::count(fractions.len()))
}

/// `(1/T) Σ_{i=1}^{T−l} 1{a_i ≤ β} 1{b_{i+l} ≤ β'}` for `1 ≤ l ≤ T − 1`.
pub fn joint_prob<F: Scalar>(
    frac_tau: ArrayView1<'_, F>,
    frac_tau_prime: ArrayView1<'_, F>,
    lag: usize,
    beta: F,
    beta_prime: F,
) -> Result<F> {
    let t = frac_tau.len();
    if frac_tau_prime.len() != t {
        return Err(FqaError::LengthMismatch {
            expected: t,
            found: frac_tau_prime.len(),
        });
    }
    if lag == 0 || lag >= t {
        return Err(FqaError::LagOutOfRange { lag, len: t });
    }
    let hits = frac_tau
        .iter()
        .zip(frac_tau_prime.iter().skip(lag))
        .filter(|(&a, &b)| a <= beta && b <= beta_prime)
        .count();
    Ok(F::count(hits) / F::count(t))
}

/// Binary indicator series `1{frac_t ≤ β}` with its count of ones.
#[derive(Debug, Clone)]
pub(crate) struct Indicator {
    pub(crate) bits: Vec<bool>,
    pub(crate) ones: usize,
}

impl Indicator {
    pub(crate) fn new<F: Scalar>(fractions: ArrayView1<'_, F>, threshold: F) -> Self {
        let bits: Vec<bool> = fractions.iter().map(|&f| f <= threshold).collect();
        let ones = bits.iter().filter(|&&b| b).count();
        Indicator { bits, ones }
    }

    fn degenerate(&self) -> bool {
        self.ones == 0 || self.ones == self.bits.len()
    }

    pub(crate) fn mean<F: Scalar>(&self) -> F {
        F::count(self.ones) / F::count(self.bits.len())
    }
}

/// Marginals and correlation of one non-degenerate cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellEstimate<F> {
    pub(crate) p_hat: F,
    pub(crate) q_hat: F,
    pub(crate) rho: F,
}

/// Correlation of lead indicator `x` with lagged indicator `y`.
pub(crate) fn cell_estimate<F: Scalar>(
    x: &Indicator,
    y: &Indicator,
    lag: usize,
) -> std::result::Result<CellEstimate<F>, FqaError> {
    let t = x.bits.len();
    let p_hat: F = x.mean();
    let q_hat: F = y.mean();
    if x.degenerate() || y.degenerate() {
        return Err(FqaError::DegenerateCell {
            p_hat: p_hat.as_f64(),
            q_hat: q_hat.as_f64(),
        });
    }
    let joint_hits = x
        .bits
        .iter()
        .zip(y.bits.iter().skip(lag))
        .filter(|(&a, &b)| a && b)
        .count();
    let joint = F::count(joint_hits) / F::count(t);
    let denom = (p_hat * (F::one() - p_hat) * q_hat * (F::one() - q_hat)).sqrt();
    let rho = clamp_rounding((joint - p_hat * q_hat) / denom);
    Ok(CellEstimate { p_hat, q_hat, rho })
}

fn clamp_rounding<F: Scalar>(rho: F) -> F {
    let excess = rho.abs() - F::one();
    if excess > F::zero() && excess.as_f64() <= CLAMP_SLACK {
        rho.signum()
    } else {
        rho
    }
}

fn check_lag(lag: usize, t: usize) -> Result<()> {
    if lag == 0 || lag + 2 > t {
        return Err(FqaError::LagOutOfRange { lag, len: t });
    }
    Ok(())
}

fn level_column<F: Scalar>(table: &ExcursionTable<F>, level: F) -> Result<ArrayView1<'_, F>> {
    table
        .level_index(level)
        .map(|i| table.column(i))
        .ok_or(FqaError::UnknownLevel(level.as_f64()))
}

/// Sample FQA `ρ̂(τ, τ', l, β, β')` from an excursion table.
///
/// Fails with [`FqaError::DegenerateCell`] when either marginal estimate is
/// 0 or 1, and with [`FqaError::LagOutOfRange`] unless `1 ≤ l ≤ T − 2`.
pub fn fqa_hat<F: Scalar>(table: &ExcursionTable<F>, params: &FqaParams<F>) -> Result<F> {
    check_lag(params.lag, table.source_len())?;
    let x = Indicator::new(level_column(table, params.tau)?, params.beta);
    let y = Indicator::new(level_column(table, params.tau_prime)?, params.beta_prime);
    cell_estimate(&x, &y, params.lag).map(|c| c.rho)
}

/// Indicator series for every `(level, threshold)` pair the grid touches,
/// indexed `[i][k]`. Reduced grids only need the diagonal `k = i`.
pub(crate) struct GridIndicators {
    series: Vec<Vec<Option<Indicator>>>,
}

impl GridIndicators {
    pub(crate) fn new<F: Scalar>(table: &ExcursionTable<F>, grid: &FqaGrid<F>) -> Result<Self> {
        let columns = grid
            .levels()
            .iter()
            .map(|&l| level_column(table, l))
            .collect::<Result<Vec<_>>>()?;
        let b = grid.thresholds().len();
        let series = columns
            .iter()
            .enumerate()
            .map(|(i, col)| {
                (0..b)
                    .map(|k| {
                        (!grid.is_reduced() || k == i)
                            .then(|| Indicator::new(col.view(), grid.thresholds()[k]))
                    })
                    .collect()
            })
            .collect();
        Ok(GridIndicators { series })
    }

    pub(crate) fn lead(&self, cell: Cell) -> &Indicator {
        self.series[cell.i][cell.k].as_ref().expect("indicator built")
    }

    pub(crate) fn lagged(&self, cell: Cell) -> &Indicator {
        self.series[cell.j][cell.l].as_ref().expect("indicator built")
    }
}

/// Stacked FQA estimates over a grid at one lag.
///
/// Degenerate cells carry `NaN` in `values` and `true` in `mask`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FqaVector<F> {
    values: Vec<F>,
    mask: Vec<bool>,
    grid: FqaGrid<F>,
    lag: usize,
    series_len: usize,
}

impl<F: Scalar> FqaVector<F> {
    pub fn values(&self) -> &[F] {
        &self.values
    }

    /// `true` where the cell is degenerate and excluded.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn grid(&self) -> &FqaGrid<F> {
        &self.grid
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// Length `T` of the series the estimates come from.
    pub fn series_len(&self) -> usize {
        self.series_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Value at `cell`, `None` if masked or outside the grid.
    pub fn get(&self, cell: Cell) -> Option<F> {
        let pos = self.grid.position(cell)?;
        (!self.mask[pos]).then(|| self.values[pos])
    }

    /// Unmasked `(position, value)` pairs in stacking order.
    pub fn unmasked(&self) -> impl Iterator<Item = (usize, F)> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter(|(_, (_, &m))| !m)
            .map(|(pos, (&v, _))| (pos, v))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Evaluates every grid cell at lag `l`, masking degenerate ones.
pub fn fqa_vector<F: Scalar>(
    table: &ExcursionTable<F>,
    grid: &FqaGrid<F>,
    lag: usize,
) -> Result<FqaVector<F>> {
    check_lag(lag, table.source_len())?;
    let indicators = GridIndicators::new(table, grid)?;
    let cells = grid.cells();
    let mut values = Vec::with_capacity(cells.len());
    let mut mask = Vec::with_capacity(cells.len());
    for cell in cells {
        match cell_estimate::<F>(indicators.lead(cell), indicators.lagged(cell), lag) {
            Ok(c) => {
                values.push(c.rho);
                mask.push(false);
            }
            Err(_) => {
                values.push(F::nan());
                mask.push(true);
            }
        }
    }
    Ok(FqaVector {
        values,
        mask,
        grid: grid.clone(),
        lag,
        series_len: table.source_len(),
    })
}

/// Omnibus statistic `Ŝ_T(l)` and its scaled form `T·Ŝ_T(l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmnibusStatistic<F> {
    pub s_hat: F,
    pub scaled: F,
    pub used_cells: usize,
    pub masked_cells: usize,
}

/// Sum of squared unmasked FQA estimates.
pub fn omnibus_stat<F: Scalar>(v: &FqaVector<F>) -> Result<OmnibusStatistic<F>> {
    let masked_cells = v.masked_count();
    let used_cells = v.len() - masked_cells;
    if used_cells == 0 {
        return Err(FqaError::AllCellsMasked(v.len()));
    }
    let s_hat: F = v.unmasked().map(|(_, r)| r * r).sum();
    Ok(OmnibusStatistic {
        s_hat,
        scaled: s_hat * F::count(v.series_len),
        used_cells,
        masked_cells,
    })
}
