//! Indicator summands, the lag-window covariance estimate `Ω̂` and its
//! spectrum.

use std::sync::OnceLock;

use ndarray::{s, Array2, ArrayView2, Axis};

use crate::error::{FqaError, Result};
use crate::fqa::{cell_estimate, FqaGrid, GridIndicators, Indicator};
use crate::linalg::{symmetric_eigen, symmetric_eigenvalues};
use crate::quantiles::ExcursionTable;
use crate::scalar::Scalar;

/// Fewest summand rows accepted by [`estimate_omega`].
pub const MIN_SUMMAND_ROWS: usize = 10;

/// Tolerance for the symmetry check in [`eigenvalues`].
const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Standardized centred indicator products, one column per unmasked cell.
///
/// Row `t` (for `t = 1..T−l`) of column `c` holds
/// `(X_t − p̂)(Y_{t+l} − q̂) / sqrt(p̂(1−p̂) q̂(1−q̂))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummandMatrix<F> {
    rows: Array2<F>,
    positions: Vec<usize>,
    lag: usize,
    series_len: usize,
}

impl<F: Scalar> SummandMatrix<F> {
    /// `(T − l) × d` summand matrix.
    pub fn rows(&self) -> &Array2<F> {
        &self.rows
    }

    /// Position in the stacked FQA vector of each column.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Number of unmasked cells `d`.
    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }
}

/// Summand series of a single non-degenerate cell.
pub(crate) fn cell_summands<F: Scalar>(
    x: &Indicator,
    y: &Indicator,
    lag: usize,
    p_hat: F,
    q_hat: F,
) -> Vec<F> {
    let n = x.bits.len() - lag;
    let scale = (p_hat * (F::one() - p_hat) * q_hat * (F::one() - q_hat))
        .sqrt()
        .recip();
    let centred = |bit: bool, mean: F| if bit { F::one() - mean } else { -mean };
    (0..n)
        .map(|t| centred(x.bits[t], p_hat) * centred(y.bits[t + lag], q_hat) * scale)
        .collect()
}

/// Builds the summand matrix for every non-degenerate cell of `grid`, with
/// columns in FQA-vector order and full-sample marginals.
pub fn indicator_summands<F: Scalar>(
    table: &ExcursionTable<F>,
    grid: &FqaGrid<F>,
    lag: usize,
) -> Result<SummandMatrix<F>> {
    let t = table.source_len();
    if lag == 0 || lag + 2 > t {
        return Err(FqaError::LagOutOfRange { lag, len: t });
    }
    let indicators = GridIndicators::new(table, grid)?;
    let n = t - lag;
    let mut columns = Vec::new();
    let mut positions = Vec::new();
    for (pos, cell) in grid.cells().into_iter().enumerate() {
        let (x, y) = (indicators.lead(cell), indicators.lagged(cell));
        if let Ok(est) = cell_estimate::<F>(x, y, lag) {
            columns.push(cell_summands(x, y, lag, est.p_hat, est.q_hat));
            positions.push(pos);
        }
    }
    let d = columns.len();
    let rows = Array2::from_shape_fn((n, d), |(r, c)| columns[c][r]);
    Ok(SummandMatrix {
        rows,
        positions,
        lag,
        series_len: t,
    })
}

/// Bartlett lag-window weight `1 − r/(h+1)`.
pub fn bartlett_weight(r: usize, bandwidth: usize) -> f64 {
    1.0 - r as f64 / (bandwidth + 1) as f64
}

/// Default lag-window half-width `⌊T^{1/3}⌋`.
pub fn auto_bandwidth(series_len: usize) -> usize {
    let mut h = (series_len as f64).cbrt().floor() as usize;
    while (h + 1).pow(3) <= series_len {
        h += 1;
    }
    while h > 0 && h.pow(3) > series_len {
        h -= 1;
    }
    h
}

/// Covariance estimate after projection onto the PSD cone.
///
/// The spectrum is computed eagerly; the projected matrix, which needs the
/// eigenvectors, only on first access.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate<F> {
    raw: Array2<F>,
    projected: OnceLock<Array2<F>>,
    eigenvalues: Vec<F>,
    clamped: usize,
    bandwidth: usize,
}

impl<F: Scalar> PartialEq for CovarianceEstimate<F> {
    fn eq(&self, other: &Self) -> bool {
        self.raw == other.raw && self.bandwidth == other.bandwidth
    }
}

impl<F: Scalar> CovarianceEstimate<F> {
    fn from_raw(raw: Array2<F>, bandwidth: usize) -> Self {
        let spectrum = symmetric_eigenvalues(raw.view());
        let clamped = spectrum.iter().filter(|&&l| l < F::zero()).count();
        CovarianceEstimate {
            eigenvalues: spectrum.into_iter().map(|l| l.max(F::zero())).collect(),
            raw,
            projected: OnceLock::new(),
            clamped,
            bandwidth,
        }
    }

    /// The PSD-projected `Ω̂`.
    pub fn matrix(&self) -> &Array2<F> {
        if self.clamped == 0 {
            return &self.raw;
        }
        self.projected.get_or_init(|| {
            symmetric_eigen(self.raw.view()).reconstruct_with(|l| l.max(F::zero()))
        })
    }

    /// `Ω̂` before projection.
    pub fn unprojected(&self) -> &Array2<F> {
        &self.raw
    }

    /// Spectrum of [`Self::matrix`], descending and nonnegative.
    pub fn eigenvalues(&self) -> &[F] {
        &self.eigenvalues
    }

    /// How many negative eigenvalues the projection set to zero.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn into_matrix(self) -> Array2<F> {
        if self.clamped == 0 {
            return self.raw;
        }
        self.matrix();
        self.projected.into_inner().expect("projection computed")
    }
}

/// Lag-window estimate `Γ̂_0 + Σ_{r=1}^{h} w(r)(Γ̂_r + Γ̂_rᵀ)` of the
/// covariance of the summand rows, with Bartlett weights, mean-centred
/// autocovariances (divisor `T − l`), and negative eigenvalues clamped to 0.
pub fn estimate_omega<F: Scalar>(
    s: &SummandMatrix<F>,
    bandwidth: usize,
) -> Result<CovarianceEstimate<F>> {
    let (n, d) = s.rows.dim();
    if n < MIN_SUMMAND_ROWS {
        return Err(FqaError::TooFewRows {
            rows: n,
            min: MIN_SUMMAND_ROWS,
        });
    }
    if d == 0 {
        return Ok(CovarianceEstimate {
            raw: Array2::zeros((0, 0)),
            projected: OnceLock::new(),
            eigenvalues: Vec::new(),
            clamped: 0,
            bandwidth,
        });
    }
    let mean = s.rows.mean_axis(Axis(0)).expect("non-empty rows");
    let centred = &s.rows - &mean;

    // Ω̂ = Zᵀ K Z / n with K the banded Toeplitz matrix of Bartlett weights.
    let h = bandwidth.min(n - 1);
    let mut smoothed = centred.clone();
    for r in 1..=h {
        let w = F::of(bartlett_weight(r, bandwidth));
        smoothed
            .slice_mut(s![..n - r, ..])
            .scaled_add(w, &centred.slice(s![r.., ..]));
        smoothed
            .slice_mut(s![r.., ..])
            .scaled_add(w, &centred.slice(s![..n - r, ..]));
    }
    let raw = centred.t().dot(&smoothed) / F::count(n);
    let raw = Array2::from_shape_fn((d, d), |(i, j)| (raw[[i, j]] + raw[[j, i]]) / F::of(2.0));
    Ok(project_psd(raw, bandwidth))
}

fn project_psd<F: Scalar>(matrix: Array2<F>, bandwidth: usize) -> CovarianceEstimate<F> {
    CovarianceEstimate::from_raw(matrix, bandwidth)
}

/// Spectrum of a symmetric matrix, descending, negatives clamped to 0.
pub fn eigenvalues<F: Scalar>(omega: ArrayView2<'_, F>) -> Result<Vec<F>> {
    let n = omega.nrows();
    if omega.ncols() != n {
        return Err(FqaError::LengthMismatch {
            expected: n,
            found: omega.ncols(),
        });
    }
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((omega[[i, j]] - omega[[j, i]]).abs().as_f64());
        }
    }
    if asym > SYMMETRY_TOLERANCE {
        return Err(FqaError::NotSymmetric(asym));
    }
    Ok(symmetric_eigenvalues(omega)
        .into_iter()
        .map(|l| l.max(F::zero()))
        .collect())
}
