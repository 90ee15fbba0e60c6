//! Densely observed functional time series: storage, CSV ingestion and the
//! log-return transform for intraday price curves.
//!
//! A series of `T` curves observed on `p` grid points is stored as a `T × p`
//! matrix whose row `t` holds curve `t`. The grid itself is implicit: point
//! `j` sits at `j / (p - 1)` on `[0, 1]`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{FqaError, Result, Violation};
use crate::scalar::Scalar;

/// At most this many non-finite cells are listed in a validation error.
const MAX_REPORTED_VIOLATIONS: usize = 20;

/// `T × p` matrix of curve values, row `t` = curve at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveMatrix<F> {
    values: Array2<F>,
}

impl<F: Scalar> CurveMatrix<F> {
    /// Wraps `values` after checking every invariant (see [`validate`]).
    pub fn new(values: Array2<F>) -> Result<Self> {
        validate(values)
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let t = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(FqaError::Ragged {
                line: i + 1,
                expected: p,
                found: r.len(),
            });
        }
        let flat: Vec<F> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((t, p), flat).expect("shape checked above");
        Self::new(values)
    }

    /// Series length `T`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    /// Always false; a valid matrix holds at least two curves.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of grid points `p`.
    pub fn grid_size(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<F> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, F> {
        self.values.view()
    }

    pub fn curve(&self, t: usize) -> ArrayView1<'_, F> {
        self.values.row(t)
    }

    pub fn into_values(self) -> Array2<F> {
        self.values
    }

    pub fn grid(&self) -> EvalGrid<F> {
        EvalGrid::uniform(self.grid_size())
    }
}

/// Checks the curve-matrix invariants and returns the wrapped matrix.
///
/// Fails with every violation found: `T < 2`, `p < 2`, and the positions of
/// non-finite entries (up to a reporting cap).
pub fn validate<F: Scalar>(values: Array2<F>) -> Result<CurveMatrix<F>> {
    let mut violations = Vec::new();
    if values.nrows() < 2 {
        violations.push(Violation::SeriesTooShort {
            len: values.nrows(),
        });
    }
    if values.ncols() < 2 {
        violations.push(Violation::GridTooSmall {
            points: values.ncols(),
        });
    }
    let non_finite = values
        .indexed_iter()
        .filter(|(_, v)| !v.is_finite())
        .take(MAX_REPORTED_VIOLATIONS)
        .map(|((row, column), _)| Violation::NonFinite { row, column });
    violations.extend(non_finite);

    if violations.is_empty() {
        Ok(CurveMatrix { values })
    } else {
        Err(FqaError::Invalid(violations))
    }
}

/// Evenly spaced evaluation points `u_j = j / (p - 1)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid<F> {
    points: Vec<F>,
}

impl<F: Scalar> EvalGrid<F> {
    /// Grid of `p ≥ 2` points with both end points included.
    pub fn uniform(p: usize) -> Self {
        assert!(p >= 2, "evaluation grid needs at least two points");
        let last = F::count(p - 1);
        let points = (0..p).map(|j| F::count(j) / last).collect();
        EvalGrid { points }
    }

    /// Accepts an explicit grid if it starts at 0, ends at 1 and is evenly
    /// spaced to within `1e-12` relative tolerance.
    pub fn from_points(points: Vec<F>) -> Result<Self> {
        let p = points.len();
        if p < 2 {
            return Err(FqaError::param("grid", "need at least two points"));
        }
        if points[0] != F::zero() || points[p - 1] != F::one() {
            return Err(FqaError::param("grid", "must start at 0 and end at 1"));
        }
        let step = 1.0 / (p - 1) as f64;
        for (j, u) in points.iter().enumerate() {
            let expected = j as f64 * step;
            if (u.as_f64() - expected).abs() > 1e-12 * expected.max(step) {
                return Err(FqaError::param(
                    "grid",
                    format!("point {j} = {u} is not evenly spaced"),
                ));
            }
        }
        Ok(EvalGrid { points })
    }

    pub fn points(&self) -> &[F] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance between neighbouring points, `1 / (p - 1)`.
    pub fn spacing(&self) -> F {
        F::one() / F::count(self.points.len() - 1)
    }

    /// Composite trapezoid weights, so that `Σ w_j f(u_j) ≈ ∫₀¹ f`.
    pub fn trapezoid_weights(&self) -> Vec<F> {
        let h = self.spacing();
        let half = h / F::of(2.0);
        let last = self.points.len() - 1;
        (0..=last)
            .map(|j| if j == 0 || j == last { half } else { h })
            .collect()
    }
}

/// Reads one curve per CSV record.
pub fn read_csv<F: Scalar, R: Read>(reader: R, has_header: bool) -> Result<CurveMatrix<F>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut rows: Vec<Vec<F>> = Vec::new();
    let mut width = None;
    for record in rdr.records() {
        let record = record?;
        let line = record
            .position()
            .map_or(rows.len() + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(FqaError::Ragged {
                line,
                expected,
                found: record.len(),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, text)| {
                text.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .map(F::of)
                    .ok_or_else(|| FqaError::Parse {
                        line,
                        column: j + 1,
                        text: text.to_string(),
                    })
            })
            .collect::<Result<Vec<F>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(FqaError::Invalid(vec![Violation::SeriesTooShort { len: 0 }]));
    }
    CurveMatrix::from_rows(&rows)
}

/// Loads a curve matrix from a CSV file, one curve per line.
pub fn load_csv<F: Scalar>(path: impl AsRef<Path>, has_header: bool) -> Result<CurveMatrix<F>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| FqaError::io(path, e))?;
    read_csv(file, has_header)
}

/// Writes one curve per line with no header. Values use the shortest
/// representation that parses back to the same float.
pub fn write_csv<F: Scalar, W: Write>(m: &CurveMatrix<F>, writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for row in m.values.rows() {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b",")?;
            }
            first = false;
            write!(w, "{v}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_csv<F: Scalar>(m: &CurveMatrix<F>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| FqaError::io(path, e))?;
    write_csv(m, file).map_err(|e| FqaError::io(path, e))
}

/// Intraday log-returns `ln P_t(u_{j+1}) − ln P_t(u_j)`.
///
/// The result has `p − 1` columns and is read on its own evenly spaced grid
/// over `[0, 1]`. Requires `p ≥ 3` so the output is itself a valid curve
/// matrix.
pub fn log_returns<F: Scalar>(prices: &CurveMatrix<F>) -> Result<CurveMatrix<F>> {
    if let Some(((row, column), v)) = prices.values.indexed_iter().find(|(_, v)| **v <= F::zero())
    {
        return Err(FqaError::NonPositivePrice {
            row,
            column,
            value: v.as_f64(),
        });
    }
    let (t, p) = prices.values.dim();
    let logs = prices.values.mapv(F::ln);
    let returns = Array2::from_shape_fn((t, p - 1), |(i, j)| logs[[i, j + 1]] - logs[[i, j]]);
    CurveMatrix::new(returns)
}
