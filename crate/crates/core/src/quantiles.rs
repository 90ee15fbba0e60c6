//! Pointwise empirical quantile curves and discrete excursion sets.
//!
//! The level-τ quantile curve is the generalized inverse of the pointwise
//! ECDF, i.e. the `⌈τT⌉`-th order statistic of each grid column. A curve's
//! excursion fraction below a quantile curve is the share of grid points
//! where it lies at or below that curve; every downstream estimator is a
//! functional of these fractions.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{FqaError, Result};
use crate::scalar::{same_level, Scalar};

/// Estimated quantile curves, row `i` evaluated at level `levels[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileCurveSet<F> {
    levels: Vec<F>,
    curves: Array2<F>,
}

impl<F: Scalar> QuantileCurveSet<F> {
    pub fn levels(&self) -> &[F] {
        &self.levels
    }

    /// `P × p` matrix of curve values.
    pub fn curves(&self) -> &Array2<F> {
        &self.curves
    }

    pub fn curve(&self, i: usize) -> ArrayView1<'_, F> {
        self.curves.row(i)
    }

    pub fn grid_size(&self) -> usize {
        self.curves.ncols()
    }
}

/// Excursion fractions `#Â_τ^t / p` for every curve `t` and level `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionTable<F> {
    fractions: Array2<F>,
    levels: Vec<F>,
    source_p: usize,
}

impl<F: Scalar> ExcursionTable<F> {
    /// Builds a table directly from fractions, e.g. for fixtures.
    pub fn from_fractions(fractions: Array2<F>, levels: Vec<F>, source_p: usize) -> Result<Self> {
        if fractions.ncols() != levels.len() {
            return Err(FqaError::LengthMismatch {
                expected: levels.len(),
                found: fractions.ncols(),
            });
        }
        check_levels(&levels)?;
        Ok(ExcursionTable {
            fractions,
            levels,
            source_p,
        })
    }

    /// `T × P` matrix of fractions.
    pub fn fractions(&self) -> &Array2<F> {
        &self.fractions
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, F> {
        self.fractions.column(i)
    }

    pub fn levels(&self) -> &[F] {
        &self.levels
    }

    /// Number of curves the table was computed from.
    pub fn source_len(&self) -> usize {
        self.fractions.nrows()
    }

    /// Grid size of the curves the table was computed from.
    pub fn source_grid_size(&self) -> usize {
        self.source_p
    }

    /// Index of `level` in the table, if present.
    pub fn level_index(&self, level: F) -> Option<usize> {
        self.levels.iter().position(|&l| same_level(l, level))
    }

    /// Returns the same table with its rows in reverse time order.
    pub fn time_reversed(&self) -> Self {
        let mut fractions = self.fractions.clone();
        fractions.invert_axis(ndarray::Axis(0));
        ExcursionTable {
            fractions: fractions.as_standard_layout().into_owned(),
            levels: self.levels.clone(),
            source_p: self.source_p,
        }
    }
}

/// Empirical CDF of `sample` at `x`: `(1/T) Σ 1{sample_i ≤ x}`.
pub fn ecdf_at<F: Scalar>(sample: &[F], x: F) -> Result<F> {
    if sample.is_empty() {
        return Err(FqaError::EmptySample);
    }
    let hits = sample.iter().filter(|&&v| v <= x).count();
    Ok(F::count(hits) / F::count(sample.len()))
}

/// One-based rank of the order statistic that inverts the ECDF at `level`:
/// the smallest `k` with `k / n ≥ level`.
///
/// `level * n` is snapped to the nearest integer when within `1e-9`, or
/// within the representation error of `level` in `F` times `n` if larger, so
/// that levels such as `0.15` do not jump a rank through rounding.
pub fn order_statistic_rank<F: Scalar>(level: F, n: usize) -> usize {
    let x = level.as_f64() * n as f64;
    let nearest = x.round();
    let tol = (4.0 * F::epsilon().as_f64() * n as f64).max(1e-9);
    let k = if (x - nearest).abs() < tol {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).clamp(1, n)
}

pub(crate) fn check_levels<F: Scalar>(levels: &[F]) -> Result<()> {
    for &l in levels {
        if !(l > F::zero() && l < F::one()) {
            return Err(FqaError::LevelOutOfRange(l.as_f64()));
        }
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FqaError::UnsortedLevels);
    }
    Ok(())
}

/// Quantile curves at each of `levels` from a `T × p` sample of curves.
///
/// Levels must lie in `(0, 1)` and be strictly ascending.
pub fn quantile_curves<F: Scalar>(
    curves: ArrayView2<'_, F>,
    levels: &[F],
) -> Result<QuantileCurveSet<F>> {
    check_levels(levels)?;
    let (t, p) = curves.dim();
    if t == 0 {
        return Err(FqaError::EmptySample);
    }
    let ranks: Vec<usize> = levels
        .iter()
        .map(|&l| order_statistic_rank(l, t))
        .collect();

    let mut out = Array2::zeros((levels.len(), p));
    let mut column = Vec::with_capacity(t);
    for j in 0..p {
        column.clear();
        column.extend(curves.column(j).iter().copied());
        column.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite curve values"));
        for (i, &k) in ranks.iter().enumerate() {
            out[[i, j]] = column[k - 1];
        }
    }
    Ok(QuantileCurveSet {
        levels: levels.to_vec(),
        curves: out,
    })
}

/// Number of grid points where `curve` lies at or below `qcurve`.
fn excursion_count<F: Scalar>(curve: ArrayView1<'_, F>, qcurve: ArrayView1<'_, F>) -> usize {
    curve
        .iter()
        .zip(qcurve.iter())
        .filter(|(x, q)| x <= q)
        .count()
}

/// Fraction of grid points where `curve ≤ qcurve` (inclusive).
pub fn excursion_fraction<F: Scalar>(
    curve: ArrayView1<'_, F>,
    qcurve: ArrayView1<'_, F>,
) -> Result<F> {
    if curve.len() != qcurve.len() {
        return Err(FqaError::LengthMismatch {
            expected: qcurve.len(),
            found: curve.len(),
        });
    }
    if curve.is_empty() {
        return Err(FqaError::EmptySample);
    }
    Ok(F::count(excursion_count(curve, qcurve)) / F::count(curve.len()))
}

/// Excursion fraction of every curve against every quantile curve.
pub fn excursion_table<F: Scalar>(
    curves: ArrayView2<'_, F>,
    q: &QuantileCurveSet<F>,
) -> Result<ExcursionTable<F>> {
    let (t, p) = curves.dim();
    if p != q.grid_size() {
        return Err(FqaError::LengthMismatch {
            expected: q.grid_size(),
            found: p,
        });
    }
    if p == 0 {
        return Err(FqaError::EmptySample);
    }
    let denom = F::count(p);
    let levels = q.levels().len();
    let fractions = Array2::from_shape_fn((t, levels), |(row, i)| {
        F::count(excursion_count(curves.row(row), q.curve(i))) / denom
    });
    Ok(ExcursionTable {
        fractions,
        levels: q.levels().to_vec(),
        source_p: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_examples() {
        let s = [1.0, 2.0, 3.0];
        assert_eq!(ecdf_at(&s, 2.0).unwrap(), 2.0 / 3.0);
        assert_eq!(ecdf_at(&s, 0.0).unwrap(), 0.0);
        assert_eq!(ecdf_at(&s, 3.0).unwrap(), 1.0);
        assert!(matches!(ecdf_at::<f64>(&[], 1.0), Err(FqaError::EmptySample)));
    }

    #[test]
    fn quantile_examples() {
        let m = column(&[3.0, 1.0, 4.0, 2.0]);
        let q = quantile_curves(m.view(), &[0.25, 0.5, 0.95]).unwrap();
        assert_eq!(q.curves().column(0).to_vec(), vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn quantile_level_validation() {
        let m = column(&[1.0, 2.0]);
        assert!(matches!(
            quantile_curves(m.view(), &[0.0]),
            Err(FqaError::LevelOutOfRange(_))
        ));
        assert!(matches!(
            quantile_curves(m.view(), &[1.0]),
            Err(FqaError::LevelOutOfRange(_))
        ));
        assert!(matches!(
            quantile_curves(m.view(), &[0.6, 0.4]),
            Err(FqaError::UnsortedLevels)
        ));
        assert!(matches!(
            quantile_curves(m.view(), &[0.5, 0.5]),
            Err(FqaError::UnsortedLevels)
        ));
    }

    #[test]
    fn rank_snaps_representation_error() {
        assert_eq!(order_statistic_rank(0.15_f64, 100), 15);
        assert_eq!(order_statistic_rank(0.15_f64 + 1e-6, 100), 16);
        assert_eq!(order_statistic_rank(0.5_f64, 4), 2);
        assert_eq!(order_statistic_rank(0.01_f64, 4), 1);
        assert_eq!(order_statistic_rank(0.999_f64, 4), 4);
        // 0.2_f32 is 0.2000000030, which would otherwise round 0.2·80 up to 17.
        assert_eq!(order_statistic_rank(0.2_f32, 80), 16);
        assert_eq!(order_statistic_rank(0.15_f32, 1000), 150);
    }

    #[test]
    fn excursion_fraction_examples() {
        let q = array![1.0, 2.0, 3.0];
        let below = array![0.0, 1.0, 2.0];
        let above = array![2.0, 3.0, 4.0];
        assert_eq!(excursion_fraction(below.view(), q.view()).unwrap(), 1.0);
        assert_eq!(excursion_fraction(above.view(), q.view()).unwrap(), 0.0);
        assert_eq!(excursion_fraction(q.view(), q.view()).unwrap(), 1.0);
        let short = array![1.0];
        assert!(matches!(
            excursion_fraction(short.view(), q.view()),
            Err(FqaError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_curve_equal_to_its_median() {
        let m = array![[0.3, -1.0, 2.0]];
        let q = quantile_curves(m.view(), &[0.5]).unwrap();
        let table = excursion_table(m.view(), &q).unwrap();
        assert_eq!(table.fractions()[[0, 0]], 1.0);
    }

    #[test]
    fn grid_size_mismatch() {
        let m = array![[1.0, 2.0], [3.0, 4.0]];
        let other = array![[1.0, 2.0, 3.0], [3.0, 4.0, 5.0]];
        let q = quantile_curves(other.view(), &[0.5]).unwrap();
        assert!(excursion_table(m.view(), &q).is_err());
    }

    #[test]
    fn time_reversal_flips_rows() {
        let table =
            ExcursionTable::from_fractions(array![[0.1], [0.2], [0.3]], vec![0.5], 10).unwrap();
        let rev = table.time_reversed();
        assert_eq!(rev.fractions().column(0).to_vec(), vec![0.3, 0.2, 0.1]);
    }

    fn sample_strategy() -> impl Strategy<Value = (Array2<f64>, Vec<f64>)> {
        (1usize..15, 1usize..8).prop_flat_map(|(t, p)| {
            let values = prop::collection::vec(-5i32..5, t * p);
            let levels = prop::collection::btree_set(1u32..20, 1..5);
            (values, levels).prop_map(move |(v, l)| {
                let m = Array2::from_shape_vec(
                    (t, p),
                    v.into_iter().map(|x| x as f64 * 0.5).collect(),
                )
                .unwrap();
                let levels = l.into_iter().map(|k| k as f64 / 20.0).collect();
                (m, levels)
            })
        })
    }

    proptest! {
        #[test]
        fn quantile_curves_are_order_statistics_and_monotone((m, levels) in sample_strategy()) {
            let q = quantile_curves(m.view(), &levels).unwrap();
            for j in 0..m.ncols() {
                let col = m.column(j).to_vec();
                for i in 0..levels.len() {
                    let v = q.curves()[[i, j]];
                    prop_assert!(col.contains(&v));
                    // generalized inverse: F(v) ≥ τ and F(x) < τ for every smaller observed x
                    prop_assert!(ecdf_at(&col, v).unwrap() >= levels[i] - 1e-12);
                    for &x in col.iter().filter(|&&x| x < v) {
                        prop_assert!(ecdf_at(&col, x).unwrap() < levels[i] + 1e-12);
                    }
                    if i > 0 {
                        prop_assert!(q.curves()[[i - 1, j]] <= v);
                    }
                }
            }
        }

        #[test]
        fn excursion_table_integral_and_monotone((m, levels) in sample_strategy()) {
            let q = quantile_curves(m.view(), &levels).unwrap();
            let table = excursion_table(m.view(), &q).unwrap();
            let p = m.ncols() as f64;
            for row in table.fractions().rows() {
                for w in row.to_vec().windows(2) {
                    prop_assert!(w[0] <= w[1]);
                }
                for &f in row {
                    let k = f * p;
                    prop_assert!((k - k.round()).abs() < 1e-9);
                    prop_assert!((0.0..=1.0).contains(&f));
                }
            }
        }
    }

    #[test]
    fn fraction_converges_to_level_for_iid_data() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let (t, p) = (400, 400);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = Array2::from_shape_simple_fn((t, p), || StandardNormal.sample(&mut rng));
        let levels = [0.1, 0.5, 0.9];
        let q = quantile_curves(m.view(), &levels).unwrap();
        let table = excursion_table(m.view(), &q).unwrap();
        for (i, &tau) in levels.iter().enumerate() {
            let mean: f64 = table.column(i).mean().unwrap();
            // every (t, j) indicator has success probability ≈ τ
            let se = (tau * (1.0 - tau) / (t * p) as f64).sqrt();
            assert!((mean - tau).abs() <= 3.0 * se + 1.0 / t as f64, "{mean} vs {tau}");
        }
    }
}
