//! Dense symmetric eigen-solver: Householder reduction to tridiagonal form
//! followed by implicit QL iterations (the EISPACK `tred2`/`tql2` pair).
//!
//! Eigenvector storage is column-major so the inner loops walk contiguous
//! memory; column `c` of the returned matrix is the eigenvector paired with
//! `values[c]`.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Scalar;

/// Eigenvalues (descending) and matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<F> {
    pub values: Vec<F>,
    pub vectors: Array2<F>,
}

impl<F: Scalar> SymmetricEigen<F> {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(F) -> F) -> Array2<F> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (c, &l) in self.values.iter().enumerate() {
            let w = f(l);
            scaled.column_mut(c).mapv_inplace(|v| v * w);
        }
        let out = scaled.dot(&self.vectors.t());
        // symmetrize away rounding
        Array2::from_shape_fn((n, n), |(i, j)| (out[[i, j]] + out[[j, i]]) / F::of(2.0))
    }
}

/// Full eigen-decomposition of a symmetric matrix. Only the lower triangle
/// of `a` is read.
pub fn symmetric_eigen<F: Scalar>(a: ArrayView2<'_, F>) -> SymmetricEigen<F> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return SymmetricEigen {
            values: Vec::new(),
            vectors: Array2::zeros((0, 0)),
        };
    }
    let mut v = lower_column_major(a);
    let (mut d, mut e) = tridiagonalize(&mut v, n, true);
    tql(&mut d, &mut e, Some(&mut v), n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].partial_cmp(&d[x]).expect("finite eigenvalues"));
    let values = order.iter().map(|&c| d[c]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[order[c] * n + r]);
    SymmetricEigen { values, vectors }
}

/// Eigenvalues of a symmetric matrix in descending order, without vectors.
pub fn symmetric_eigenvalues<F: Scalar>(a: ArrayView2<'_, F>) -> Vec<F> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    let mut v = lower_column_major(a);
    let (mut d, mut e) = tridiagonalize(&mut v, n, false);
    tql(&mut d, &mut e, None, n);
    d.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    d
}

/// Copies the lower triangle into column-major storage, so entry `(r, c)`
/// lives at `c * n + r`. The upper triangle is mirrored in.
fn lower_column_major<F: Scalar>(a: ArrayView2<'_, F>) -> Vec<F> {
    let n = a.nrows();
    let mut v = vec![F::zero(); n * n];
    for c in 0..n {
        for r in 0..n {
            v[c * n + r] = if r >= c { a[[r, c]] } else { a[[c, r]] };
        }
    }
    v
}

/// Householder tridiagonalization. Returns diagonal `d` and sub-diagonal `e`
/// (with `e[i]` coupling rows `i-1` and `i`). When `accumulate` is set, `v`
/// ends up holding the orthogonal transformation.
fn tridiagonalize<F: Scalar>(v: &mut [F], n: usize, accumulate: bool) -> (Vec<F>, Vec<F>) {
    let at = |r: usize, c: usize| c * n + r;
    let mut d: Vec<F> = (0..n).map(|j| v[at(n - 1, j)]).collect();
    let mut e = vec![F::zero(); n];

    for i in (1..n).rev() {
        let mut scale = F::zero();
        let mut h = F::zero();
        for dk in &d[..i] {
            scale = scale + dk.abs();
        }
        if scale == F::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = F::zero();
                v[at(j, i)] = F::zero();
            }
        } else {
            for dk in &mut d[..i] {
                *dk = *dk / scale;
                h = h + *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > F::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h = h - f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = F::zero();
            }

            for j in 0..i {
                let f = d[j];
                v[at(j, i)] = f;
                let mut g = e[j] + v[at(j, j)] * f;
                let col = &v[j * n..j * n + n];
                for k in j + 1..i {
                    g = g + col[k] * d[k];
                    e[k] = e[k] + col[k] * f;
                }
                e[j] = g;
            }
            let mut f = F::zero();
            for j in 0..i {
                e[j] = e[j] / h;
                f = f + e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] = e[j] - hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let col = &mut v[j * n..j * n + n];
                for k in j..i {
                    col[k] = col[k] - (f * e[k] + g * d[k]);
                }
                d[j] = col[i - 1];
                col[i] = F::zero();
            }
        }
        d[i] = h;
    }

    if accumulate {
        for i in 0..n - 1 {
            v[at(n - 1, i)] = v[at(i, i)];
            v[at(i, i)] = F::one();
            let h = d[i + 1];
            if h != F::zero() {
                for k in 0..=i {
                    d[k] = v[at(k, i + 1)] / h;
                }
                for j in 0..=i {
                    let mut g = F::zero();
                    for k in 0..=i {
                        g = g + v[at(k, i + 1)] * v[at(k, j)];
                    }
                    for k in 0..=i {
                        v[at(k, j)] = v[at(k, j)] - g * d[k];
                    }
                }
            }
            for k in 0..=i {
                v[at(k, i + 1)] = F::zero();
            }
        }
        for j in 0..n {
            d[j] = v[at(n - 1, j)];
            v[at(n - 1, j)] = F::zero();
        }
        v[at(n - 1, n - 1)] = F::one();
    } else {
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = v[at(j, j)];
        }
    }
    e[0] = F::zero();
    (d, e)
}

/// Implicit QL on the tridiagonal pair `(d, e)`; rotations are applied to
/// `v` when present.
fn tql<F: Scalar>(d: &mut [F], e: &mut [F], mut v: Option<&mut [F]>, n: usize) {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = F::zero();

    let two = F::of(2.0);
    let eps = F::epsilon();
    let mut f = F::zero();
    let mut tst1 = F::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(F::one());
                if p < F::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[l + 2..] {
                    *di = *di - h;
                }
                f = f + h;

                p = d[m];
                let mut c = F::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = F::zero();
                let mut s2 = F::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        let (left, right) = v.split_at_mut((i + 1) * n);
                        let col_i = &mut left[i * n..];
                        let col_next = &mut right[..n];
                        for (a, b) in col_i.iter_mut().zip(col_next.iter_mut()) {
                            let hh = *b;
                            *b = s * *a + c * hh;
                            *a = c * *a - s * hh;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] = d[l] + f;
        e[l] = F::zero();
    }
}
