//! Brute-force reference pipeline: every quantity is recomputed from the raw
//! rows with plain loops and no shared code with the library.

#![allow(dead_code)]

use fqa_core::inference::indicator_summands;
use fqa_core::{
    excursion_table, fqa_hat, fqa_vector, omnibus_stat, quantile_curves, Cell, CurveMatrix,
    FqaError, FqaGrid, FqaParams,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The 6×3 integer fixture used throughout the oracle checks.
pub const F1: [[f64; 3]; 6] = [
    [3.0, 1.0, 4.0],
    [1.0, 5.0, 9.0],
    [2.0, 6.0, 5.0],
    [3.0, 5.0, 8.0],
    [9.0, 7.0, 9.0],
    [3.0, 2.0, 3.0],
];

pub struct Case {
    pub rows: Vec<Vec<f64>>,
    pub levels: Vec<f64>,
    pub thresholds: Option<Vec<f64>>,
    pub lag: usize,
}

fn distinct_sorted(rng: &mut ChaCha8Rng, count: usize, rational: bool) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::new();
    while v.len() < count {
        let x = if rational {
            let d = rng.random_range(2..=12);
            rng.random_range(1..d) as f64 / d as f64
        } else {
            rng.random_range(0.01..0.99)
        };
        if v.iter().all(|&y| (y - x).abs() > 1e-9) {
            v.push(x);
        }
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

impl Case {
    /// F1 on the reduced grid `{1/3, 2/3}`.
    pub fn f1(lag: usize) -> Case {
        Case {
            rows: F1.iter().map(|r| r.to_vec()).collect(),
            levels: vec![1.0 / 3.0, 2.0 / 3.0],
            thresholds: None,
            lag,
        }
    }

    /// `T ≤ 12`, `p ≤ 6`, up to 3 levels; even instances have heavy ties,
    /// every third uses the general grid.
    pub fn random(rng: &mut ChaCha8Rng, instance: usize) -> Case {
        let t = rng.random_range(4..=12);
        let p = rng.random_range(2..=6);
        let ties = instance % 2 == 0;
        let rows = (0..t)
            .map(|_| {
                (0..p)
                    .map(|_| {
                        if ties {
                            rng.random_range(0..4) as f64
                        } else {
                            rng.random_range(-1.0..1.0)
                        }
                    })
                    .collect()
            })
            .collect();
        let rational = instance % 4 < 2;
        let n_levels = rng.random_range(1..=3);
        let levels = distinct_sorted(rng, n_levels, rational);
        let n_thresholds = rng.random_range(1..=3);
        let thresholds = (instance % 3 == 0).then(|| distinct_sorted(rng, n_thresholds, !rational));
        Case {
            rows,
            levels,
            thresholds,
            lag: rng.random_range(1..=t - 2),
        }
    }

    pub fn t(&self) -> usize {
        self.rows.len()
    }

    /// Smallest column value whose empirical CDF reaches `tau`.
    pub fn quantile(&self, column: usize, tau: f64) -> f64 {
        let col: Vec<f64> = self.rows.iter().map(|r| r[column]).collect();
        let n = col.len() as f64;
        let mut best = f64::INFINITY;
        for &x in &col {
            let below = col.iter().filter(|&&y| y <= x).count() as f64;
            if below / n >= tau - 1e-12 && x < best {
                best = x;
            }
        }
        best
    }

    pub fn fraction(&self, t: usize, tau: f64) -> f64 {
        let p = self.rows[t].len();
        let hits = (0..p)
            .filter(|&j| self.rows[t][j] <= self.quantile(j, tau))
            .count();
        hits as f64 / p as f64
    }

    fn indicator(&self, tau: f64, beta: f64) -> Vec<f64> {
        (0..self.t())
            .map(|t| if self.fraction(t, tau) <= beta { 1.0 } else { 0.0 })
            .collect()
    }

    /// `(ρ̂, summands)` or `None` when a marginal is 0 or 1.
    pub fn cell(&self, tau: f64, tau2: f64, beta: f64, beta2: f64) -> Option<(f64, Vec<f64>)> {
        let x = self.indicator(tau, beta);
        let y = self.indicator(tau2, beta2);
        let n = self.t() as f64;
        let ph = x.iter().sum::<f64>() / n;
        let qh = y.iter().sum::<f64>() / n;
        if ph == 0.0 || ph == 1.0 || qh == 0.0 || qh == 1.0 {
            return None;
        }
        let mut joint = 0.0;
        for t in 0..self.t() - self.lag {
            joint += x[t] * y[t + self.lag];
        }
        let den = (ph * (1.0 - ph) * qh * (1.0 - qh)).sqrt();
        let rho = (joint / n - ph * qh) / den;
        let z = (0..self.t() - self.lag)
            .map(|t| (x[t] - ph) * (y[t + self.lag] - qh) / den)
            .collect();
        Some((rho, z))
    }

    /// Cells in lexicographic order with their `(τ, τ', β, β')`.
    pub fn cells(&self) -> Vec<(Cell, [f64; 4])> {
        let lv = &self.levels;
        let mut out = Vec::new();
        for i in 0..lv.len() {
            for j in 0..lv.len() {
                match &self.thresholds {
                    None => out.push((Cell { i, j, k: i, l: j }, [lv[i], lv[j], lv[i], lv[j]])),
                    Some(th) => {
                        for k in 0..th.len() {
                            for l in 0..th.len() {
                                out.push((Cell { i, j, k, l }, [lv[i], lv[j], th[k], th[l]]));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Oracle `Ŝ_T(l)` over unmasked cells, `None` if every cell is masked.
    pub fn s_hat(&self) -> Option<f64> {
        let vals: Vec<f64> = self
            .cells()
            .into_iter()
            .filter_map(|(_, [a, b, c, d])| self.cell(a, b, c, d).map(|(r, _)| r * r))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum())
    }

    /// Largest absolute discrepancy between library and oracle across the
    /// excursion table, `fqa_hat`, `fqa_vector`, `indicator_summands` and
    /// `omnibus_stat`, plus the number of masked cells; `Err` on any
    /// structural mismatch.
    pub fn compare(&self) -> Result<(f64, usize), String> {
        let m = CurveMatrix::from_rows(&self.rows).map_err(|e| e.to_string())?;
        let grid = match &self.thresholds {
            None => FqaGrid::reduced(self.levels.clone()),
            Some(th) => FqaGrid::general(self.levels.clone(), th.clone()),
        }
        .map_err(|e| e.to_string())?;
        let q = quantile_curves(m.view(), &self.levels).map_err(|e| e.to_string())?;
        let table = excursion_table(m.view(), &q).map_err(|e| e.to_string())?;

        let mut worst = 0.0_f64;
        for t in 0..self.t() {
            for (i, &tau) in self.levels.iter().enumerate() {
                worst = worst.max((table.fractions()[[t, i]] - self.fraction(t, tau)).abs());
            }
        }

        let v = fqa_vector(&table, &grid, self.lag).map_err(|e| e.to_string())?;
        let summands = indicator_summands(&table, &grid, self.lag).map_err(|e| e.to_string())?;
        let cells = self.cells();
        if v.len() != cells.len() {
            return Err(format!("vector length {} vs {}", v.len(), cells.len()));
        }
        let mut expected_sum = 0.0;
        let mut masked = 0;
        let mut used = 0;
        for (pos, (cell, [a, b, c, d])) in cells.into_iter().enumerate() {
            let params = FqaParams::new(a, b, self.lag, c, d).map_err(|e| e.to_string())?;
            let single = fqa_hat(&table, &params);
            match self.cell(a, b, c, d) {
                None => {
                    masked += 1;
                    if !v.mask()[pos] || !v.values()[pos].is_nan() {
                        return Err(format!("cell {pos} should be masked"));
                    }
                    if !matches!(single, Err(FqaError::DegenerateCell { .. })) {
                        return Err(format!("fqa_hat on degenerate cell {pos}: {single:?}"));
                    }
                }
                Some((rho, z)) => {
                    expected_sum += rho * rho;
                    let single = single.map_err(|e| e.to_string())?;
                    worst = worst.max((single - rho).abs()).max((v.values()[pos] - rho).abs());
                    if v.get(cell) != Some(v.values()[pos]) {
                        return Err(format!("cell lookup disagrees at {pos}"));
                    }
                    if summands.positions().get(used) != Some(&pos) {
                        return Err(format!("summand column {used} is not cell {pos}"));
                    }
                    let rows = summands.rows();
                    if rows.nrows() != z.len() {
                        return Err(format!("summand rows {} vs {}", rows.nrows(), z.len()));
                    }
                    for (r, zr) in z.iter().enumerate() {
                        worst = worst.max((rows[[r, used]] - zr).abs());
                    }
                    used += 1;
                }
            }
        }
        if summands.dim() != used {
            return Err(format!("summand columns {} vs {used}", summands.dim()));
        }
        match omnibus_stat(&v) {
            Ok(s) => {
                if used == 0 {
                    return Err("statistic on a fully masked grid".into());
                }
                let n = self.t() as f64;
                worst = worst.max((s.s_hat - expected_sum).abs());
                worst = worst.max((s.scaled - n * expected_sum).abs());
                if s.masked_cells != masked || s.used_cells != used {
                    return Err("cell counts disagree".into());
                }
            }
            Err(FqaError::AllCellsMasked(_)) if used == 0 => {}
            Err(e) => return Err(e.to_string()),
        }
        Ok((worst, masked))
    }
}
