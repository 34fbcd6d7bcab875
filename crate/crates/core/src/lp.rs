//! Dense two-phase simplex for the small linear programs generated by the
//! linkage, certificate and polishing steps.
//!
//! Problems are `maximize c·x` subject to `A x <= b` plus optional equality
//! rows; variables are free unless marked nonnegative. Bland's rule makes
//! every run deterministic and cycle-free.

use crate::error::{Error, Result};

const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    nonnegative: Vec<bool>,
    pivot_limit: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        value: f64,
        x: Vec<f64>,
        /// Inequality rows holding with equality at `x`.
        active: Vec<usize>,
    },
    Unbounded,
    Infeasible,
}

impl LpOutcome {
    pub fn optimal(self) -> Result<(f64, Vec<f64>)> {
        match self {
            LpOutcome::Optimal { value, x, .. } => Ok((value, x)),
            LpOutcome::Unbounded => Err(Error::Unbounded),
            LpOutcome::Infeasible => Err(Error::Infeasible),
        }
    }
}

impl LinearProgram {
    /// `maximize objective·x` subject to `rows x <= rhs`.
    pub fn new(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let n = objective.len();
        if rows.len() != rhs.len() {
            return Err(Error::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Dimension(format!("row {i} does not have {n} coefficients")));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&objective) || !finite(&rhs) || !rows.iter().all(|r| finite(r)) {
            return Err(Error::Dimension("non-finite LP data".into()));
        }
        Ok(Self {
            objective,
            rows,
            rhs,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            nonnegative: vec![false; n],
            pivot_limit: 100_000,
        })
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn add_equality(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        if coeffs.len() != self.var_count() || !rhs.is_finite() {
            return Err(Error::Dimension("bad equality row".into()));
        }
        self.eq_rows.push(coeffs);
        self.eq_rhs.push(rhs);
        Ok(())
    }

    pub fn add_inequality(&mut self, coeffs: Vec<f64>, rhs: f64) -> Result<()> {
        if coeffs.len() != self.var_count() || !rhs.is_finite() {
            return Err(Error::Dimension("bad inequality row".into()));
        }
        self.rows.push(coeffs);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn set_nonnegative(&mut self, var: usize) {
        self.nonnegative[var] = true;
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.var_count());
        self.objective = objective;
    }

    pub fn with_pivot_limit(mut self, limit: usize) -> Self {
        self.pivot_limit = limit;
        self
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }

    /// Whether `x` satisfies every constraint within `tol`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        self.rows.iter().zip(&self.rhs).all(|(r, &b)| dot(r) <= b + tol)
            && self.eq_rows.iter().zip(&self.eq_rhs).all(|(r, &b)| (dot(r) - b).abs() <= tol)
            && x.iter().zip(&self.nonnegative).all(|(&v, &nn)| !nn || v >= -tol)
    }
}

/// Column layout: structural columns (one per nonnegative variable, two per
/// free variable), then one slack per inequality, then artificials.
struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    width: usize,
    var_cols: Vec<(usize, Option<usize>)>,
    artificial_start: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut var_cols = Vec::with_capacity(lp.var_count());
        let mut next = 0;
        for &nn in &lp.nonnegative {
            if nn {
                var_cols.push((next, None));
                next += 1;
            } else {
                var_cols.push((next, Some(next + 1)));
                next += 2;
            }
        }
        let structural = next;
        let n_ineq = lp.rows.len();
        let slack_start = structural;
        let artificial_start = slack_start + n_ineq;

        let needs_artificial: Vec<bool> = lp
            .rhs
            .iter()
            .map(|&b| b < 0.0)
            .chain(lp.eq_rows.iter().map(|_| true))
            .collect();
        let n_art = needs_artificial.iter().filter(|&&a| a).count();
        let width = artificial_start + n_art;

        let mut t = Vec::with_capacity(n_ineq + lp.eq_rows.len());
        let mut basis = Vec::with_capacity(t.capacity());
        let mut art = artificial_start;
        let all_rows = lp
            .rows
            .iter()
            .zip(&lp.rhs)
            .map(|(r, &b)| (r, b, true))
            .chain(lp.eq_rows.iter().zip(&lp.eq_rhs).map(|(r, &b)| (r, b, false)));
        for (i, (coeffs, b, is_ineq)) in all_rows.enumerate() {
            let mut row = vec![0.0; width + 1];
            for (v, &a) in coeffs.iter().enumerate() {
                let (pos, neg) = var_cols[v];
                row[pos] = a;
                if let Some(neg) = neg {
                    row[neg] = -a;
                }
            }
            if is_ineq {
                row[slack_start + i] = 1.0;
            }
            row[width] = b;
            if b < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            if needs_artificial[i] {
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            } else {
                basis.push(slack_start + i);
            }
            t.push(row);
        }
        Self {
            t,
            basis,
            width,
            var_cols,
            artificial_start,
            pivots: 0,
        }
    }

    fn pivot(&mut self, r: usize, c: usize, z: &mut [f64]) {
        let w = self.width;
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for k in 0..=w {
                        row[k] -= f * pivot_row[k];
                    }
                    row[c] = 0.0;
                }
            }
        }
        let f = z[c];
        if f != 0.0 {
            for k in 0..=w {
                z[k] -= f * pivot_row[k];
            }
            z[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced-cost row for `cost` given the current basis. `z[width]` holds
    /// minus the objective value.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z = cost.to_vec();
        z.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for k in 0..=self.width {
                    z[k] -= cb * self.t[i][k];
                }
            }
        }
        z
    }

    /// Maximizes over columns `< limit_col`; returns false when unbounded.
    fn optimize(&mut self, z: &mut [f64], limit_col: usize, pivot_limit: usize) -> Result<bool> {
        loop {
            let Some(c) = (0..limit_col).find(|&j| z[j] > COST_TOL) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[self.width] / row[c];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12 || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return Ok(false);
            };
            if self.pivots >= pivot_limit {
                return Err(Error::PivotLimit(pivot_limit));
            }
            self.pivot(r, c, z);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let w = self.width;
        if self.artificial_start < w {
            let mut cost = vec![0.0; w];
            for c in cost.iter_mut().skip(self.artificial_start) {
                *c = -1.0;
            }
            let mut z = self.reduced_costs(&cost);
            self.optimize(&mut z, w, lp.pivot_limit)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.t)
                .filter(|(&b, _)| b >= self.artificial_start)
                .map(|(_, row)| row[w])
                .sum();
            let scale = 1.0 + lp.rhs.iter().chain(&lp.eq_rhs).map(|b| b.abs()).fold(0.0, f64::max);
            if infeasibility > FEAS_TOL * scale {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining (zero-valued) artificials out of the basis.
            let mut i = 0;
            while i < self.t.len() {
                if self.basis[i] >= self.artificial_start {
                    match (0..self.artificial_start).find(|&j| self.t[i][j].abs() > 1e-9) {
                        Some(j) => {
                            let mut dummy = vec![0.0; w + 1];
                            self.pivot(i, j, &mut dummy);
                        }
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }

        let mut cost = vec![0.0; w];
        for (v, &(pos, neg)) in self.var_cols.iter().enumerate() {
            cost[pos] = lp.objective[v];
            if let Some(neg) = neg {
                cost[neg] = -lp.objective[v];
            }
        }
        let mut z = self.reduced_costs(&cost);
        if !self.optimize(&mut z, self.artificial_start, lp.pivot_limit)? {
            return Ok(LpOutcome::Unbounded);
        }

        let mut col_value = vec![0.0; w];
        for (i, &b) in self.basis.iter().enumerate() {
            col_value[b] = self.t[i][w];
        }
        let x: Vec<f64> = self
            .var_cols
            .iter()
            .map(|&(pos, neg)| col_value[pos] - neg.map_or(0.0, |n| col_value[n]))
            .collect();
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let active = lp
            .rows
            .iter()
            .zip(&lp.rhs)
            .enumerate()
            .filter(|(_, (r, &b))| {
                let ax: f64 = r.iter().zip(&x).map(|(a, v)| a * v).sum();
                (b - ax).abs() <= 1e-9 * (1.0 + b.abs())
            })
            .map(|(i, _)| i)
            .collect();
        Ok(LpOutcome::Optimal { value, x, active })
    }
}
