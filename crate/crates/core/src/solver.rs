//! The sparse convex shape-composition program and its oracles.
//!
//! For coefficients `α` the superposition `L_α = Σ α_j χ_{S_j}` is scored by
//! `G(α) = Σ_x max(d(x) L_α(x), min(d(x), 0))` with `d = π_in - π_ex`. On the
//! cells of the dictionary's decomposition this separates into
//! `Σ_i p_i max(β_i, 0) - q_i min(β_i, 1)` with `β = Bα`. The program
//! minimizes `G` over the L1 ball of radius `τ` (or adds `λ‖α‖₁`).

use crate::dsd::{self, CompositionSpec, Decomposition};
use crate::error::{Error, Result};
use crate::grid::{InhomogeneityField, Region, ShapeIntegrals, ShapeMask};
use crate::linkage;
use crate::lp::LinearProgram;

/// Largest dictionary the exhaustive search accepts.
pub const BRUTE_FORCE_LIMIT: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// `‖α‖₁ <= τ`.
    Budget(f64),
    /// `+ λ ‖α‖₁` in the objective.
    Penalty(f64),
}

/// Per-cell data: the decomposition of the whole dictionary together with
/// the integrated positive and negative parts of `d` on each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    pub decomposition: Decomposition,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    members: Vec<Vec<usize>>,
}

impl CellModel {
    pub fn new(field: &InhomogeneityField, dictionary: &[ShapeMask]) -> Result<Self> {
        for s in dictionary {
            field.grid().ensure_same(&s.grid())?;
        }
        let decomposition = dsd::decompose(dictionary)?;
        let mut p = Vec::with_capacity(decomposition.shapelets.len());
        let mut q = Vec::with_capacity(decomposition.shapelets.len());
        for cell in &decomposition.shapelets {
            let (mut pi, mut qi) = (0.0, 0.0);
            for &x in &cell.pixels {
                let d = field.diff(x);
                if d > 0.0 {
                    pi += d;
                } else {
                    qi -= d;
                }
            }
            p.push(pi);
            q.push(qi);
        }
        let members = decomposition
            .shapelets
            .iter()
            .map(|c| c.constructor.ones().collect())
            .collect();
        Ok(Self {
            decomposition,
            p,
            q,
            members,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.p.len()
    }

    pub fn shape_count(&self) -> usize {
        self.decomposition.bearing.shape_count()
    }

    /// Shapes covering cell `i`.
    pub fn members(&self, i: usize) -> &[usize] {
        &self.members[i]
    }

    pub fn beta(&self, alpha: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| m.iter().map(|&j| alpha[j]).sum())
            .collect()
    }

    pub fn objective(&self, alpha: &[f64]) -> f64 {
        separable_objective(&self.p, &self.q, &self.beta(alpha))
    }

    pub fn subgradient(&self, alpha: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; alpha.len()];
        for (i, m) in self.members.iter().enumerate() {
            let beta: f64 = m.iter().map(|&j| alpha[j]).sum();
            let slope = cell_slope(self.p[i], self.q[i], beta);
            if slope != 0.0 {
                for &j in m {
                    g[j] += slope;
                }
            }
        }
        g
    }
}

/// Slope of `p max(β,0) - q min(β,1)`; at the kinks `β ∈ {0, 1}` the
/// middle piece `p - q` is used, which lies in the subdifferential.
fn cell_slope(p: f64, q: f64, beta: f64) -> f64 {
    if beta > 1.0 {
        p
    } else if beta < 0.0 {
        -q
    } else {
        p - q
    }
}

#[derive(Debug, Clone)]
pub struct SparseCscProblem {
    field: InhomogeneityField,
    dictionary: Vec<ShapeMask>,
    mode: Mode,
    cells: CellModel,
}

impl SparseCscProblem {
    pub fn new(field: InhomogeneityField, dictionary: Vec<ShapeMask>, mode: Mode) -> Result<Self> {
        if dictionary.is_empty() {
            return Err(Error::EmptyShapeList);
        }
        match mode {
            Mode::Budget(v) | Mode::Penalty(v) if !(v.is_finite() && v >= 0.0) => {
                return Err(Error::InvalidConfig(format!("budget/penalty must be finite and >= 0, got {v}")));
            }
            _ => {}
        }
        let cells = CellModel::new(&field, &dictionary)?;
        Ok(Self {
            field,
            dictionary,
            mode,
            cells,
        })
    }

    pub fn constrained(field: InhomogeneityField, dictionary: Vec<ShapeMask>, tau: f64) -> Result<Self> {
        Self::new(field, dictionary, Mode::Budget(tau))
    }

    pub fn regularized(field: InhomogeneityField, dictionary: Vec<ShapeMask>, lambda: f64) -> Result<Self> {
        Self::new(field, dictionary, Mode::Penalty(lambda))
    }

    pub fn field(&self) -> &InhomogeneityField {
        &self.field
    }

    pub fn dictionary(&self) -> &[ShapeMask] {
        &self.dictionary
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn cells(&self) -> &CellModel {
        &self.cells
    }

    pub fn shape_count(&self) -> usize {
        self.dictionary.len()
    }

    /// Same dictionary and field under a different budget or penalty.
    pub fn with_mode(&self, mode: Mode) -> Result<Self> {
        match mode {
            Mode::Budget(v) | Mode::Penalty(v) if !(v.is_finite() && v >= 0.0) => {
                Err(Error::InvalidConfig(format!("budget/penalty must be finite and >= 0, got {v}")))
            }
            _ => Ok(Self { mode, ..self.clone() }),
        }
    }

    /// `L_α(x)` for every pixel.
    pub fn superposition(&self, alpha: &[f64]) -> Vec<f64> {
        let mut l = vec![0.0; self.field.grid().len()];
        for (shape, &a) in self.dictionary.iter().zip(alpha) {
            if a != 0.0 {
                for &x in shape.pixels() {
                    l[x] += a;
                }
            }
        }
        l
    }

    fn check_len(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.shape_count() {
            return Err(Error::Dimension(format!(
                "alpha has {} entries for {} shapes",
                alpha.len(),
                self.shape_count()
            )));
        }
        Ok(())
    }

    /// Value of the program being solved: `G` in budget mode and
    /// `G + λ‖α‖₁` in penalty mode.
    pub fn program_value(&self, alpha: &[f64]) -> f64 {
        let g = self.cells.objective(alpha);
        match self.mode {
            Mode::Budget(_) => g,
            Mode::Penalty(lambda) => g + lambda * l1(alpha),
        }
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `G(α)`, summed pixel by pixel.
pub fn objective(problem: &SparseCscProblem, alpha: &[f64]) -> Result<f64> {
    problem.check_len(alpha)?;
    let l = problem.superposition(alpha);
    Ok((0..l.len())
        .map(|x| {
            let d = problem.field.diff(x);
            (d * l[x]).max(d.min(0.0))
        })
        .sum())
}

pub fn separable_objective(p: &[f64], q: &[f64], beta: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .zip(beta)
        .map(|((&p, &q), &b)| p * b.max(0.0) - q * b.min(1.0))
        .sum()
}

pub fn subgradient(problem: &SparseCscProblem, alpha: &[f64]) -> Result<Vec<f64>> {
    problem.check_len(alpha)?;
    if alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::Dimension("alpha has non-finite entries".into()));
    }
    Ok(problem.cells.subgradient(alpha))
}

/// Euclidean projection onto `{‖x‖₁ <= τ}` by soft thresholding.
pub fn project_l1(v: &[f64], tau: f64) -> Vec<f64> {
    if l1(v) <= tau {
        return v.to_vec();
    }
    if tau <= 0.0 {
        return vec![0.0; v.len()];
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - tau) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step_scale: f64,
    pub stop_tol: f64,
    pub polish: bool,
    /// Recorded for reproducibility; the method itself is deterministic.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 3000,
            step_scale: 1.0,
            stop_tol: 1e-7,
            polish: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(Error::InvalidConfig(format!("step_scale must be > 0, got {}", self.step_scale)));
        }
        if !(self.stop_tol.is_finite() && self.stop_tol >= 0.0) {
            return Err(Error::InvalidConfig(format!("stop_tol must be >= 0, got {}", self.stop_tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub alpha: Vec<f64>,
    /// `G(α)`.
    pub objective: f64,
    /// `G(α)` plus the penalty term in penalty mode.
    pub program_value: f64,
    pub support: (Vec<usize>, Vec<usize>),
    pub iterations_used: usize,
    pub converged: bool,
    pub polished: bool,
}

pub fn solve_constrained(problem: &SparseCscProblem, config: &SolverConfig) -> Result<Solution> {
    match problem.mode {
        Mode::Budget(_) => solve(problem, config),
        Mode::Penalty(_) => Err(Error::InvalidConfig("problem is in penalty mode".into())),
    }
}

pub fn solve_regularized(problem: &SparseCscProblem, config: &SolverConfig) -> Result<Solution> {
    match problem.mode {
        Mode::Penalty(_) => solve(problem, config),
        Mode::Budget(_) => Err(Error::InvalidConfig("problem is in budget mode".into())),
    }
}

/// Projected (or penalized) subgradient descent from the origin with
/// normalized steps of length `step_scale · R / √t`, keeping the best
/// iterate; then an optional LP polish on the detected support.
fn solve(problem: &SparseCscProblem, config: &SolverConfig) -> Result<Solution> {
    config.validate()?;
    let n = problem.shape_count();
    let cells = &problem.cells;
    let (radius, lambda) = match problem.mode {
        Mode::Budget(tau) => (tau, 0.0),
        Mode::Penalty(lambda) => (1.0, lambda),
    };
    let project = |v: Vec<f64>| match problem.mode {
        Mode::Budget(tau) => project_l1(&v, tau),
        Mode::Penalty(_) => v,
    };

    let mut alpha = vec![0.0; n];
    let mut best = alpha.clone();
    let mut best_value = problem.program_value(&alpha);
    let window = (config.max_iters / 10).max(1);
    let mut history = Vec::with_capacity(config.max_iters + 1);
    history.push(best_value);
    let mut iterations = 0;
    let mut converged = false;

    if radius > 0.0 {
        for t in 1..=config.max_iters {
            iterations = t;
            let mut g = cells.subgradient(&alpha);
            if lambda > 0.0 {
                for (gj, &aj) in g.iter_mut().zip(&alpha) {
                    *gj = if aj > 0.0 {
                        *gj + lambda
                    } else if aj < 0.0 {
                        *gj - lambda
                    } else if gj.abs() <= lambda {
                        0.0
                    } else {
                        *gj - lambda * gj.signum()
                    };
                }
            }
            let norm = l2(&g);
            if norm == 0.0 {
                converged = true;
                break;
            }
            let step = config.step_scale * radius / (t as f64).sqrt() / norm;
            alpha = project(alpha.iter().zip(&g).map(|(a, gj)| a - step * gj).collect());
            let value = problem.program_value(&alpha);
            if value < best_value {
                best_value = value;
                best.clone_from(&alpha);
            }
            history.push(best_value);
            if t >= window {
                let earlier = history[t - window];
                if earlier - best_value < config.stop_tol * (1.0 + best_value.abs()) {
                    converged = true;
                    break;
                }
            }
        }
    } else {
        converged = true;
    }

    let mut polished = false;
    if config.polish {
        if let Some(candidate) = polish(problem, &best)? {
            let value = problem.program_value(&candidate);
            if value <= best_value + 1e-12 * (1.0 + best_value.abs()) {
                best = candidate;
                best_value = value;
                polished = true;
            }
        }
    }

    Ok(Solution {
        objective: cells.objective(&best),
        program_value: best_value,
        support: linkage::active_sets(&best),
        alpha: best,
        iterations_used: iterations,
        converged,
        polished,
    })
}

/// Re-solves the program exactly as an LP over the support of `alpha` with
/// its sign pattern fixed: magnitudes `a_j >= 0` and one epigraph variable
/// per merged cell, `t >= max(-qβ, (p-q)β, pβ - q)`.
fn polish(problem: &SparseCscProblem, alpha: &[f64]) -> Result<Option<Vec<f64>>> {
    let peak = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if peak == 0.0 {
        return Ok(None);
    }
    let support: Vec<usize> = (0..alpha.len()).filter(|&j| alpha[j].abs() > 1e-4 * peak).collect();
    let sign: Vec<f64> = support.iter().map(|&j| alpha[j].signum()).collect();
    let cells = &problem.cells;

    // Cells with the same support signature behave identically.
    let mut merged: std::collections::BTreeMap<Vec<usize>, (f64, f64)> = Default::default();
    for i in 0..cells.cell_count() {
        let sig: Vec<usize> = support
            .iter()
            .enumerate()
            .filter(|(_, j)| cells.members(i).binary_search(j).is_ok())
            .map(|(k, _)| k)
            .collect();
        if !sig.is_empty() {
            let e = merged.entry(sig).or_insert((0.0, 0.0));
            e.0 += cells.p[i];
            e.1 += cells.q[i];
        }
    }

    let k = support.len();
    let m = merged.len();
    let nvars = k + m;
    let mut objective = vec![0.0; nvars];
    if let Mode::Penalty(lambda) = problem.mode {
        for c in objective.iter_mut().take(k) {
            *c = -lambda;
        }
    }
    for c in objective.iter_mut().skip(k) {
        *c = -1.0;
    }
    let mut lp = LinearProgram::new(objective, Vec::new(), Vec::new())?;
    for j in 0..k {
        lp.set_nonnegative(j);
    }
    if let Mode::Budget(tau) = problem.mode {
        let mut row = vec![0.0; nvars];
        for c in row.iter_mut().take(k) {
            *c = 1.0;
        }
        lp.add_inequality(row, tau)?;
    }
    for (cell, (sig, &(p, q))) in merged.iter().enumerate() {
        let t = k + cell;
        for (slope, rhs) in [(-q, 0.0), (p - q, 0.0), (p, q)] {
            let mut row = vec![0.0; nvars];
            for &s in sig {
                row[s] = slope * sign[s];
            }
            row[t] = -1.0;
            lp.add_inequality(row, rhs)?;
        }
    }
    let (_, x) = match lp.solve()? {
        crate::lp::LpOutcome::Optimal { value, x, .. } => (value, x),
        _ => return Ok(None),
    };
    let mut out = vec![0.0; alpha.len()];
    for (idx, &j) in support.iter().enumerate() {
        let v = sign[idx] * x[idx];
        out[j] = if (v - v.round()).abs() < 1e-9 { v.round() } else { v };
    }
    Ok(Some(out))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisjointSelection {
    /// Selected shapes, ascending.
    pub indices: Vec<usize>,
    /// The `s`-th and `(s+1)`-th smallest negative values coincide.
    pub tie: bool,
}

/// For a dictionary of pairwise disjoint shapes: the `min(s, m)` shapes with
/// the most negative `P_j - Q_j`, where `m` counts the negative values.
pub fn solve_disjoint_closed_form(integrals: &ShapeIntegrals, s: usize) -> DisjointSelection {
    let mut order: Vec<(f64, usize)> = (0..integrals.len())
        .map(|j| (integrals.net(j), j))
        .filter(|(v, _)| *v < 0.0)
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let take = s.min(order.len());
    let tie = take > 0 && take < order.len() && order[take - 1].0 == order[take].0;
    let mut indices: Vec<usize> = order[..take].iter().map(|&(_, j)| j).collect();
    indices.sort_unstable();
    DisjointSelection { indices, tie }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CardinalOptimum {
    /// `None` is the empty selection.
    pub spec: Option<CompositionSpec>,
    pub value: f64,
}

/// Exhaustive search over all compositions with at most `s` shapes. Ties
/// go to the lexicographically smallest `(I⊕, I⊖)`; the empty selection
/// (value 0) precedes everything.
pub fn brute_force_cardinal_sc(problem: &SparseCscProblem, s: usize) -> Result<CardinalOptimum> {
    let n = problem.shape_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyShapes {
            count: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let cells = &problem.cells;
    let masks: Vec<u32> = (0..cells.cell_count())
        .map(|i| cells.members(i).iter().fold(0u32, |m, &j| m | 1 << j))
        .collect();
    let net: Vec<f64> = cells.p.iter().zip(&cells.q).map(|(p, q)| p - q).collect();
    let scale = 1.0 + net.iter().map(|v| v.abs()).sum::<f64>();
    let tol = 1e-12 * scale;
    let bits = |m: u32| -> Vec<usize> { (0..n).filter(|&j| m >> j & 1 == 1).collect() };

    let mut best_value = 0.0;
    let mut best_key: Option<(Vec<usize>, Vec<usize>)> = None;
    let full = (1u32 << n) - 1;
    for plus in 1..=full {
        let np = plus.count_ones() as usize;
        if np > s {
            continue;
        }
        let rest = full & !plus;
        // Enumerate subsets of `rest`, including the empty set.
        let mut minus = rest;
        loop {
            if np + minus.count_ones() as usize <= s {
                let value: f64 = masks
                    .iter()
                    .zip(&net)
                    .filter(|(&m, _)| m & plus != 0 && m & minus == 0)
                    .map(|(_, &v)| v)
                    .sum();
                let better = value < best_value - tol
                    || (value <= best_value + tol && {
                        let key = (bits(plus), bits(minus));
                        best_key.as_ref().is_some_and(|b| key < *b)
                    });
                if better {
                    best_value = value;
                    best_key = Some((bits(plus), bits(minus)));
                }
            }
            if minus == 0 {
                break;
            }
            minus = (minus - 1) & rest;
        }
    }
    let spec = best_key.map(|(i, e)| CompositionSpec::new(i, e)).transpose()?;
    Ok(CardinalOptimum { spec, value: best_value })
}

/// Pixels where `L_α(x) > level`.
pub fn extract_support(problem: &SparseCscProblem, alpha: &[f64], level: f64) -> Result<Region> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must lie in (0, 1), got {level}")));
    }
    problem.check_len(alpha)?;
    let l = problem.superposition(alpha);
    let bits: Vec<bool> = l.iter().map(|&v| v > level).collect();
    Ok(Region::from_bitmap(problem.field.grid(), &bits))
}
