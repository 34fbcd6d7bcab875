//! The linkage process: the canonical coefficient vector of a composition.
//!
//! Included shapes get coefficient 1. Excluded coefficients maximize their
//! sum subject to every shapelet touched by an excluded shape ending up at
//! a value `<= 0`. The resulting shapelet values split into unit-valued
//! (`β = 1`) and null-valued (`β = 0`) sets, and the discriminant matrix over
//! the null-valued shapelets decides whether the composition is basic.

use std::fmt;

use crate::dsd::{self, CompositionSpec, Decomposition};
use crate::error::{Error, Result};
use crate::grid::ShapeMask;
use crate::linalg;
use crate::lp::{LinearProgram, LpOutcome};

/// Coefficients whose magnitude exceeds this count as active.
pub const EPS_SUPP: f64 = 1e-6;
/// Strict-positivity threshold for the discriminant solution.
pub const EPS_POS: f64 = 1e-9;
/// Coordinate ranges below this mean the maximizer is unique.
pub const EPS_RANGE: f64 = 1e-9;

const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkageResult {
    /// `I⊕ ∪ I⊖`, ascending; every per-shape vector below is indexed by it.
    pub members: Vec<usize>,
    pub alpha: Vec<f64>,
    /// Values on the shapelets of the decomposition restricted to `members`.
    pub beta: Vec<f64>,
    pub unit_shapelets: Vec<usize>,
    pub null_shapelets: Vec<usize>,
    pub unique: bool,
    pub restricted: Decomposition,
    spec: CompositionSpec,
}

impl LinkageResult {
    pub fn spec(&self) -> &CompositionSpec {
        &self.spec
    }

    /// Coefficients over the whole dictionary (zero off `members`).
    pub fn full_alpha(&self, shape_count: usize) -> Vec<f64> {
        let mut a = vec![0.0; shape_count];
        for (k, &j) in self.members.iter().enumerate() {
            a[j] = self.alpha[k];
        }
        a
    }

    /// Positions within `members` of the excluded shapes.
    pub fn exclude_columns(&self) -> Vec<usize> {
        self.spec
            .exclude()
            .iter()
            .map(|j| self.members.binary_search(j).expect("member"))
            .collect()
    }

    /// Shapelets meeting at least one excluded shape.
    pub fn exclusion_rows(&self) -> Vec<usize> {
        let cols = self.exclude_columns();
        (0..self.restricted.bearing.row_count())
            .filter(|&i| cols.iter().any(|&c| self.restricted.bearing.get(i, c)))
            .collect()
    }
}

pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.solve()
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP_TOL {
        r
    } else {
        v
    }
}

/// Whether the maximizer of `lp` is unique, given its optimal value: each
/// coordinate is maximized and minimized over the optimal face.
pub fn maximizer_is_unique(lp: &LinearProgram, optimum: f64) -> Result<bool> {
    let mut face = lp.clone();
    let slack = 1e-12 * (1.0 + optimum.abs());
    face.add_inequality(lp.objective().iter().map(|c| -c).collect(), -optimum + slack)?;
    for k in 0..lp.var_count() {
        let mut e = vec![0.0; lp.var_count()];
        e[k] = 1.0;
        face.set_objective(e.clone());
        let (hi, _) = face.solve()?.optimal()?;
        e[k] = -1.0;
        face.set_objective(e);
        let (neg_lo, _) = face.solve()?.optimal()?;
        if hi + neg_lo >= EPS_RANGE {
            return Ok(false);
        }
    }
    Ok(true)
}

fn linkage_program(restricted: &Decomposition, include_cols: &[usize], exclude_cols: &[usize]) -> Result<LinearProgram> {
    let bearing = &restricted.bearing;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for r in bearing.rows() {
        if exclude_cols.iter().any(|&c| r.get(c)) {
            rows.push(exclude_cols.iter().map(|&c| f64::from(u8::from(r.get(c)))).collect());
            rhs.push(-(include_cols.iter().filter(|&&c| r.get(c)).count() as f64));
        }
    }
    LinearProgram::new(vec![1.0; exclude_cols.len()], rows, rhs)
}

pub fn linkage_alpha(shapes: &[ShapeMask], spec: &CompositionSpec) -> Result<LinkageResult> {
    if shapes.is_empty() {
        return Err(Error::EmptyShapeList);
    }
    spec.check_indices(shapes.len())?;
    if let Some(j) = dsd::first_redundant(shapes[0].grid(), shapes, spec) {
        return Err(Error::Redundant(j));
    }
    let members = spec.members();
    let sub: Vec<ShapeMask> = members.iter().map(|&j| shapes[j].clone()).collect();
    let restricted = dsd::decompose(&sub)?;
    let col = |j: &usize| members.binary_search(j).expect("member");
    let include_cols: Vec<usize> = spec.include().iter().map(col).collect();
    let exclude_cols: Vec<usize> = spec.exclude().iter().map(col).collect();

    let mut alpha = vec![0.0; members.len()];
    for &c in &include_cols {
        alpha[c] = 1.0;
    }
    let mut unique = true;
    if !exclude_cols.is_empty() {
        let lp = linkage_program(&restricted, &include_cols, &exclude_cols)?;
        let (value, x) = lp.solve()?.optimal().map_err(|e| match e {
            Error::Infeasible | Error::Unbounded => Error::InvalidComposition(format!("linkage program: {e}")),
            other => other,
        })?;
        for (k, &c) in exclude_cols.iter().enumerate() {
            alpha[c] = snap(x[k]);
        }
        unique = maximizer_is_unique(&lp, value)?;
    }

    let beta: Vec<f64> = restricted.bearing.apply(&alpha).into_iter().map(snap).collect();
    let unit_shapelets = (0..beta.len()).filter(|&i| (beta[i] - 1.0).abs() <= SNAP_TOL).collect();
    let null_shapelets = (0..beta.len())
        .filter(|&i| beta[i].abs() <= SNAP_TOL && exclude_cols.iter().any(|&c| restricted.bearing.get(i, c)))
        .collect();
    Ok(LinkageResult {
        members,
        alpha,
        beta,
        unit_shapelets,
        null_shapelets,
        unique,
        restricted,
        spec: spec.clone(),
    })
}

/// Rows of the exclusion block of the restricted bearing matrix at the
/// null-valued shapelets, over the excluded shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscriminantMatrix {
    pub shapelets: Vec<usize>,
    pub columns: Vec<usize>,
    pub rows: Vec<Vec<u8>>,
}

impl DiscriminantMatrix {
    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&b| f64::from(b)).collect())
            .collect()
    }
}

pub fn discriminant_matrix(result: &LinkageResult) -> DiscriminantMatrix {
    let cols = result.exclude_columns();
    let rows = result
        .null_shapelets
        .iter()
        .map(|&i| cols.iter().map(|&c| u8::from(result.restricted.bearing.get(i, c))).collect())
        .collect();
    DiscriminantMatrix {
        shapelets: result.null_shapelets.clone(),
        columns: result.spec.exclude().to_vec(),
        rows,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicReport {
    pub basic: bool,
    pub rank: usize,
    pub null_count: usize,
    pub exclude_count: usize,
    pub w: Option<Vec<f64>>,
}

impl BasicReport {
    pub fn min_w(&self) -> Option<f64> {
        self.w.as_ref().map(|w| w.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

impl fmt::Display for BasicReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "basic: {}", self.basic)?;
        writeln!(f, "discriminant rank: {}", self.rank)?;
        writeln!(f, "null-valued shapelets: {}", self.null_count)?;
        writeln!(f, "excluded shapes: {}", self.exclude_count)?;
        match self.min_w() {
            Some(w) if w.is_finite() => writeln!(f, "min w: {w}"),
            _ => writeln!(f, "min w: n/a"),
        }
    }
}

pub fn basic_report(result: &LinkageResult) -> BasicReport {
    let delta = discriminant_matrix(result);
    let n_ex = delta.columns.len();
    let null_count = delta.shapelets.len();
    let dense = delta.to_f64();
    let rank = linalg::rank(&dense);
    let w = if rank == n_ex && null_count == n_ex {
        linalg::solve(&linalg::transpose(&dense), &vec![1.0; n_ex]).ok()
    } else {
        None
    };
    let basic = w.as_ref().is_some_and(|w| w.iter().all(|&v| v > EPS_POS));
    BasicReport {
        basic,
        rank,
        null_count,
        exclude_count: n_ex,
        w,
    }
}

pub fn is_basic(shapes: &[ShapeMask], spec: &CompositionSpec) -> Result<BasicReport> {
    Ok(basic_report(&linkage_alpha(shapes, spec)?))
}

/// Coefficients `1` on `I⊕` and `-η` on `I⊖`, where `η` is the largest
/// number of included shapes covering one pixel. The superposition is then
/// `>= 1` on the composed region and `<= 0` everywhere else.
pub fn indicator_coefficients(shapes: &[ShapeMask], spec: &CompositionSpec) -> Result<Vec<f64>> {
    let grid = shapes.first().ok_or(Error::EmptyShapeList)?.grid();
    spec.check_indices(shapes.len())?;
    let mut cover = vec![0usize; grid.len()];
    for &j in spec.include() {
        grid.ensure_same(&shapes[j].grid())?;
        for &x in shapes[j].pixels() {
            cover[x] += 1;
        }
    }
    let eta = cover.iter().copied().max().unwrap_or(0) as f64;
    let mut alpha = vec![0.0; shapes.len()];
    for &j in spec.include() {
        alpha[j] = 1.0;
    }
    for &j in spec.exclude() {
        alpha[j] = -eta;
    }
    Ok(alpha)
}

/// `(ξ⁺, ξ⁻)`: indices with `α_j > EPS_SUPP` and `α_j < -EPS_SUPP`.
pub fn active_sets(alpha: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let plus = (0..alpha.len()).filter(|&j| alpha[j] > EPS_SUPP).collect();
    let minus = (0..alpha.len()).filter(|&j| alpha[j] < -EPS_SUPP).collect();
    (plus, minus)
}
