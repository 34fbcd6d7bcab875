//! Optimality certificates and recovery conditions.
//!
//! A candidate `α*` whose cell values `β* = Bα*` avoid the open band
//! `(0, 1)` is the unique minimizer when a dual vector `(η, η_c)` solves the
//! certificate system strictly inside the bounding box `l < η < u`. For a
//! basic composition the bearing constants `w` and the geometric coherence
//! of each exterior shape give a checkable sufficient condition.

use std::fmt;

use crate::dsd::{self, BearingMatrix, CompositionSpec, Decomposition};
use crate::error::{Error, Result};
use crate::grid::{self, ShapeMask};
use crate::linalg;
use crate::linkage::{self, LinkageResult};
use crate::lp::{LinearProgram, LpOutcome};
use crate::solver::SparseCscProblem;

const BAND_TOL: f64 = 1e-9;
/// Certificates need a margin above this.
pub const EPS_MARGIN: f64 = 1e-9;
/// Coherence must stay below `1 - EPS_COH`.
pub const EPS_COH: f64 = 1e-9;

/// Cells split by their value: the support `β < 0` / `β > 1` and the
/// off-support `β = 0` / `β = 1`. All index lists are ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportPartition {
    pub gamma_0minus: Vec<usize>,
    pub gamma_1plus: Vec<usize>,
    pub gamma_0: Vec<usize>,
    pub gamma_1: Vec<usize>,
}

impl SupportPartition {
    /// `Γ₀ ∪ Γ₁`, ascending.
    pub fn off_support(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.gamma_0.iter().chain(&self.gamma_1).copied().collect();
        v.sort_unstable();
        v
    }

    pub fn cell_count(&self) -> usize {
        self.gamma_0minus.len() + self.gamma_1plus.len() + self.gamma_0.len() + self.gamma_1.len()
    }
}

pub fn partition_beta(beta: &[f64]) -> Result<SupportPartition> {
    let mut part = SupportPartition::default();
    for (i, &b) in beta.iter().enumerate() {
        if b.abs() <= BAND_TOL {
            part.gamma_0.push(i);
        } else if (b - 1.0).abs() <= BAND_TOL {
            part.gamma_1.push(i);
        } else if b < 0.0 {
            part.gamma_0minus.push(i);
        } else if b > 1.0 {
            part.gamma_1plus.push(i);
        } else {
            return Err(Error::InBand { index: i, value: b });
        }
    }
    Ok(part)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundingVectors {
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    /// Position `k` holds off-support cell `cells[k]`.
    pub cells: Vec<usize>,
}

/// `l = q - p, u = q` on `Γ₀` and `l = -p, u = q - p` on `Γ₁`, in ascending
/// cell order.
pub fn bounding_vectors(p: &[f64], q: &[f64], partition: &SupportPartition) -> BoundingVectors {
    let cells = partition.off_support();
    let mut l = Vec::with_capacity(cells.len());
    let mut u = Vec::with_capacity(cells.len());
    for &c in &cells {
        if partition.gamma_0.binary_search(&c).is_ok() {
            l.push(q[c] - p[c]);
            u.push(q[c]);
        } else {
            l.push(-p[c]);
            u.push(q[c] - p[c]);
        }
    }
    BoundingVectors { l, u, cells }
}

/// `e_j = Σ_{I_j ∩ Γ₁⁺} p - Σ_{I_j ∩ Γ₀⁻} q`.
pub fn loc_violation(p: &[f64], q: &[f64], index_sets: &[Vec<usize>], partition: &SupportPartition) -> Vec<f64> {
    index_sets
        .iter()
        .map(|set| {
            let plus: f64 = set
                .iter()
                .filter(|i| partition.gamma_1plus.binary_search(i).is_ok())
                .map(|&i| p[i])
                .sum();
            let minus: f64 = set
                .iter()
                .filter(|i| partition.gamma_0minus.binary_search(i).is_ok())
                .map(|&i| q[i])
                .sum();
            plus - minus
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub eta: Vec<f64>,
    pub eta_c: f64,
    /// `c` with any free entries resolved.
    pub c: Vec<f64>,
    pub feasible: bool,
    pub margin: f64,
    pub residual: f64,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "feasible: {}", self.feasible)?;
        writeln!(f, "margin: {:.6e}", self.margin)?;
        writeln!(f, "residual: {:.3e}", self.residual)?;
        writeln!(f, "eta_c: {}", self.eta_c)?;
        writeln!(f, "eta: {:?}", self.eta)?;
        writeln!(f, "c: {:?}", self.c)
    }
}

/// Searches for `(η, η_c)` with `Σ_ℓ B[ℓ,j] η_ℓ + c_j η_c = e_j` for every
/// shape `j` (sums over off-support cells) and `l + t <= η <= u - t`,
/// maximizing the margin `t`. Entries of `c` given as `None` are free in
/// `[-1, 1]`.
pub fn find_certificate(
    bearing: &BearingMatrix,
    c: &[Option<f64>],
    e: &[f64],
    bounds: &BoundingVectors,
) -> Result<Certificate> {
    let n_s = bearing.shape_count();
    if c.len() != n_s || e.len() != n_s {
        return Err(Error::Dimension(format!(
            "c has {} and e has {} entries for {n_s} shapes",
            c.len(),
            e.len()
        )));
    }
    if let Some(j) = c.iter().position(|v| v.is_some_and(|v| v.abs() > 1.0 + 1e-12)) {
        return Err(Error::Dimension(format!("|c_{j}| exceeds 1")));
    }
    let cells = &bounds.cells;
    let bt: Vec<Vec<f64>> = (0..n_s)
        .map(|j| cells.iter().map(|&i| f64::from(u8::from(bearing.get(i, j)))).collect())
        .collect();
    let base_rank = linalg::rank(&bt);
    if base_rank + 1 < n_s {
        return Err(Error::RankDeficient {
            rank: base_rank,
            required: n_s,
        });
    }

    let k = cells.len();
    let free: Vec<usize> = (0..n_s).filter(|&j| c[j].is_none()).collect();
    let eta_c = k;
    let z0 = k + 1;
    let t = z0 + free.len();
    let nvars = t + 1;
    let cap = bounds
        .l
        .iter()
        .zip(&bounds.u)
        .map(|(l, u)| (u - l).abs())
        .fold(1.0, f64::max);

    let mut best: Option<(f64, Vec<f64>)> = None;
    for sign in [1.0, -1.0] {
        let mut objective = vec![0.0; nvars];
        objective[t] = 1.0;
        let mut lp = LinearProgram::new(objective, Vec::new(), Vec::new())?;
        for j in 0..n_s {
            let mut row = bt[j].clone();
            row.resize(nvars, 0.0);
            match c[j] {
                Some(cj) => row[eta_c] = cj,
                None => row[z0 + free.binary_search(&j).expect("free")] = 1.0,
            }
            lp.add_equality(row, e[j])?;
        }
        for m in 0..k {
            let mut lo = vec![0.0; nvars];
            lo[m] = -1.0;
            lo[t] = 1.0;
            lp.add_inequality(lo, -bounds.l[m])?;
            let mut hi = vec![0.0; nvars];
            hi[m] = 1.0;
            hi[t] = 1.0;
            lp.add_inequality(hi, bounds.u[m])?;
        }
        let mut cap_row = vec![0.0; nvars];
        cap_row[t] = 1.0;
        lp.add_inequality(cap_row, cap)?;
        // sign · η_c >= 0 and |z_j| <= sign · η_c.
        let mut nonneg = vec![0.0; nvars];
        nonneg[eta_c] = -sign;
        lp.add_inequality(nonneg, 0.0)?;
        for f in 0..free.len() {
            for s in [1.0, -1.0] {
                let mut row = vec![0.0; nvars];
                row[z0 + f] = s;
                row[eta_c] = -sign;
                lp.add_inequality(row, 0.0)?;
            }
        }
        if let LpOutcome::Optimal { value, x, .. } = lp.solve()? {
            if best.as_ref().is_none_or(|(v, _)| value > *v) {
                best = Some((value, x));
            }
        }
    }

    let Some((margin, x)) = best else {
        return Ok(Certificate {
            eta: vec![0.0; k],
            eta_c: 0.0,
            c: c.iter().map(|v| v.unwrap_or(0.0)).collect(),
            feasible: false,
            margin: f64::NEG_INFINITY,
            residual: f64::INFINITY,
        });
    };
    let eta = x[..k].to_vec();
    let ec = x[eta_c];
    let resolved: Vec<f64> = (0..n_s)
        .map(|j| match c[j] {
            Some(v) => v,
            None if ec.abs() > 1e-12 => {
                let z = x[z0 + free.binary_search(&j).expect("free")];
                (z / ec).clamp(-1.0, 1.0)
            }
            None => 0.0,
        })
        .collect();
    if base_rank < n_s {
        let mut augmented = bt.clone();
        for (j, row) in augmented.iter_mut().enumerate() {
            row.push(resolved[j]);
        }
        let r = linalg::rank(&augmented);
        if r < n_s {
            return Err(Error::RankDeficient { rank: r, required: n_s });
        }
    }
    let residual = (0..n_s)
        .map(|j| {
            let lhs: f64 = bt[j].iter().zip(&eta).map(|(a, b)| a * b).sum::<f64>()
                + match c[j] {
                    Some(cj) => cj * ec,
                    None => x[z0 + free.binary_search(&j).expect("free")],
                };
            (lhs - e[j]).abs()
        })
        .fold(0.0, f64::max);
    Ok(Certificate {
        eta,
        eta_c: ec,
        c: resolved,
        feasible: margin > EPS_MARGIN && residual <= 1e-8,
        margin,
        residual,
    })
}

/// Full certificate check of a candidate `α*` for a problem: the cell
/// partition, bounds, violation vector and `c = sign(α*)` on the support
/// (free elsewhere).
pub fn certify_alpha(problem: &SparseCscProblem, alpha: &[f64]) -> Result<(SupportPartition, BoundingVectors, Certificate)> {
    let cells = problem.cells();
    let beta = cells.beta(alpha);
    let partition = partition_beta(&beta)?;
    let bounds = bounding_vectors(&cells.p, &cells.q, &partition);
    let e = loc_violation(&cells.p, &cells.q, &cells.decomposition.index_sets, &partition);
    let c: Vec<Option<f64>> = alpha
        .iter()
        .map(|&a| (a.abs() > linkage::EPS_SUPP).then(|| a.signum()))
        .collect();
    let cert = find_certificate(&cells.decomposition.bearing, &c, &e, &bounds)?;
    Ok((partition, bounds, cert))
}

/// Builds `α̂ = α' + kα*` with `α' = α*` on the composition and `-ε` on
/// every other shape, shrinking `ε` and growing `k` until `α̂` keeps the
/// optimal value while `c·α̂ > ‖α*‖₁` (`c = sign α*` on the composition,
/// `1` elsewhere).
pub fn tangent_witness_loc(problem: &SparseCscProblem, spec: &CompositionSpec, alpha_star: &[f64]) -> Result<Vec<f64>> {
    const ROUNDS: usize = 40;
    let shapes = problem.dictionary();
    let sigma = dsd::compose_region(shapes, spec)?;
    let loc = grid::loc_holds(problem.field(), &sigma);
    if !loc.holds {
        return Err(Error::LocViolated(loc.violations));
    }
    if alpha_star.len() != shapes.len() {
        return Err(Error::Dimension("alpha length differs from dictionary size".into()));
    }
    let members = spec.members();
    let is_member = |j: usize| members.binary_search(&j).is_ok();
    let c: Vec<f64> = (0..shapes.len())
        .map(|j| if is_member(j) { alpha_star[j].signum() } else { 1.0 })
        .collect();
    let dot = |a: &[f64]| c.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
    let target = problem.cells().objective(alpha_star);
    let norm: f64 = alpha_star.iter().map(|a| a.abs()).sum();
    let (mut eps, mut k) = (1e-3, 2.0);
    for _ in 0..ROUNDS {
        let hat: Vec<f64> = (0..shapes.len())
            .map(|j| if is_member(j) { (1.0 + k) * alpha_star[j] } else { -eps })
            .collect();
        let value = problem.cells().objective(&hat);
        if (value - target).abs() <= 1e-8 && dot(&hat) > norm {
            return Ok(hat);
        }
        eps /= 2.0;
        k *= 2.0;
    }
    Err(Error::WitnessNotFound(ROUNDS))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BearingConstants {
    /// Restricted shapelets `Γ₀^R ∪ Γ₁^R`, ascending; `w[k]` belongs to
    /// `rows[k]`.
    pub rows: Vec<usize>,
    pub w: Vec<f64>,
    pub within_bounds: bool,
}

/// Solves `(B^R restricted to Γ₀^R ∪ Γ₁^R rows)ᵀ w = -c` with `c = +1` on
/// included and `-1` on excluded columns, and checks
/// `-(1 + n⊖) <= w <= -1` on unit and `0 < w <= 1` on null shapelets.
pub fn bearing_constants(
    restricted: &BearingMatrix,
    unit_set: &[usize],
    null_set: &[usize],
    c: &[f64],
) -> Result<BearingConstants> {
    let mut rows: Vec<usize> = unit_set.iter().chain(null_set).copied().collect();
    rows.sort_unstable();
    let n = restricted.shape_count();
    if rows.len() != n || c.len() != n {
        return Err(Error::RankDeficient {
            rank: rows.len().min(n),
            required: n,
        });
    }
    let at: Vec<Vec<f64>> = (0..n)
        .map(|j| rows.iter().map(|&i| f64::from(u8::from(restricted.get(i, j)))).collect())
        .collect();
    let rhs: Vec<f64> = c.iter().map(|v| -v).collect();
    let w = linalg::solve(&at, &rhs)?;
    let n_minus = c.iter().filter(|&&v| v < 0.0).count() as f64;
    let tol = 1e-9;
    let within_bounds = rows.iter().zip(&w).all(|(r, &wv)| {
        if unit_set.contains(r) {
            wv >= -(1.0 + n_minus) - tol && wv <= -1.0 + tol
        } else {
            wv > tol && wv <= 1.0 + tol
        }
    });
    Ok(BearingConstants {
        rows,
        w,
        within_bounds,
    })
}

/// `C_j = |Σ_ℓ γ_{ℓ,j} w_ℓ|` for each exterior shape `j`, where `γ_{ℓ,j}` is
/// the fraction of the cells making up restricted shapelet `ℓ` that lie in
/// `S_j`. `cells` is the decomposition of the whole dictionary.
pub fn geometric_coherence(
    cells: &Decomposition,
    members: &[usize],
    restricted: &Decomposition,
    constants: &BearingConstants,
    exterior: &[usize],
) -> Vec<f64> {
    // Map each cell to the restricted shapelet containing it.
    let owner: Vec<Option<usize>> = cells
        .bearing
        .rows()
        .iter()
        .map(|r| {
            let sig = r.restrict(members);
            if sig.is_zero() {
                None
            } else {
                restricted.bearing.rows().binary_search(&sig).ok()
            }
        })
        .collect();
    exterior
        .iter()
        .map(|&j| {
            constants
                .rows
                .iter()
                .zip(&constants.w)
                .map(|(&l, &w)| {
                    let in_l: Vec<usize> = (0..owner.len()).filter(|&i| owner[i] == Some(l)).collect();
                    if in_l.is_empty() {
                        return 0.0;
                    }
                    let inside = in_l.iter().filter(|&&i| cells.bearing.get(i, j)).count();
                    inside as f64 / in_l.len() as f64 * w
                })
                .sum::<f64>()
                .abs()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub constants: BearingConstants,
    /// `(shape index, C_j)` for every exterior shape.
    pub coherence: Vec<(usize, f64)>,
    pub rank: usize,
    pub required_rank: usize,
    pub row_rank_ok: bool,
    pub verdict: bool,
}

impl RecoveryReport {
    pub fn max_coherence(&self) -> f64 {
        self.coherence.iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

impl fmt::Display for RecoveryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict: {}", self.verdict)?;
        writeln!(f, "row rank: {} (required {})", self.rank, self.required_rank)?;
        writeln!(f, "bearing constants within bounds: {}", self.constants.within_bounds)?;
        for (row, w) in self.constants.rows.iter().zip(&self.constants.w) {
            writeln!(f, "  w[shapelet {}] = {w}", row + 1)?;
        }
        writeln!(f, "coherence:")?;
        for (j, c) in &self.coherence {
            writeln!(f, "  C[{}] = {c}", j + 1)?;
        }
        Ok(())
    }
}

/// Sufficient condition for exact recovery of a basic composition: the
/// member and (non-disjoint) exterior columns over the off-support cells of
/// the linkage coefficients have full row rank, and every exterior shape
/// has coherence below one.
pub fn verify_recovery_conditions(dictionary: &[ShapeMask], spec: &CompositionSpec) -> Result<RecoveryReport> {
    let link = linkage::linkage_alpha(dictionary, spec)?;
    let basic = linkage::basic_report(&link);
    if !basic.basic {
        return Err(Error::NotBasic(basic.to_string().trim().replace('\n', "; ")));
    }
    recovery_from_linkage(dictionary, &link)
}

fn recovery_from_linkage(dictionary: &[ShapeMask], link: &LinkageResult) -> Result<RecoveryReport> {
    let n_s = dictionary.len();
    let cells = dsd::decompose(dictionary)?;
    let alpha = link.full_alpha(n_s);
    let beta = cells.bearing.apply(&alpha);
    let partition = partition_beta(&beta)?;
    let off = partition.off_support();

    let members = &link.members;
    let mut union = vec![false; dictionary[0].grid().len()];
    for &j in members {
        for &x in dictionary[j].pixels() {
            union[x] = true;
        }
    }
    let exterior: Vec<usize> = (0..n_s).filter(|j| members.binary_search(j).is_err()).collect();
    let touching: Vec<usize> = exterior
        .iter()
        .copied()
        .filter(|&j| dictionary[j].pixels().iter().any(|&x| union[x]))
        .collect();
    let stacked: Vec<Vec<f64>> = members
        .iter()
        .chain(&touching)
        .map(|&j| off.iter().map(|&i| f64::from(u8::from(cells.bearing.get(i, j)))).collect())
        .collect();
    let required_rank = stacked.len();
    let rank = linalg::rank(&stacked);
    let row_rank_ok = rank == required_rank;

    let c: Vec<f64> = link.alpha.iter().map(|a| a.signum()).collect();
    let constants = bearing_constants(&link.restricted.bearing, &link.unit_shapelets, &link.null_shapelets, &c)?;
    let values = geometric_coherence(&cells, members, &link.restricted, &constants, &exterior);
    let coherence: Vec<(usize, f64)> = exterior.iter().copied().zip(values).collect();
    let verdict = row_rank_ok && coherence.iter().all(|&(_, cj)| cj < 1.0 - EPS_COH);
    Ok(RecoveryReport {
        constants,
        coherence,
        rank,
        required_rank,
        row_rank_ok,
        verdict,
    })
}
