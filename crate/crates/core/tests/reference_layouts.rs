//! Hand-checkable layouts compared against small independent oracles.

mod common;

use shapecomp::certify;
use shapecomp::dsd::CompositionSpec;
use shapecomp::fixtures;
use shapecomp::grid::{self, InhomogeneityField, PixelGrid, ShapeMask};
use shapecomp::linkage;
use shapecomp::solver::{self, SolverConfig, SparseCscProblem};

/// Maximizes `x + y` over `{a x + b y <= r}` by enumerating the pairwise
/// intersections of the constraint lines.
fn best_vertex_2d(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let mut best: Option<(f64, f64)> = None;
    for (i, &(a1, b1, r1)) in rows.iter().enumerate() {
        for &(a2, b2, r2) in &rows[i + 1..] {
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (r1 * b2 - r2 * b1) / det;
            let y = (a1 * r2 - a2 * r1) / det;
            if rows.iter().all(|&(a, b, r)| a * x + b * y <= r + 1e-9) && best.is_none_or(|(bx, by)| x + y > bx + by + 1e-9) {
                best = Some((x, y));
            }
        }
    }
    best.expect("bounded feasible region")
}

#[test]
fn four_shape_linkage_matches_vertex_enumeration() {
    let shapes = fixtures::four_shape_linkage();
    let spec = fixtures::four_shape_spec();
    let rows: Vec<(f64, f64, f64)> = [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [1, 1, 0, 0],
        [0, 0, 1, 0],
        [1, 0, 1, 0],
        [1, 1, 1, 0],
        [0, 0, 0, 1],
        [1, 0, 0, 1],
        [1, 1, 0, 1],
        [0, 0, 1, 1],
        [0, 1, 0, 1],
    ]
    .iter()
    .filter(|r| r[2] + r[3] > 0)
    .map(|r| (f64::from(r[2]), f64::from(r[3]), -f64::from(r[0] + r[1])))
    .collect();
    assert_eq!(rows.len(), 8);
    let (x, y) = best_vertex_2d(&rows);
    let result = linkage::linkage_alpha(&shapes, &spec).unwrap();
    assert_eq!(result.alpha, vec![1.0, 1.0, x, y]);
    assert_eq!((x, y), (-2.0, -2.0));
    assert!(result.unique);
    assert!(linkage::basic_report(&result).basic);
}

fn two_disjoint() -> (InhomogeneityField, Vec<ShapeMask>) {
    let grid = PixelGrid::new(10, 4).unwrap();
    let shapes = vec![ShapeMask::rect(grid, 0, 0, 4, 4).unwrap(), ShapeMask::rect(grid, 6, 0, 4, 4).unwrap()];
    let diff: Vec<f64> = (0..grid.len())
        .map(|x| match (grid.coords(x).0, x % 2) {
            (0..=3, 0) => -2.0,
            (6..=9, 0) => -1.0,
            (0..=3 | 6..=9, _) => 0.5,
            _ => 1.0,
        })
        .collect();
    (InhomogeneityField::from_difference(grid, &diff).unwrap(), shapes)
}

#[test]
fn brute_force_agrees_with_closed_form_on_disjoint_shapes() {
    let (field, shapes) = two_disjoint();
    let ints = grid::shape_integrals(&field, &shapes).unwrap();
    for s in 1..=2 {
        let closed = solver::solve_disjoint_closed_form(&ints, s);
        let problem = SparseCscProblem::constrained(field.clone(), shapes.clone(), s as f64).unwrap();
        let brute = solver::brute_force_cardinal_sc(&problem, s).unwrap();
        assert_eq!(brute.spec.unwrap().include(), closed.indices.as_slice());
        assert!(!closed.tie);
    }
    assert_eq!(solver::solve_disjoint_closed_form(&ints, 1).indices, vec![0]);
}

#[test]
fn disjoint_selection_is_certified() {
    let (field, shapes) = two_disjoint();
    let problem = SparseCscProblem::constrained(field, shapes, 1.0).unwrap();
    let (partition, _, cert) = certify::certify_alpha(&problem, &[1.0, 0.0]).unwrap();
    assert_eq!(partition.gamma_1.len(), 1);
    assert!(cert.feasible, "{cert}");
    let sol = solver::solve_constrained(&problem, &SolverConfig::default()).unwrap();
    assert_eq!(sol.alpha, vec![1.0, 0.0]);
}

#[test]
fn witness_exists_with_a_complement_only_exterior_shape() {
    let grid = PixelGrid::new(12, 6).unwrap();
    let member = ShapeMask::rect(grid, 0, 0, 5, 6).unwrap();
    let outside = ShapeMask::rect(grid, 8, 1, 3, 3).unwrap();
    let sigma = member.clone().into();
    let field = common::binary_field(&sigma);
    let problem = SparseCscProblem::constrained(field, vec![member, outside], 1.0).unwrap();
    let spec = CompositionSpec::new(vec![0], vec![]).unwrap();
    let witness = certify::tangent_witness_loc(&problem, &spec, &[1.0, 0.0]).unwrap();
    assert!(witness[0] > 1.0);
    assert!(witness[1] < 0.0);
}

#[test]
fn lambda_zero_reaches_the_lucid_bound() {
    let mut rng = common::rng(11);
    for _ in 0..10 {
        let inst = common::basic_composition(&mut rng, 3);
        let field = common::binary_field(&inst.sigma);
        let bound = -inst.sigma.pixels().iter().map(|&x| field.pi_ex()[x] - field.pi_in()[x]).sum::<f64>();
        let problem = SparseCscProblem::regularized(field, inst.shapes.clone(), 0.0).unwrap();
        let sol = solver::solve_regularized(&problem, &SolverConfig::default()).unwrap();
        assert!((sol.objective - bound).abs() < 1e-6 * (1.0 + bound.abs()), "{} vs {}", sol.objective, bound);
    }
}

#[test]
fn members_only_dictionary_passes_recovery() {
    let mut rng = common::rng(5);
    for _ in 0..10 {
        let inst = common::basic_composition(&mut rng, 0);
        let report = certify::verify_recovery_conditions(&inst.shapes, &inst.spec).unwrap();
        assert!(report.coherence.is_empty());
        assert_eq!(report.max_coherence(), 0.0);
        assert_eq!(report.verdict, report.row_rank_ok, "{report}");
    }
}

#[test]
fn venn_layout_is_not_recoverable() {
    let shapes = fixtures::example_venn();
    let spec = CompositionSpec::new(vec![0, 1], vec![2]).unwrap();
    match certify::verify_recovery_conditions(&shapes, &spec) {
        Ok(report) => assert!(!report.verdict, "{report}"),
        Err(e) => panic!("unexpected error: {e}"),
    }
}
