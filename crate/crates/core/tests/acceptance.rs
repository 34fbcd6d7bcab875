//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with timing.
//! Runs without the libtest harness so the lines always reach the console.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::Rng;
use shapecomp::certify::{self, BoundingVectors};
use shapecomp::dsd::{self, BearingMatrix, ConstructorVector};
use shapecomp::grid::{self, Image, InhomogeneityField, PixelGrid};
use shapecomp::linkage;
use shapecomp::solver::{self, SolverConfig, SparseCscProblem};
use shapecomp::{fixtures, Region};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bits(rows: &[[u8; 3]]) -> Vec<ConstructorVector> {
    rows.iter()
        .map(|r| ConstructorVector::from_bits(&r.iter().map(|&b| b == 1).collect::<Vec<_>>()))
        .collect()
}

/// Illustrated shapelet order; canonical row `PERM[k]` is illustrated row `k`.
const ILLUSTRATED: [[u8; 3]; 5] = [[1, 0, 0], [0, 1, 0], [1, 0, 1], [1, 1, 0], [1, 1, 1]];
const PERM: [usize; 5] = [1, 0, 2, 3, 4];

fn dsd_fixture() -> Outcome {
    let shapes = fixtures::three_shape_dsd();
    let d = dsd::decompose(&shapes).map_err(|e| e.to_string())?;
    let expected = bits(&ILLUSTRATED);
    for (k, row) in expected.iter().enumerate() {
        check(&d.bearing.rows()[PERM[k]] == row, format!("row {k} mismatch"))?;
    }
    check(d.bearing.row_count() == 5, "row count")?;
    // Index sets in illustrated (1-based) numbering.
    let illustrated: Vec<Vec<usize>> = d
        .index_sets
        .iter()
        .map(|set| {
            let mut v: Vec<usize> = set.iter().map(|&i| PERM.iter().position(|&p| p == i).unwrap() + 1).collect();
            v.sort_unstable();
            v
        })
        .collect();
    check(
        illustrated == vec![vec![1, 3, 4, 5], vec![2, 4, 5], vec![3, 5]],
        format!("index sets {illustrated:?}"),
    )?;
    check(
        dsd::verify_partition_properties(&shapes, &d.shapelets, &d.index_sets).all_pass(),
        "partition properties",
    )?;
    Ok("5x3 bearing matrix and index sets match".into())
}

fn linkage_fixture() -> Outcome {
    let r = linkage::linkage_alpha(&fixtures::three_shape_dsd(), &fixtures::three_shape_spec())
        .map_err(|e| e.to_string())?;
    check(r.alpha == vec![1.0, 1.0, -2.0], format!("alpha {:?}", r.alpha))?;
    let illustrated: Vec<f64> = PERM.iter().map(|&i| r.beta[i]).collect();
    check(illustrated == vec![1.0, 1.0, -1.0, 2.0, 0.0], format!("beta {illustrated:?}"))?;
    Ok(format!("alpha = {:?}, beta = {:?}", r.alpha, illustrated))
}

fn degenerate_linkage() -> Outcome {
    let shapes = fixtures::five_rectangle_degenerate();
    let spec = fixtures::five_rectangle_spec();
    let r = linkage::linkage_alpha(&shapes, &spec).map_err(|e| e.to_string())?;
    check(!r.unique, "maximizer reported unique")?;
    let (a4, a5) = (r.alpha[3], r.alpha[4]);
    check((a4 + a5 + 3.0).abs() <= 1e-9, format!("a4 + a5 = {}", a4 + a5))?;
    // Every exclusion inequality holds: no touched shapelet exceeds zero.
    for i in r.exclusion_rows() {
        check(r.beta[i] <= 1e-12, format!("shapelet {i} has beta {}", r.beta[i]))?;
    }
    check(!linkage::basic_report(&r).basic, "reported basic")?;
    Ok(format!("unique = false, alpha4 + alpha5 = {}", a4 + a5))
}

fn example_certificate() -> Outcome {
    let rows: Vec<Vec<u8>> = fixtures::EXAMPLE_CELLS.iter().map(|r| r.to_vec()).collect();
    let bearing = BearingMatrix::from_dense(&rows).map_err(|e| e.to_string())?;
    let (p, q) = fixtures::example_cell_integrals();
    let index_sets: Vec<Vec<usize>> = (0..4).map(|j| (0..7).filter(|&i| bearing.get(i, j)).collect()).collect();
    let run = |alpha: [f64; 4]| -> Result<(BoundingVectors, certify::Certificate), String> {
        let part = certify::partition_beta(&bearing.apply(&alpha)).map_err(|e| e.to_string())?;
        let bounds = certify::bounding_vectors(&p, &q, &part);
        let e = certify::loc_violation(&p, &q, &index_sets, &part);
        let c: Vec<Option<f64>> = alpha.iter().map(|&a| (a != 0.0).then(|| a.signum())).collect();
        let cert = certify::find_certificate(&bearing, &c, &e, &bounds).map_err(|e| e.to_string())?;
        Ok((bounds, cert))
    };
    let (bounds, first) = run([1.0, -1.0, -1.0, 0.0])?;
    check(bounds.l == vec![0.0, -1.0, -1.0], format!("l = {:?}", bounds.l))?;
    check(bounds.u == vec![1.0, 0.0, 0.0], format!("u = {:?}", bounds.u))?;
    check(!first.feasible, "first candidate certified")?;
    let (_, second) = run([0.0, 0.0, 0.0, 1.0])?;
    check(second.feasible && second.margin > 0.0, format!("second candidate margin {}", second.margin))?;
    Ok(format!("first infeasible (margin {:.1e}), second feasible (margin {:.4})", first.margin, second.margin))
}

fn disjoint_equivalence() -> Outcome {
    let mut rng = common::rng(5);
    let config = SolverConfig::default();
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let inst = common::disjoint_instance(&mut rng);
        let ints = grid::shape_integrals(&inst.field, &inst.shapes).map_err(|e| e.to_string())?;
        let closed = solver::solve_disjoint_closed_form(&ints, inst.s);
        check(!closed.tie, format!("case {case}: tie"))?;
        let problem = SparseCscProblem::constrained(inst.field, inst.shapes, inst.s as f64).map_err(|e| e.to_string())?;
        let sol = solver::solve_constrained(&problem, &config).map_err(|e| e.to_string())?;
        check(
            sol.support.0 == closed.indices && sol.support.1.is_empty(),
            format!("case {case}: support {:?} vs closed form {:?}", sol.support, closed.indices),
        )?;
        for &j in &closed.indices {
            worst = worst.max((sol.alpha[j] - 1.0).abs());
        }
        check(worst <= 1e-3, format!("case {case}: |alpha - 1| = {worst}"))?;
    }
    Ok(format!("200/200 supports match, max |alpha_j - 1| = {worst:.1e}"))
}

fn recovery_instances() -> Vec<common::CompositionInstance> {
    let mut rng = common::rng(6);
    (0..50).map(|_| common::recoverable_composition(&mut rng)).collect()
}

fn loc_recovery(instances: &[common::CompositionInstance]) -> Outcome {
    let config = SolverConfig::default();
    let mut ok = 0;
    let mut failures = Vec::new();
    for (case, inst) in instances.iter().enumerate() {
        let link = linkage::linkage_alpha(&inst.shapes, &inst.spec).map_err(|e| e.to_string())?;
        let tau: f64 = link.alpha.iter().map(|a| a.abs()).sum();
        let field = common::binary_field(&inst.sigma);
        let problem = SparseCscProblem::constrained(field, inst.shapes.clone(), tau).map_err(|e| e.to_string())?;
        let sol = solver::solve_constrained(&problem, &config).map_err(|e| e.to_string())?;
        let region = solver::extract_support(&problem, &sol.alpha, 0.5).map_err(|e| e.to_string())?;
        let sets_match = sol.support.0 == inst.spec.include() && sol.support.1 == inst.spec.exclude();
        if sets_match && region == inst.sigma {
            ok += 1;
        } else {
            failures.push(case);
        }
    }
    check(ok == instances.len(), format!("{ok}/{} recovered; failing cases {failures:?}", instances.len()))?;
    Ok(format!("{ok}/{} active sets and supports recovered", instances.len()))
}

fn oracle_equivalence(instances: &[common::CompositionInstance]) -> Outcome {
    let mut disagreements = 0;
    for inst in instances {
        let field = common::binary_field(&inst.sigma);
        let problem = SparseCscProblem::constrained(field, inst.shapes.clone(), 1.0).map_err(|e| e.to_string())?;
        let best = solver::brute_force_cardinal_sc(&problem, inst.size()).map_err(|e| e.to_string())?;
        if best.spec.as_ref() != Some(&inst.spec) {
            disagreements += 1;
        }
    }
    check(disagreements == 0, format!("{disagreements} disagreements"))?;
    Ok(format!("0/{} disagreements", instances.len()))
}

fn enumerate_compositions(n: usize, s: usize) -> u64 {
    let mut count = 1; // empty selection
    for code in 0..3u64.pow(n as u32) {
        let (mut plus, mut minus, mut c) = (0, 0, code);
        for _ in 0..n {
            match c % 3 {
                1 => plus += 1,
                2 => minus += 1,
                _ => {}
            }
            c /= 3;
        }
        if plus >= 1 && plus + minus <= s {
            count += 1;
        }
    }
    count
}

fn counting() -> Outcome {
    for n in 1..=8 {
        let unrestricted = dsd::count_compositions(n, None).map_err(|e| e.to_string())?;
        check(
            unrestricted == BigUint::from(enumerate_compositions(n, n)),
            format!("n = {n} unrestricted"),
        )?;
        for s in 0..=n {
            let cardinal = dsd::count_compositions(n, Some(s)).map_err(|e| e.to_string())?;
            check(cardinal == BigUint::from(enumerate_compositions(n, s)), format!("n = {n}, s = {s}"))?;
        }
    }
    check(dsd::count_compositions(2, None).unwrap() == BigUint::from(6u32), "n = 2")?;
    Ok("all n <= 8 and s <= n match enumeration".into())
}

fn convexity_suite() -> Outcome {
    let mut rng = common::rng(9);
    let mut worst_gap = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let problem = random_problem(&mut rng);
        let n = problem.shape_count();
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let t: f64 = rng.gen_range(0.0..1.0);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let g = |v: &[f64]| solver::objective(&problem, v).unwrap();
        let gap = g(&mix) - (t * g(&a) + (1.0 - t) * g(&b));
        worst_gap = worst_gap.max(gap);
        check(gap <= 1e-9, format!("convexity violated by {gap}"))?;
    }
    let mut compared = 0;
    let mut worst_rel: f64 = 0.0;
    while compared < 200 {
        let problem = random_problem(&mut rng);
        let n = problem.shape_count();
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let beta = problem.cells().beta(&a);
        if beta.iter().any(|&b| b.abs() < 1e-3 || (b - 1.0).abs() < 1e-3) {
            continue;
        }
        let g = solver::subgradient(&problem, &a).unwrap();
        let h = 1e-6;
        for j in 0..n {
            let mut up = a.clone();
            let mut down = a.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (solver::objective(&problem, &up).unwrap() - solver::objective(&problem, &down).unwrap()) / (2.0 * h);
            let rel = (fd - g[j]).abs() / g[j].abs().max(1.0);
            worst_rel = worst_rel.max(rel);
            check(rel <= 1e-5, format!("finite difference mismatch {rel}"))?;
        }
        compared += 1;
    }
    Ok(format!(
        "1000 convexity triples (max gap {worst_gap:.1e}), 200 finite-difference checks (max rel {worst_rel:.1e})"
    ))
}

fn random_problem(rng: &mut rand_chacha::ChaCha8Rng) -> SparseCscProblem {
    let grid = PixelGrid::new(10, 10).unwrap();
    let field = common::random_field(rng, grid);
    let n = rng.gen_range(1..=6);
    let shapes = (0..n).map(|_| common::random_rect(rng, grid, 1, 7)).collect();
    SparseCscProblem::constrained(field, shapes, 3.0).unwrap()
}

fn mini_puzzle() -> Outcome {
    let puzzle = fixtures::mini_puzzle();
    let grid = puzzle.pad.grid();
    let values = (0..grid.len()).map(|x| if puzzle.pad.contains(x) { 0.0 } else { 1.0 }).collect();
    let image = Image::new(grid, values).map_err(|e| e.to_string())?;
    let (u_in, u_ex) = grid::quantile_levels(&image, 0.15, 0.85).map_err(|e| e.to_string())?;
    let field: InhomogeneityField = grid::chan_vese_measures(&image, u_in, u_ex).map_err(|e| e.to_string())?;
    let config = SolverConfig::default();
    let solve = |tau: f64| {
        let problem = SparseCscProblem::constrained(field.clone(), puzzle.dictionary.clone(), tau).unwrap();
        let sol = solver::solve_constrained(&problem, &config).unwrap();
        let region = solver::extract_support(&problem, &sol.alpha, 0.5).unwrap();
        (sol, region)
    };
    let (four, region) = solve(4.0);
    let truth: Vec<usize> = (0..puzzle.pieces).collect();
    check(
        four.support.0 == truth && four.support.1.is_empty(),
        format!("tau = 4 support {:?}", four.support),
    )?;
    check(region == Region::from(puzzle.pad.clone()), "tau = 4 region is not the pad")?;
    let (three, _) = solve(3.0);
    check(
        three.objective > four.objective + 1e-9,
        format!("tau = 3 objective {} not worse than {}", three.objective, four.objective),
    )?;
    Ok(format!(
        "tau = 4 recovers the tiling (G = {}), tau = 3 gives G = {:.4}",
        four.objective, three.objective
    ))
}

fn bearing_bounds() -> Outcome {
    let mut rng = common::rng(11);
    let mut ok = 0;
    for _ in 0..100 {
        let inst = common::basic_composition(&mut rng, 0);
        let link = linkage::linkage_alpha(&inst.shapes, &inst.spec).map_err(|e| e.to_string())?;
        let c: Vec<f64> = link.alpha.iter().map(|a| a.signum()).collect();
        let k = certify::bearing_constants(&link.restricted.bearing, &link.unit_shapelets, &link.null_shapelets, &c)
            .map_err(|e| e.to_string())?;
        if k.within_bounds {
            ok += 1;
        }
    }
    check(ok == 100, format!("{ok}/100 within bounds"))?;
    Ok("100/100 bearing constants within bounds".into())
}

fn main() -> ExitCode {
    let mut all_pass = true;
    let mut report = |id: usize, name: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(msg) if elapsed <= limit => ("PASS", msg),
            Ok(msg) => ("FAIL", format!("{msg}; took {elapsed:.2?}, limit {limit:?}")),
            Err(msg) => ("FAIL", msg),
        };
        all_pass &= status == "PASS";
        println!("criterion {id:>2} [{status}] {name} ({elapsed:.2?}): {detail}");
    };
    let secs = Duration::from_secs;
    report(1, "decomposition fixture", secs(1), &mut dsd_fixture);
    report(2, "linkage fixture", secs(1), &mut linkage_fixture);
    report(3, "degenerate linkage", secs(1), &mut degenerate_linkage);
    report(4, "certificate example", secs(1), &mut example_certificate);
    report(5, "disjoint-dictionary equivalence", secs(60), &mut disjoint_equivalence);
    let start = Instant::now();
    let instances = recovery_instances();
    let generation = start.elapsed();
    println!("    (generated 50 recoverable compositions in {generation:.2?})");
    report(6, "exact recovery under the object condition", secs(120), &mut || loc_recovery(&instances));
    report(7, "brute-force oracle agreement", secs(120), &mut || oracle_equivalence(&instances));
    report(8, "composition counting", secs(5), &mut counting);
    report(9, "convexity and subgradient", secs(30), &mut convexity_suite);
    report(10, "mini puzzle", secs(60), &mut mini_puzzle);
    report(11, "bearing constant bounds", secs(30), &mut bearing_bounds);
    if all_pass {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
