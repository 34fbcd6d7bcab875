//! The command surface: load inputs, run one analysis, write artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use shapecomp::dsd::{self, CompositionSpec};
use shapecomp::grid::{self, InhomogeneityField, ShapeMask};
use shapecomp::solver::{self, Mode, Solution, SolverConfig, SparseCscProblem};
use shapecomp::{certify, linkage, pgm};

use crate::dictionary::{parse_dictionary, DictionarySpec};
use crate::CliError;

/// Support masks threshold the superposition at this level.
pub const MASK_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Segment,
    Sweep,
    Dsd,
    Linkage,
    Certify,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Segment => "segment",
            Command::Sweep => "sweep",
            Command::Dsd => "dsd",
            Command::Linkage => "linkage",
            Command::Certify => "certify",
            Command::Oracle => "oracle",
        }
    }

    fn needs_image(self) -> bool {
        !matches!(self, Command::Dsd | Command::Linkage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Levels {
    Fixed { u_in: f64, u_ex: f64 },
    /// Inside level at the `lo` quantile, outside level at `hi`.
    Quantiles { lo: f64, hi: f64 },
}

impl Default for Levels {
    fn default() -> Self {
        Levels::Quantiles { lo: 0.1, hi: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub image: Option<PathBuf>,
    pub dictionary: PathBuf,
    pub tau: Option<f64>,
    pub tau_list: Vec<f64>,
    pub lambda: Option<f64>,
    pub levels: Levels,
    pub solver: SolverConfig,
    pub out: PathBuf,
    /// Composition for `linkage` and `certify`: labels, or 1-based indices.
    pub plus: Vec<String>,
    pub minus: Vec<String>,
    /// Size bound for `oracle`; defaults to `τ` rounded down.
    pub cardinality: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, dictionary: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            image: None,
            dictionary: dictionary.into(),
            tau: None,
            tau_list: Vec::new(),
            lambda: None,
            levels: Levels::default(),
            solver: SolverConfig::default(),
            out: out.into(),
            plus: Vec::new(),
            minus: Vec::new(),
            cardinality: None,
        }
    }

    fn mode(&self) -> Result<Mode, CliError> {
        match (self.tau, self.lambda) {
            (Some(t), None) => Ok(Mode::Budget(t)),
            (None, Some(l)) => Ok(Mode::Penalty(l)),
            (Some(_), Some(_)) => Err(CliError::Usage("give only one of --tau and --lambda".into())),
            (None, None) => Err(CliError::Usage(format!("{} needs --tau or --lambda", self.command.name()))),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.solver.validate()?;
        if self.command.needs_image() && self.image.is_none() {
            return Err(CliError::Usage(format!("{} needs --image", self.command.name())));
        }
        match self.command {
            Command::Segment => {
                self.mode()?;
            }
            Command::Sweep => {
                if self.tau_list.is_empty() {
                    return Err(CliError::Usage("sweep needs --tau-list".into()));
                }
                if self.tau.is_some() || self.lambda.is_some() {
                    return Err(CliError::Usage("sweep takes --tau-list only".into()));
                }
            }
            Command::Linkage => {
                if self.plus.is_empty() {
                    return Err(CliError::Usage("linkage needs --plus".into()));
                }
            }
            Command::Certify => {
                if self.plus.is_empty() || self.tau.is_some() || self.lambda.is_some() {
                    self.mode()?;
                }
            }
            Command::Oracle => {
                if self.cardinality.is_none() && self.tau.is_none() {
                    return Err(CliError::Usage("oracle needs --cardinality or --tau".into()));
                }
            }
            Command::Dsd => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    /// The solver stopped at its iteration cap; artifacts were still written.
    NotConverged,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::NotConverged => 2,
        }
    }
}

struct Inputs {
    spec: DictionarySpec,
    shapes: Vec<ShapeMask>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_out(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io {
        path,
        message: e.to_string(),
    })
}

fn load_dictionary(path: &Path) -> Result<Inputs, CliError> {
    let text = read_text(path)?;
    let spec = parse_dictionary(&text).map_err(|e| CliError::input(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let shapes = spec.rasterize(base).map_err(|e| CliError::input(path, e))?;
    Ok(Inputs { spec, shapes })
}

fn load_field(config: &RunConfig, inputs: &Inputs) -> Result<InhomogeneityField, CliError> {
    let path = config.image.as_deref().expect("validated");
    let image = pgm::read_image(path).map_err(|e| CliError::input(path, e))?;
    let grid = inputs.spec.pixel_grid()?;
    if image.grid() != grid {
        return Err(CliError::input(
            path,
            shapecomp::Error::GridMismatch {
                expected: (grid.width(), grid.height()),
                found: (image.grid().width(), image.grid().height()),
            },
        ));
    }
    let (u_in, u_ex) = match config.levels {
        Levels::Fixed { u_in, u_ex } => (u_in, u_ex),
        Levels::Quantiles { lo, hi } => grid::quantile_levels(&image, lo, hi)?,
    };
    Ok(grid::chan_vese_measures(&image, u_in, u_ex)?)
}

fn resolve_shapes(names: &[String], spec: &DictionarySpec) -> Result<Vec<usize>, CliError> {
    names
        .iter()
        .map(|name| {
            if let Some(j) = spec.entries.iter().position(|e| &e.label == name) {
                return Ok(j);
            }
            match name.parse::<usize>() {
                Ok(k) if (1..=spec.entries.len()).contains(&k) => Ok(k - 1),
                _ => Err(CliError::Usage(format!("unknown shape '{name}' (not a label or a 1-based index)"))),
            }
        })
        .collect()
}

fn composition(config: &RunConfig, inputs: &Inputs) -> Result<CompositionSpec, CliError> {
    let include = resolve_shapes(&config.plus, &inputs.spec)?;
    let exclude = resolve_shapes(&config.minus, &inputs.spec)?;
    Ok(CompositionSpec::new(include, exclude)?)
}

fn alpha_csv(alpha: &[f64], spec: &DictionarySpec) -> String {
    let mut out = String::from("index,label,alpha\n");
    for (j, (a, entry)) in alpha.iter().zip(&spec.entries).enumerate() {
        // Normalize -0 so reruns and platforms print the same bytes.
        let a = if *a == 0.0 { 0.0 } else { *a };
        writeln!(out, "{},{},{}", j + 1, entry.label, a).unwrap();
    }
    out
}

fn labels_of(indices: &[usize], spec: &DictionarySpec) -> String {
    let names: Vec<&str> = indices.iter().map(|&j| spec.entries[j].label.as_str()).collect();
    format!("[{}]", names.join(", "))
}

fn solution_report(problem: &SparseCscProblem, sol: &Solution, spec: &DictionarySpec, support_pixels: usize) -> String {
    let mut r = String::new();
    match problem.mode() {
        Mode::Budget(t) => writeln!(r, "mode: constrained (tau = {t})").unwrap(),
        Mode::Penalty(l) => writeln!(r, "mode: regularized (lambda = {l})").unwrap(),
    }
    writeln!(r, "shapes: {}", problem.shape_count()).unwrap();
    writeln!(r, "cells: {}", problem.cells().cell_count()).unwrap();
    writeln!(r, "objective: {}", sol.objective).unwrap();
    writeln!(r, "program_value: {}", sol.program_value).unwrap();
    writeln!(r, "l1_norm: {}", sol.alpha.iter().map(|a| a.abs()).sum::<f64>()).unwrap();
    writeln!(r, "iterations: {}", sol.iterations_used).unwrap();
    writeln!(r, "converged: {}", sol.converged).unwrap();
    writeln!(r, "polished: {}", sol.polished).unwrap();
    writeln!(r, "support_plus: {}", labels_of(&sol.support.0, spec)).unwrap();
    writeln!(r, "support_minus: {}", labels_of(&sol.support.1, spec)).unwrap();
    writeln!(r, "mask_pixels: {support_pixels}").unwrap();
    r
}

fn solve(problem: &SparseCscProblem, config: &SolverConfig) -> Result<Solution, CliError> {
    let sol = match problem.mode() {
        Mode::Budget(_) => solver::solve_constrained(problem, config)?,
        Mode::Penalty(_) => solver::solve_regularized(problem, config)?,
    };
    Ok(sol)
}

fn status_of(sol: &Solution) -> RunStatus {
    if sol.converged || sol.polished {
        RunStatus::Success
    } else {
        RunStatus::NotConverged
    }
}

/// Writes `mask.pgm`, `alpha.csv` and `report.txt` for one solve into `dir`.
fn write_solution(dir: &Path, problem: &SparseCscProblem, sol: &Solution, spec: &DictionarySpec) -> Result<usize, CliError> {
    let region = solver::extract_support(problem, &sol.alpha, MASK_LEVEL)?;
    write_out(dir, "mask.pgm", &pgm::encode_mask(&region))?;
    write_out(dir, "alpha.csv", alpha_csv(&sol.alpha, spec).as_bytes())?;
    write_out(dir, "report.txt", solution_report(problem, sol, spec, region.len()).as_bytes())?;
    Ok(region.len())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn run(config: &RunConfig) -> Result<RunStatus, CliError> {
    config.validate()?;
    let inputs = load_dictionary(&config.dictionary)?;
    ensure_dir(&config.out)?;
    match config.command {
        Command::Segment => segment(config, &inputs),
        Command::Sweep => sweep(config, &inputs),
        Command::Dsd => dsd_report(config, &inputs),
        Command::Linkage => linkage_report(config, &inputs),
        Command::Certify => certify_report(config, &inputs),
        Command::Oracle => oracle(config, &inputs),
    }
}

fn segment(config: &RunConfig, inputs: &Inputs) -> Result<RunStatus, CliError> {
    let field = load_field(config, inputs)?;
    let problem = SparseCscProblem::new(field, inputs.shapes.clone(), config.mode()?)?;
    let sol = solve(&problem, &config.solver)?;
    write_solution(&config.out, &problem, &sol, &inputs.spec)?;
    Ok(status_of(&sol))
}

fn tau_dir_name(tau: f64) -> String {
    format!("tau_{tau}")
}

fn sweep(config: &RunConfig, inputs: &Inputs) -> Result<RunStatus, CliError> {
    let field = load_field(config, inputs)?;
    let base = SparseCscProblem::constrained(field, inputs.shapes.clone(), 0.0)?;
    let problems: Vec<SparseCscProblem> = config
        .tau_list
        .iter()
        .map(|&t| base.with_mode(Mode::Budget(t)))
        .collect::<Result<_, _>>()?;
    // Solves are independent; results are gathered in τ order before writing.
    let solutions: Vec<Result<Solution, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = problems
            .iter()
            .map(|p| scope.spawn(|| solve(p, &config.solver)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });
    let mut summary = String::from("tau,objective,support_size,converged\n");
    let mut status = RunStatus::Success;
    for ((tau, problem), sol) in config.tau_list.iter().zip(&problems).zip(solutions) {
        let sol = sol?;
        let dir = config.out.join(tau_dir_name(*tau));
        ensure_dir(&dir)?;
        write_solution(&dir, problem, &sol, &inputs.spec)?;
        let size = sol.support.0.len() + sol.support.1.len();
        let st = status_of(&sol);
        if st == RunStatus::NotConverged {
            status = st;
        }
        writeln!(summary, "{tau},{},{size},{}", sol.objective, st == RunStatus::Success).unwrap();
    }
    write_out(&config.out, "summary.csv", summary.as_bytes())?;
    Ok(status)
}

fn dsd_report(config: &RunConfig, inputs: &Inputs) -> Result<RunStatus, CliError> {
    let d = dsd::decompose(&inputs.shapes)?;
    let mut r = String::new();
    writeln!(r, "shapes: {}", inputs.shapes.len()).unwrap();
    writeln!(r, "shapelets: {}", d.shapelets.len()).unwrap();
    for (i, s) in d.shapelets.iter().enumerate() {
        writeln!(r, "shapelet {}: pixels={} constructor={:?}", i + 1, s.pixels.len(), s.constructor).unwrap();
    }
    for (j, cells) in d.index_sets.iter().enumerate() {
        let one_based: Vec<usize> = cells.iter().map(|c| c + 1).collect();
        writeln!(r, "shape {} ({}): cells {:?}", j + 1, inputs.spec.entries[j].label, one_based).unwrap();
    }
    write_out(&config.out, "dsd.txt", r.as_bytes())?;
    write_out(&config.out, "bearing.txt", d.bearing.to_text().as_bytes())?;
    Ok(RunStatus::Success)
}

fn linkage_report(config: &RunConfig, inputs: &Inputs) -> Result<RunStatus, CliError> {
    let spec = composition(config, inputs)?;
    let mut r = String::new();
    writeln!(r, "include: {}", labels_of(spec.include(), &inputs.spec)).unwrap();
    writeln!(r, "exclude: {}", labels_of(spec.exclude(), &inputs.spec)).unwrap();
    if let Some(j) = dsd::first_redundant_shape(&inputs.shapes, &spec)? {
        writeln!(r, "nonredundant: false (shape {} can be dropped)", inputs.spec.entries[j].label).unwrap();
        write_out(&config.out, "linkage.txt", r.as_bytes())?;
        return Err(shapecomp::Error::Redundant(j).into());
    }
    let result = linkage::linkage_alpha(&inputs.shapes, &spec)?;
    let full = result.full_alpha(inputs.shapes.len());
    writeln!(r, "nonredundant: true").unwrap();
    writeln!(r, "alpha: {:?}", result.alpha).unwrap();
    writeln!(r, "beta: {:?}", result.beta).unwrap();
    writeln!(r, "unique: {}", result.unique).unwrap();
    writeln!(r, "unit_shapelets: {:?}", result.unit_shapelets).unwrap();
    writeln!(r, "null_shapelets: {:?}", result.null_shapelets).unwrap();
    write!(r, "{}", linkage::basic_report(&result)).unwrap();
    write_out(&config.out, "linkage.txt", r.as_bytes())?;
    write_out(&config.out, "alpha.csv", alpha_csv(&full, &inputs.spec).as_bytes())?;
    Ok(RunStatus::Success)
}

fn certify_report(config: &RunConfig, inputs: &Inputs) -> Result<RunStatus, CliError> {
    let field = load_field(config, inputs)?;
    let mut r = String::new();
    let mut status = RunStatus::Success;
    let (problem, alpha, composition) = if config.plus.is_empty() {
        let problem = SparseCscProblem::new(field, inputs.shapes.clone(), config.mode()?)?;
        let sol = solve(&problem, &config.solver)?;
        status = status_of(&sol);
        writeln!(r, "candidate: solver output").unwrap();
        let alpha = sol.alpha;
        (problem, alpha, None)
    } else {
        let spec = composition(config, inputs)?;
        let link = linkage::linkage_alpha(&inputs.shapes, &spec)?;
        let alpha = link.full_alpha(inputs.shapes.len());
        let mode = match (config.tau, config.lambda) {
            (None, None) => Mode::Budget(alpha.iter().map(|a| a.abs()).sum()),
            _ => config.mode()?,
        };
        writeln!(r, "candidate: linkage coefficients").unwrap();
        (SparseCscProblem::new(field, inputs.shapes.clone(), mode)?, alpha, Some(spec))
    };
    writeln!(r, "alpha: {alpha:?}").unwrap();
    writeln!(r, "objective: {}", solver::objective(&problem, &alpha)?).unwrap();
    match certify::certify_alpha(&problem, &alpha) {
        Ok((partition, _, cert)) => {
            writeln!(r, "gamma_1: {}", partition.gamma_1.len()).unwrap();
            writeln!(r, "gamma_0: {}", partition.gamma_0.len()).unwrap();
            write!(r, "{cert}").unwrap();
        }
        Err(e) => writeln!(r, "certificate: {e}").unwrap(),
    }
    if let Some(spec) = composition {
        match certify::tangent_witness_loc(&problem, &spec, &alpha) {
            Ok(w) => writeln!(r, "tangent_witness: {w:?}").unwrap(),
            Err(e) => writeln!(r, "tangent_witness: {e}").unwrap(),
        }
        match certify::verify_recovery_conditions(&inputs.shapes, &spec) {
            Ok(report) => write!(r, "{report}").unwrap(),
            Err(e) => writeln!(r, "recovery: {e}").unwrap(),
        }
    }
    write_out(&config.out, "certify.txt", r.as_bytes())?;
    write_out(&config.out, "alpha.csv", alpha_csv(&alpha, &inputs.spec).as_bytes())?;
    Ok(status)
}

fn oracle(config: &RunConfig, inputs: &Inputs) -> Result<RunStatus, CliError> {
    let field = load_field(config, inputs)?;
    let s = match (config.cardinality, config.tau) {
        (Some(s), _) => s,
        (None, Some(t)) if t >= 0.0 => t.floor() as usize,
        (None, t) => return Err(CliError::Usage(format!("oracle cardinality from --tau {t:?} must be >= 0"))),
    };
    let problem = SparseCscProblem::constrained(field, inputs.shapes.clone(), s as f64)?;
    let best = solver::brute_force_cardinal_sc(&problem, s)?;
    let region = match &best.spec {
        Some(spec) => dsd::compose_region(&inputs.shapes, spec)?,
        None => shapecomp::Region::empty(problem.field().grid()),
    };
    let mut r = String::new();
    writeln!(r, "cardinality: {s}").unwrap();
    writeln!(r, "objective: {}", best.value).unwrap();
    match &best.spec {
        Some(spec) => {
            writeln!(r, "include: {}", labels_of(spec.include(), &inputs.spec)).unwrap();
            writeln!(r, "exclude: {}", labels_of(spec.exclude(), &inputs.spec)).unwrap();
        }
        None => writeln!(r, "selection: empty").unwrap(),
    }
    writeln!(r, "mask_pixels: {}", region.len()).unwrap();
    write_out(&config.out, "oracle.txt", r.as_bytes())?;
    write_out(&config.out, "mask.pgm", &pgm::encode_mask(&region))?;
    Ok(RunStatus::Success)
}
