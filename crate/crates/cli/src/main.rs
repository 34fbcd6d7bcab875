use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use shapecomp::solver::SolverConfig;
use shapecomp_cli::{exit_code, run, Command, Levels, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Segment,
    Sweep,
    Dsd,
    Linkage,
    Certify,
    Oracle,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Segment => Command::Segment,
            Cmd::Sweep => Command::Sweep,
            Cmd::Dsd => Command::Dsd,
            Cmd::Linkage => Command::Linkage,
            Cmd::Certify => Command::Certify,
            Cmd::Oracle => Command::Oracle,
        }
    }
}

/// Segment a grayscale image as a sparse composition of dictionary shapes.
#[derive(Debug, Parser)]
#[command(name = "shapecomp", version)]
struct Args {
    command: Cmd,
    /// Input image (PGM, P2 or P5).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Shape dictionary (JSON).
    #[arg(long = "dict")]
    dictionary: PathBuf,
    /// L1 budget for the constrained program.
    #[arg(long, conflicts_with = "lambda")]
    tau: Option<f64>,
    /// Budgets for `sweep`.
    #[arg(long, value_delimiter = ',')]
    tau_list: Vec<f64>,
    /// L1 penalty for the regularized program.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, requires = "uex", conflicts_with = "quantiles")]
    uin: Option<f64>,
    #[arg(long, requires = "uin")]
    uex: Option<f64>,
    /// Inside/outside levels as quantiles of the image, e.g. `0.1,0.9`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    quantiles: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SolverConfig::default().max_iters)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Included shapes (labels or 1-based indices) for `linkage`/`certify`.
    #[arg(long, value_delimiter = ',')]
    plus: Vec<String>,
    /// Excluded shapes (labels or 1-based indices).
    #[arg(long, value_delimiter = ',')]
    minus: Vec<String>,
    /// Composition size bound for `oracle` (defaults to floor(tau)).
    #[arg(long)]
    cardinality: Option<usize>,
    /// Skip the LP polish after the subgradient phase.
    #[arg(long)]
    no_polish: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let levels = match (args.uin, args.uex, &args.quantiles) {
        (Some(u_in), Some(u_ex), _) => Levels::Fixed { u_in, u_ex },
        (_, _, Some(q)) => Levels::Quantiles { lo: q[0], hi: q[1] },
        _ => Levels::default(),
    };
    let config = RunConfig {
        command: args.command.into(),
        image: args.image,
        dictionary: args.dictionary,
        tau: args.tau,
        tau_list: args.tau_list,
        lambda: args.lambda,
        levels,
        solver: SolverConfig {
            max_iters: args.iters,
            seed: args.seed,
            polish: !args.no_polish,
            ..SolverConfig::default()
        },
        out: args.out,
        plus: args.plus,
        minus: args.minus,
        cardinality: args.cardinality,
    };
    let outcome = run(&config);
    match &outcome {
        Err(e) => eprintln!("error: {e}"),
        Ok(status) if status.exit_code() != 0 => eprintln!("warning: solver did not converge; artifacts written"),
        Ok(_) => {}
    }
    ExitCode::from(exit_code(&outcome) as u8)
}
