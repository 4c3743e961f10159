//! `qudit`: parse, simplify, and compile QGL gates; build, compile, and
//! evaluate circuits; run the benchmark suites.

/// `println!` that ignores a closed stdout.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

/// `print!` that ignores a closed stdout.
macro_rules! out_raw {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

mod bench;
mod circuits;
mod qgl;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use qudit_core::gates::GateLibrary;

/// How a command ended, mapped onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Success, or the checked relation holds.
    Holds,
    /// Refuted, or nothing was found.
    Refuted,
    /// A search ran out of budget.
    Incomplete,
}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qudit", version, about = "Qudit gate expression compiler and circuit virtual machine")]
struct Cli {
    /// Extra QGL definitions added to the standard gate library.
    #[arg(long, global = true, value_name = "FILE")]
    prelude: Vec<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a QGL file, printing it back.
    Parse {
        file: PathBuf,
        /// Print the syntax tree instead.
        #[arg(long, conflicts_with = "dump_matrix")]
        dump_ast: bool,
        /// Print the lowered symbolic matrix instead.
        #[arg(long)]
        dump_matrix: bool,
    },
    /// Simplify every element of each definition by equality saturation.
    Simplify {
        file: PathBuf,
        /// Rule file replacing the default rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[command(flatten)]
        limits: qgl::LimitArgs,
    },
    /// Print the partial derivative of each definition per parameter.
    Diff {
        file: PathBuf,
        /// Simplify the derivatives.
        #[arg(long)]
        simplify: bool,
    },
    /// Check equality, global-phase congruence, or search for a parameter
    /// map making two gates congruent. Arguments are QGL files or names
    /// from the gate library.
    Check {
        #[arg(long, value_enum, default_value = "equal")]
        mode: qgl::CheckMode,
        a: String,
        b: String,
        /// Search budget in seconds.
        #[arg(long, default_value_t = 10.0)]
        budget: f64,
    },
    /// Emit a generated circuit as JSON.
    Circuit {
        #[command(subcommand)]
        kind: circuits::Generator,
        /// Write to this file instead of stdout.
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
    /// Compile a circuit to bytecode.
    Compile {
        circuit: PathBuf,
        /// Skip subtree fusion and permutation fusion.
        #[arg(long)]
        no_fuse: bool,
        /// Keep everything in the dynamic section.
        #[arg(long)]
        no_sections: bool,
        #[arg(long)]
        dump_tree: bool,
        #[arg(long)]
        dump_bytecode: bool,
        /// Write bytecode and kernels as a JSON artifact.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a circuit or compiled artifact.
    Eval {
        /// Circuit JSON or an artifact written by `compile -o`.
        input: PathBuf,
        /// Comma- or whitespace-separated values, or a file holding them.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        params: String,
        /// Also print the partial derivatives.
        #[arg(long)]
        grad: bool,
        #[arg(long, value_enum, default_value = "64")]
        precision: Precision,
        /// Number of evaluations.
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        /// Print mean time per evaluation instead of the result.
        #[arg(long)]
        bench: bool,
        #[arg(long)]
        no_fuse: bool,
    },
    /// Inspect or time the kernels of a QGL file.
    Kernels {
        #[command(subcommand)]
        action: qgl::KernelAction,
    },
    /// Run a benchmark suite, one JSON object per line.
    Bench {
        #[arg(value_enum)]
        suite: bench::Suite,
        /// Measured iterations per timing.
        #[arg(long, default_value_t = 1000)]
        iters: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    #[value(name = "32")]
    Single,
    #[value(name = "64")]
    Double,
}

fn library(preludes: &[PathBuf]) -> Result<GateLibrary> {
    let mut lib = GateLibrary::standard();
    for p in preludes {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        lib.extend_from_source(&text).with_context(|| format!("in {}", p.display()))?;
    }
    Ok(lib)
}

fn run(cli: Cli) -> Result<Outcome> {
    let lib = library(&cli.prelude)?;
    match cli.command {
        Command::Parse { file, dump_ast, dump_matrix } => qgl::parse(&file, dump_ast, dump_matrix),
        Command::Simplify { file, rules, limits } => qgl::simplify(&file, rules.as_deref(), &limits),
        Command::Diff { file, simplify } => qgl::diff(&file, simplify),
        Command::Check { mode, a, b, budget } => qgl::check(&lib, mode, &a, &b, budget),
        Command::Circuit { kind, output } => circuits::generate(&kind, output.as_deref()),
        Command::Compile { circuit, no_fuse, no_sections, dump_tree, dump_bytecode, output } => {
            let opts = circuits::options(no_fuse, no_sections);
            circuits::compile(&lib, &circuit, &opts, dump_tree, dump_bytecode, output.as_deref())
        }
        Command::Eval { input, params, grad, precision, repeat, bench, no_fuse } => {
            let job = circuits::EvalJob { grad, repeat, bench, options: circuits::options(no_fuse, false) };
            circuits::eval(&lib, &input, &params, precision, &job)
        }
        Command::Kernels { action } => qgl::kernels(&action),
        Command::Bench { suite, iters } => bench::run(&lib, suite, iters),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Holds) => ExitCode::SUCCESS,
        Ok(Outcome::Refuted) => ExitCode::from(1),
        Ok(Outcome::Incomplete) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
