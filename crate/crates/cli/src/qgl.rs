//! Commands over QGL source files.

use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use qudit_core::congruence::Checker;
use qudit_core::esat::{cost_of, RuleSet, SaturationLimits, Simplifier};
use qudit_core::frontend::{lower_to_symbolic, parse_qgl, print_def};
use qudit_core::gates::GateLibrary;
use qudit_core::kernels::{simplify_with_gradients, ExpressionModule, ModuleBuilder};
use qudit_core::symexpr::ComplexExpr;
use qudit_core::{ExpressionModule64, UnitaryExprMatrix};

use crate::{Outcome, Precision};

#[derive(Args, Debug)]
pub struct LimitArgs {
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl LimitArgs {
    fn limits(&self) -> SaturationLimits {
        let mut l = SaturationLimits::default();
        if let Some(n) = self.max_iterations {
            l.max_iterations = n;
        }
        if let Some(n) = self.max_nodes {
            l.max_nodes = n;
        }
        if let Some(s) = self.time_limit {
            l.time_limit = Duration::from_secs_f64(s);
        }
        l
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Equal,
    Phase,
    Congruent,
}

#[derive(Subcommand, Debug)]
pub enum KernelAction {
    /// Print the register programs of each definition.
    Dump {
        file: std::path::PathBuf,
        /// Compile the expressions as written.
        #[arg(long)]
        no_simplify: bool,
    },
    /// Time unitary and gradient kernels, one JSON object per definition.
    Bench {
        file: std::path::PathBuf,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, value_enum, default_value = "64")]
        precision: Precision,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load(path: &Path) -> Result<Vec<UnitaryExprMatrix>> {
    let text = read(path)?;
    let defs = parse_qgl(&text).with_context(|| format!("in {}", path.display()))?;
    defs.iter().map(|d| lower_to_symbolic(d).with_context(|| format!("in {}", path.display()))).collect()
}

/// A file holding at least one definition (the first is used), or a gate
/// name from the library.
fn load_gate(lib: &GateLibrary, arg: &str) -> Result<UnitaryExprMatrix> {
    let path = Path::new(arg);
    if path.exists() {
        return load(path)?.into_iter().next().with_context(|| format!("{arg} holds no definitions"));
    }
    match lib.get(arg) {
        Some(u) => Ok(u.clone()),
        None => bail!("{arg} is neither a file nor a known gate"),
    }
}

pub fn parse(file: &Path, dump_ast: bool, dump_matrix: bool) -> Result<Outcome> {
    let text = read(file)?;
    let defs = parse_qgl(&text).with_context(|| format!("in {}", file.display()))?;
    for (i, def) in defs.iter().enumerate() {
        let u = lower_to_symbolic(def).with_context(|| format!("in {}", file.display()))?;
        if i > 0 {
            out!();
        }
        if dump_ast {
            out!("{def:#?}");
        } else if dump_matrix {
            out!("{u}");
        } else {
            out_raw!("{}", print_def(def));
        }
    }
    Ok(Outcome::Holds)
}

fn with_parts(u: &UnitaryExprMatrix, parts: &[qudit_core::symexpr::ScalarExpr]) -> UnitaryExprMatrix {
    u.with_elements(parts.chunks(2).map(|p| ComplexExpr::new(p[0].clone(), p[1].clone())).collect())
}

fn parts(u: &UnitaryExprMatrix) -> Vec<qudit_core::symexpr::ScalarExpr> {
    u.elements().iter().flat_map(|e| [e.re.clone(), e.im.clone()]).collect()
}

pub fn simplify(file: &Path, rules: Option<&Path>, limits: &LimitArgs) -> Result<Outcome> {
    let mut s = Simplifier::with_limits(limits.limits());
    if let Some(r) = rules {
        s.rules = RuleSet::parse(&read(r)?).with_context(|| format!("in {}", r.display()))?.into();
    }
    for u in load(file)? {
        let input = parts(&u);
        let (out, report) = s.simplify_all(&input);
        let before: f64 = input.iter().map(cost_of).sum();
        let after: f64 = out.iter().map(cost_of).sum();
        out!("{}", with_parts(&u, &out));
        eprintln!("{}: cost {before} -> {after}; {report}", u.name());
    }
    Ok(Outcome::Holds)
}

pub fn diff(file: &Path, simplify: bool) -> Result<Outcome> {
    let s = Simplifier::default();
    for u in load(file)? {
        let grads = if simplify { simplify_with_gradients(&s, &u).gradients } else { u.differentiate() };
        for (p, g) in u.params().iter().zip(grads) {
            out!("d{}/d{p} =", u.name());
            out!("{g}");
        }
    }
    Ok(Outcome::Holds)
}

pub fn check(lib: &GateLibrary, mode: CheckMode, a: &str, b: &str, budget: f64) -> Result<Outcome> {
    let (ua, mut ub) = (load_gate(lib, a)?, load_gate(lib, b)?);
    // Gates are functions of their parameters by position, so the fixed
    // relations compare them under a's names.
    if mode != CheckMode::Congruent && ua.num_params() == ub.num_params() {
        ub = ub.rename_params(ua.params());
    }
    let checker = Checker { search_budget: Duration::from_secs_f64(budget), ..Checker::default() };
    match mode {
        CheckMode::Equal => {
            let eq = checker.check_equal(&ua, &ub);
            out!("{}", if eq.equal { "equal" } else if eq.numerically_equal { "unproved" } else { "not equal" });
            Ok(if eq.equal { Outcome::Holds } else { Outcome::Refuted })
        }
        CheckMode::Phase => match checker.check_phase_congruent(&ua, &ub).phase {
            Ok(theta) => {
                out!("phase := {theta}");
                Ok(Outcome::Holds)
            }
            Err(why) => {
                out!("not congruent: {why}");
                Ok(Outcome::Refuted)
            }
        },
        CheckMode::Congruent => {
            let found = checker.find_congruence(&ua, &ub);
            eprintln!("{} candidates, {} symbolic checks", found.candidates_tried, found.symbolic_checks);
            match found.witness {
                Some(w) => {
                    for (p, e) in &w.assignment {
                        out!("{p} := {e}");
                    }
                    out!("phase := {}", w.phase);
                    Ok(Outcome::Holds)
                }
                None if found.incomplete => {
                    out!("search incomplete");
                    Ok(Outcome::Incomplete)
                }
                None => {
                    out!("no congruence found");
                    Ok(Outcome::Refuted)
                }
            }
        }
    }
}

pub fn kernels(action: &KernelAction) -> Result<Outcome> {
    match action {
        KernelAction::Dump { file, no_simplify } => {
            for u in load(file)? {
                let mut b = ModuleBuilder::new();
                let id = if *no_simplify { b.add_unsimplified(&u) } else { b.add(&u) };
                let m: ExpressionModule64 = b.build();
                let e = m.entry(id);
                out!("unitary {}:", u.name());
                out_raw!("{}", e.unitary);
                for (p, k) in u.params().iter().zip(&e.gradients) {
                    out!("gradient {} / {p}:", u.name());
                    out_raw!("{k}");
                }
            }
        }
        KernelAction::Bench { file, iters, precision } => {
            for u in load(file)? {
                let mut b = ModuleBuilder::new();
                let id = b.add(&u);
                let (unitary_ns, gradient_ns) = match precision {
                    Precision::Single => time_kernels(&b.build::<f32>(), id, *iters),
                    Precision::Double => time_kernels(&b.build::<f64>(), id, *iters),
                };
                let bits = if *precision == Precision::Single { 32 } else { 64 };
                out!(
                    "{}",
                    serde_json::json!({"name": u.name(), "precision": bits, "iters": iters,
                        "unitary_ns": unitary_ns, "gradient_ns": gradient_ns})
                );
            }
        }
    }
    Ok(Outcome::Holds)
}

pub const WARMUP: usize = 10;

/// Mean nanoseconds per call of `f` after a few untimed calls.
pub fn time_ns(iters: usize, mut f: impl FnMut()) -> f64 {
    for _ in 0..WARMUP {
        f();
    }
    let t = Instant::now();
    for _ in 0..iters {
        f();
    }
    t.elapsed().as_nanos() as f64 / iters.max(1) as f64
}

/// Mean ns per unitary and per full gradient evaluation of kernel `id`.
pub fn time_kernels<R: qudit_core::RealScalar>(m: &ExpressionModule<R>, id: usize, iters: usize) -> (f64, f64) {
    use qudit_core::kernels::exec_kernel;
    use qudit_core::Matrix;
    let e = m.entry(id);
    let params: Vec<R> = (0..e.num_params).map(|k| R::from_f64_lossy(0.3 + 0.7 * k as f64)).collect();
    let mut out = Matrix::identity(e.dim);
    let unitary = time_ns(iters, || {
        std::hint::black_box(exec_kernel(&e.unitary, std::hint::black_box(&params), &mut out));
    });
    let mut bufs: Vec<Matrix<R>> = e.gradients.iter().map(|_| Matrix::zeros(e.dim, e.dim)).collect();
    let gradient = time_ns(iters, || {
        for (k, b) in e.gradients.iter().zip(bufs.iter_mut()) {
            std::hint::black_box(exec_kernel(k, std::hint::black_box(&params), b));
        }
    });
    (unitary, gradient)
}
