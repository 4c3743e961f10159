//! Circuit generation, compilation, and evaluation.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Subcommand;
use qudit_core::gates::GateLibrary;
use qudit_core::kernels::ExpressionModule;
use qudit_core::qcir::generators::{brickwall, qft, Brickwall};
use qudit_core::qcir::{circuit_from_json, circuit_to_json};
use qudit_core::qvm::Qvm;
use qudit_core::qvmc::{compile as compile_circuit, Artifact, Bytecode, CompileOptions};
use qudit_core::{Matrix, RealScalar};
use serde_json::{json, Value};

use crate::qgl::time_ns;
use crate::{Outcome, Precision};

#[derive(Subcommand, Debug)]
pub enum Generator {
    /// Quantum Fourier transform on `n` qubits.
    Qft { n: usize },
    /// Square brickwall of CNOT and U3 blocks on `n` qubits.
    Brickwall {
        #[arg(value_parser = ["thin", "thick"])]
        variant: String,
        n: usize,
    },
}

pub fn options(no_fuse: bool, no_sections: bool) -> CompileOptions {
    let mut o = CompileOptions::default();
    if no_fuse {
        o.fuse = false;
        o.fuse_frpr = false;
    }
    o.sectioning = !no_sections;
    o
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            out!("{text}");
            Ok(())
        }
    }
}

pub fn generate(kind: &Generator, output: Option<&Path>) -> Result<Outcome> {
    let c = match kind {
        Generator::Qft { n } => {
            if *n == 0 {
                bail!("a QFT needs at least one qubit");
            }
            qft(*n)
        }
        Generator::Brickwall { variant, n } => {
            if *n < 2 {
                bail!("a brickwall needs at least two qubits");
            }
            brickwall(variant.parse::<Brickwall>().map_err(anyhow::Error::msg)?, *n)
        }
    };
    emit(&circuit_to_json(&c), output)?;
    Ok(Outcome::Holds)
}

fn read_circuit(lib: &GateLibrary, path: &Path) -> Result<qudit_core::qcir::Circuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    circuit_from_json(&text, lib).with_context(|| format!("in {}", path.display()))
}

pub fn compile(
    lib: &GateLibrary,
    path: &Path,
    opts: &CompileOptions,
    dump_tree: bool,
    dump_bytecode: bool,
    output: Option<&Path>,
) -> Result<Outcome> {
    let c = read_circuit(lib, path)?;
    let t = Instant::now();
    let out = compile_circuit(&c, opts)?;
    let elapsed = t.elapsed();
    if dump_tree {
        out_raw!("{}", out.tree.dump(&out.exprs));
    }
    if dump_bytecode {
        out_raw!("{}", out.bytecode);
    }
    if let Some(p) = output {
        let text = serde_json::to_string(&out.artifact())?;
        std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    let bc = &out.bytecode;
    eprintln!(
        "compiled in {:.3} s: {} static, {} dynamic instructions, {} buffers, {} kernels",
        elapsed.as_secs_f64(),
        bc.static_code.len(),
        bc.dynamic_code.len(),
        bc.buffers.len(),
        out.exprs.len()
    );
    Ok(Outcome::Holds)
}

pub struct EvalJob {
    pub grad: bool,
    pub repeat: usize,
    pub bench: bool,
    pub options: CompileOptions,
}

/// Values separated by commas or whitespace, read from a file if `arg`
/// names one.
fn parse_params(arg: &str) -> Result<Vec<f64>> {
    let text = if !arg.is_empty() && Path::new(arg).is_file() {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    } else {
        arg.to_string()
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad parameter `{s}`")))
        .collect()
}

fn matrix_json<R: RealScalar>(m: &Matrix<R>) -> Value {
    let rows: Vec<Value> = (0..m.rows())
        .map(|r| {
            Value::Array(
                (0..m.cols())
                    .map(|c| {
                        let z = m.get(r, c);
                        json!([z.re.to_f64_lossy(), z.im.to_f64_lossy()])
                    })
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

pub fn eval(lib: &GateLibrary, input: &Path, params: &str, precision: Precision, job: &EvalJob) -> Result<Outcome> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("in {}", input.display()))?;
    let artifact: Artifact = if value.get("bytecode").is_some() {
        serde_json::from_value(value).with_context(|| format!("in {}", input.display()))?
    } else {
        let c = circuit_from_json(&text, lib).with_context(|| format!("in {}", input.display()))?;
        compile_circuit(&c, &job.options)?.artifact()
    };
    let params = parse_params(params)?;
    let bc = Arc::new(artifact.bytecode);
    if params.len() != bc.num_params {
        bail!("circuit has {} parameters, got {}", bc.num_params, params.len());
    }
    match precision {
        Precision::Single => {
            let p: Vec<f32> = params.iter().map(|&x| x as f32).collect();
            run_vm::<f32>(bc, artifact.kernels, &p, job)
        }
        Precision::Double => run_vm::<f64>(bc, artifact.kernels, &params, job),
    }
}

fn run_vm<R: RealScalar>(
    bc: Arc<Bytecode>,
    kernels: Vec<qudit_core::kernels::ModuleEntry>,
    params: &[R],
    job: &EvalJob,
) -> Result<Outcome> {
    let module = Arc::new(ExpressionModule::<R>::from_entries(kernels));
    let mut vm = Qvm::new(bc, module, job.grad);
    vm.warmup();
    if job.bench {
        let iters = job.repeat.max(1);
        let ns = if job.grad {
            time_ns(iters, || {
                std::hint::black_box(vm.run_unitary_and_grad(params).ok());
            })
        } else {
            time_ns(iters, || {
                std::hint::black_box(vm.run_unitary(params).ok());
            })
        };
        out!("{}", json!({"mean_ns": ns, "repeat": iters, "precision": R::BITS, "grad": job.grad}));
        return Ok(Outcome::Holds);
    }
    let mut result = None;
    for _ in 0..job.repeat.max(1) {
        result = Some(if job.grad {
            let (u, g) = vm.run_unitary_and_grad(params)?;
            (u, Some(g))
        } else {
            (vm.run_unitary(params)?, None)
        });
    }
    let (u, grads) = result.expect("at least one run");
    match grads {
        None => out!("{}", matrix_json(&u)),
        Some(g) => out!(
            "{}",
            json!({"unitary": matrix_json(&u), "gradients": g.iter().map(matrix_json).collect::<Vec<_>>()})
        ),
    }
    Ok(Outcome::Holds)
}
