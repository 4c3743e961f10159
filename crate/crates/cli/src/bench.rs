//! Benchmark suites. Each measurement prints one JSON object per line.

use std::time::Instant;

use anyhow::Result;
use clap::ValueEnum;
use qudit_core::esat::{saturate, EGraph, Extractor, Simplifier};
use qudit_core::frontend::compile_unitary;
use qudit_core::gates::GateLibrary;
use qudit_core::kernels::{compile_kernel, compile_with, BufferInit, ExpressionModule, ModuleEntry};
use qudit_core::qcir::generators::{brickwall, qft, Brickwall};
use qudit_core::qvmc::{compile, CompileOptions};
use qudit_core::symexpr::ComplexExpr;
use qudit_core::{Qvm64, UnitaryExprMatrix};
use serde_json::json;

use crate::qgl::{time_kernels, time_ns};
use crate::Outcome;

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Per-stage compile times and kernel speed for the gate expressions.
    Expr,
    /// Evaluation speed of compiled brickwall circuits.
    Circuit,
    /// QFT construction time against size.
    QftBuild,
}

pub fn run(lib: &GateLibrary, suite: Suite, iters: usize) -> Result<Outcome> {
    match suite {
        Suite::Expr => expr_suite(lib, iters)?,
        Suite::Circuit => circuit_suite(iters)?,
        Suite::QftBuild => qft_suite(),
    }
    Ok(Outcome::Holds)
}

/// One copy of a library gate with its parameters suffixed by `tag`.
fn fresh(lib: &GateLibrary, name: &str, tag: usize) -> Result<UnitaryExprMatrix> {
    let source = &lib.entry(name).ok_or_else(|| anyhow::anyhow!("no gate {name}"))?.source;
    let u = compile_unitary(source)?;
    let names: Vec<String> = u.params().iter().map(|p| format!("{p}{tag}")).collect();
    Ok(u.rename_params(&names))
}

fn kron(a: &UnitaryExprMatrix, b: &UnitaryExprMatrix) -> UnitaryExprMatrix {
    a.kron_sym(b)
}

fn mul(a: &UnitaryExprMatrix, b: &UnitaryExprMatrix) -> Result<UnitaryExprMatrix> {
    Ok(a.matmul_sym(b)?)
}

/// The gate expressions timed by the expression suite, by label.
pub fn expressions(lib: &GateLibrary) -> Result<Vec<(String, UnitaryExprMatrix)>> {
    let mut tag = 0;
    let mut g = |name: &str| {
        tag += 1;
        fresh(lib, name, tag)
    };
    let mut out = vec![("U3".to_string(), g("U3")?), ("CX".to_string(), g("CX")?)];
    out.push(("U3⊗U3".into(), kron(&g("U3")?, &g("U3")?)));
    let block = |g: &mut dyn FnMut(&str) -> Result<UnitaryExprMatrix>| -> Result<UnitaryExprMatrix> {
        let pair = kron(&g("U3")?, &g("U3")?);
        mul(&g("CX")?, &pair)
    };
    out.push(("CX·(U3⊗U3)".into(), block(&mut g)?));
    let mut deep = kron(&g("U3")?, &g("U3")?);
    for _ in 0..3 {
        deep = mul(&deep, &block(&mut g)?)?;
    }
    out.push(("(U3⊗U3)·(CX·(U3⊗U3))³".into(), deep));
    let triple = kron(&kron(&g("U3")?, &g("U3")?), &g("U3")?);
    out.push(("CCX·(U3⊗U3⊗U3)".into(), mul(&g("CCX")?, &triple)?));
    out.push(("Phase3".into(), g("Phase3")?));
    out.push(("CSUM".into(), g("CSUM")?));
    let pp = kron(&g("Phase3")?, &g("Phase3")?);
    out.push(("CSUM·(Phase3⊗Phase3)".into(), mul(&g("CSUM")?, &pp)?));
    Ok(out)
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

fn expr_suite(lib: &GateLibrary, iters: usize) -> Result<()> {
    let t = Instant::now();
    let exprs = expressions(lib)?;
    let parse = seconds(t) / exprs.len() as f64;
    let s = Simplifier::default();
    for (label, u) in exprs {
        let t = Instant::now();
        let grads = u.differentiate();
        let differentiate = seconds(t);

        let mats: Vec<&UnitaryExprMatrix> = std::iter::once(&u).chain(&grads).collect();
        let t = Instant::now();
        let mut g = EGraph::new();
        let roots: Vec<_> = mats
            .iter()
            .flat_map(|m| m.elements().iter().flat_map(|e| [e.re.clone(), e.im.clone()]))
            .map(|e| g.add_expr(&e))
            .collect();
        let report = saturate(&mut g, &s.rules, &s.limits);
        let saturate_s = seconds(t);

        let t = Instant::now();
        let mut x = Extractor::new(&g, s.costs.clone());
        let simplified: Vec<_> = roots.iter().map(|&r| x.extract_shared(r).expect("finite extraction")).collect();
        let extract = seconds(t);

        let per = 2 * u.elements().len();
        let rebuild = |m: &UnitaryExprMatrix, chunk: &[qudit_core::ScalarExpr]| {
            m.with_elements(chunk.chunks(2).map(|p| ComplexExpr::new(p[0].clone(), p[1].clone())).collect())
        };
        let mut chunks = simplified.chunks(per);
        let su = rebuild(&u, chunks.next().unwrap());
        let sg: Vec<_> = grads.iter().zip(chunks).map(|(g, c)| rebuild(g, c)).collect();

        let t = Instant::now();
        let gk = sg.iter().map(|g| compile_with(g, BufferInit::Zero)).collect();
        let entry = ModuleEntry { dim: u.dim(), num_params: u.num_params(), unitary: compile_kernel(&su), gradients: gk };
        let codegen = seconds(t);

        let module = ExpressionModule::<f64>::from_entries(vec![entry]);
        let (unitary_ns, gradient_ns) = time_kernels(&module, 0, iters);
        out!(
            "{}",
            json!({
                "suite": "expr", "name": label, "params": u.num_params(), "dim": u.dim(),
                "parse_s": parse, "differentiate_s": differentiate, "saturate_s": saturate_s,
                "extract_s": extract, "codegen_s": codegen, "egraph_nodes": report.nodes,
                "stop": report.stop_reason.to_string(),
                "unitary_ns": unitary_ns, "gradient_ns": gradient_ns,
            })
        );
    }
    Ok(())
}

fn circuit_suite(iters: usize) -> Result<()> {
    for variant in [Brickwall::Thin, Brickwall::Thick] {
        for n in 3..=5 {
            let c = brickwall(variant, n);
            let t = Instant::now();
            let out = compile(&c, &CompileOptions::default())?;
            let compile_s = seconds(t);
            let p: Vec<f64> = (0..c.num_params()).map(|k| 0.1 + 0.37 * k as f64).collect();
            let mut vm = Qvm64::from_compiled(&out, true);
            let unitary_ns = time_ns(iters, || {
                std::hint::black_box(vm.run_unitary(&p).ok());
            });
            let gradient_ns = time_ns(iters, || {
                std::hint::black_box(vm.run_unitary_and_grad(&p).ok());
            });
            out!(
                "{}",
                json!({
                    "suite": "circuit", "name": format!("{variant:?} brickwall").to_lowercase(), "qubits": n,
                    "params": c.num_params(), "compile_s": compile_s,
                    "unitary_ns": unitary_ns, "unitary_and_grad_ns": gradient_ns,
                })
            );
        }
    }
    Ok(())
}

fn qft_suite() {
    let mut n = 8;
    while n <= 1024 {
        let t = Instant::now();
        let c = qft(n);
        let s = seconds(t);
        out!("{}", json!({"suite": "qft-build", "qubits": n, "gates": c.num_instructions(), "build_s": s}));
        n *= 2;
    }
}
