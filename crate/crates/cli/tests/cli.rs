use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qudit")).args(args).output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const RX_PI: &str = "utry RXpi(t) {\n  [\n    [cos(π*t/2), ~i*sin(π*t/2)],\n    [~i*sin(π*t/2), cos(π*t/2)],\n  ]\n}\n";

fn pairs(v: &Value) -> Vec<(f64, f64)> {
    v.as_array()
        .unwrap()
        .iter()
        .flat_map(|row| row.as_array().unwrap().iter().map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap())))
        .collect()
}

#[test]
fn usage_errors_exit_with_three() {
    assert_eq!(qudit(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(qudit(&["parse", "x.qgl", "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(qudit(&["circuit", "brickwall", "medium", "3"]).status.code(), Some(3));
    assert_eq!(qudit(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_prints_definitions_back() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "g.qgl", RX_PI);
    let o = qudit(&["parse", &f]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), RX_PI);
    let m = qudit(&["parse", &f, "--dump-matrix"]);
    assert!(m.status.success());
    let bad = write(dir.path(), "bad.qgl", "utry Bad(x) { [[1, 0], [0, y]] }");
    let o = qudit(&["parse", &bad]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn check_modes_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let u2 = write(dir.path(), "u2.qgl", "utry A(φ, λ) {\n  [[1, ~e^(i*λ)], [e^(i*φ), e^(i*(φ+λ))]] / sqrt(2)\n}\n");
    let u3 = write(
        dir.path(),
        "u3.qgl",
        "utry B(φ, λ) {\n  [[cos(π/4), ~e^(i*λ)*sin(π/4)], [e^(i*φ)*sin(π/4), e^(i*(φ+λ))*cos(π/4)]]\n}\n",
    );
    let o = qudit(&["check", "--mode", "equal", &u2, &u3]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let o = qudit(&["check", "--mode", "phase", "RZ", "U1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("phase := "));

    assert_eq!(qudit(&["check", "--mode", "equal", "RZ", "U1"]).status.code(), Some(1));
    assert_eq!(qudit(&["check", "--mode", "phase", "RX", "RY"]).status.code(), Some(1));

    let rx = write(dir.path(), "rxpi.qgl", RX_PI);
    let o = qudit(&["check", "--mode", "congruent", "RX", &rx, "--budget", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("t := θ/π"), "{text}");
    assert!(text.contains("phase := "));
}

#[test]
fn incomplete_search_exits_with_two() {
    // No reparametrisation of U1 reaches a Hadamard, and a zero budget
    // stops the search before it can say so.
    let o = qudit(&["check", "--mode", "congruent", "H", "U1", "--budget", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn generators_emit_circuit_json() {
    let o = qudit(&["circuit", "qft", "3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["gates"].as_array().unwrap().len(), 7);
    let o = qudit(&["circuit", "brickwall", "thick", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["gates"].as_array().unwrap().len(), 57);
    assert_eq!(qudit(&["circuit", "qft", "0"]).status.code(), Some(1));
}

#[test]
fn compile_then_eval_equals_one_shot_eval() {
    let dir = tempfile::tempdir().unwrap();
    let circ = dir.path().join("bw.json");
    let art = dir.path().join("bw.art.json");
    let (circ, art) = (circ.to_str().unwrap(), art.to_str().unwrap());
    assert!(qudit(&["circuit", "brickwall", "thin", "2", "-o", circ]).status.success());
    let o = qudit(&["compile", circ, "--dump-bytecode", "--dump-tree", "-o", art]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("STATIC:") && text.contains("DYNAMIC:") && text.contains("WRITE k"));

    let params: Vec<String> = (0..18).map(|k| format!("{}", 0.1 * k as f64 - 1.0)).collect();
    let csv = params.join(",");
    let pfile = write(dir.path(), "p.txt", &params.join("\n"));
    let a = qudit(&["eval", circ, "--params", &csv]);
    let b = qudit(&["eval", art, "--params", &pfile]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let unfused = qudit(&["eval", circ, "--params", &csv, "--no-fuse"]);
    let (x, y): (Value, Value) = (serde_json::from_str(&stdout(&a)).unwrap(), serde_json::from_str(&stdout(&unfused)).unwrap());
    for ((p, q), (r, s)) in pairs(&x).into_iter().zip(pairs(&y)) {
        assert!((p - r).abs() <= 1e-12 && (q - s).abs() <= 1e-12);
    }

    let g = qudit(&["eval", art, "--params", &csv, "--grad", "--precision", "32"]);
    assert!(g.status.success());
    let v: Value = serde_json::from_str(&stdout(&g)).unwrap();
    assert_eq!(v["gradients"].as_array().unwrap().len(), 18);
    assert_eq!(pairs(&v["unitary"]).len(), 16);

    let b = qudit(&["eval", circ, "--params", &csv, "--repeat", "20", "--bench"]);
    let v: Value = serde_json::from_str(&stdout(&b)).unwrap();
    assert!(v["mean_ns"].as_f64().unwrap() > 0.0);

    assert_eq!(qudit(&["eval", circ, "--params", "1,2"]).status.code(), Some(1));
}

#[test]
fn prelude_extends_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let prelude = write(dir.path(), "extra.qgl", RX_PI);
    let circ = write(
        dir.path(),
        "c.json",
        r#"{"radices": [2], "gates": [{"utry": "RXpi", "loc": [0], "params": [{"const": 1.0}]}]}"#,
    );
    assert_eq!(qudit(&["eval", &circ]).status.code(), Some(1));
    let o = qudit(&["--prelude", &prelude, "eval", &circ]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // RX(π) = -iX.
    let z = pairs(&v);
    assert!(z[0].0.abs() < 1e-12 && (z[1].1 + 1.0).abs() < 1e-12);
}

#[test]
fn kernels_dump_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "g.qgl", RX_PI);
    let o = qudit(&["kernels", "dump", &f]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("unitary RXpi:") && text.contains("gradient RXpi / t:"));
    let o = qudit(&["kernels", "bench", &f, "--iters", "50", "--precision", "32"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["precision"], 32);
}

#[test]
fn simplify_and_diff_run() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "g.qgl", "utry S2(x) {\n  [[sin(x)^2 + cos(x)^2, 0], [0, 1]]\n}\n");
    let o = qudit(&["simplify", &f]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("[1, 0]"), "{}", stdout(&o));
    let o = qudit(&["diff", &f]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("dS2/dx"));
}

#[test]
fn qft_build_bench_reports_every_size() {
    let o = qudit(&["bench", "qft-build"]);
    assert!(o.status.success());
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let sizes: Vec<u64> = lines.iter().map(|v| v["qubits"].as_u64().unwrap()).collect();
    assert_eq!(sizes, vec![8, 16, 32, 64, 128, 256, 512, 1024]);
}
