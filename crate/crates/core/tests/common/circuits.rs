//! Random circuits over qubits and qutrits.

use qudit_core::gates::GateLibrary;
use qudit_core::qcir::{Circuit, ParamBinding};
use qudit_core::UnitaryExprMatrix;
use rand::Rng;

const EXTRA: &str = r#"
utry X3<3>() {
  [
    [0, 0, 1],
    [1, 0, 0],
    [0, 1, 0],
  ]
}

utry CX3<2, 3>() {
  [
    [1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1],
    [0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1, 0],
  ]
}

utry CPh<3, 2>(θ) {
  [
    [1, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 0, e^(i*θ), 0, 0],
    [0, 0, 0, 0, 1, 0],
    [0, 0, 0, 0, 0, e^(i*2*θ)],
  ]
}
"#;

pub fn library() -> GateLibrary {
    let mut lib = GateLibrary::standard();
    lib.extend_from_source(EXTRA).expect("extra gates parse");
    lib
}

/// Gates acting on exactly `radices`, by name.
fn candidates(radices: &[usize]) -> &'static [&'static str] {
    match radices {
        [2] => &["U3", "RZ", "H", "RX", "T"],
        [3] => &["Phase3", "X3"],
        [2, 2] => &["CNOT", "RZZ", "CP", "CZ"],
        [3, 3] => &["CSUM"],
        [2, 3] => &["CX3"],
        [3, 2] => &["CPh"],
        _ => &[],
    }
}

/// A random unitary-only circuit: up to `max_qudits` qudits of radix 2 or
/// 3 (only qubits unless `qutrits`), up to `max_gates` gates. Parameters are
/// mostly fresh, sometimes shared with an earlier gate, sometimes constant.
pub fn random_circuit(rng: &mut impl Rng, max_qudits: usize, max_gates: usize, qutrits: bool) -> Circuit {
    let lib = library();
    let n = rng.gen_range(1..=max_qudits);
    let radices: Vec<usize> = (0..n).map(|_| if qutrits && rng.gen_bool(0.4) { 3 } else { 2 }).collect();
    let mut c = Circuit::new(radices.clone());
    let gates = rng.gen_range(1..=max_gates);
    let mut next_var = 0usize;
    for _ in 0..gates {
        let qudits: Vec<usize> = if n >= 2 && rng.gen_bool(0.4) {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            vec![a, b]
        } else {
            vec![rng.gen_range(0..n)]
        };
        let rs: Vec<usize> = qudits.iter().map(|&q| radices[q]).collect();
        let names = candidates(&rs);
        let g: &UnitaryExprMatrix = lib.get(names[rng.gen_range(0..names.len())]).unwrap();
        let params = (0..g.num_params())
            .map(|_| {
                let roll: f64 = rng.gen();
                if roll < 0.15 {
                    ParamBinding::Const(rng.gen_range(-3.0..3.0))
                } else if roll < 0.3 && next_var > 0 {
                    ParamBinding::Var(rng.gen_range(0..next_var))
                } else {
                    next_var += 1;
                    ParamBinding::Var(next_var - 1)
                }
            })
            .collect();
        c.append_gate(g, &qudits, params).unwrap();
    }
    c
}
