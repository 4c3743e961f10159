//! Benchmark circuit families.

use std::f64::consts::PI;

use super::{Circuit, GateOrigin, Instruction, ParamBinding};
use crate::gates::GateLibrary;

fn library_gate(c: &mut Circuit, lib: &GateLibrary, name: &str) -> usize {
    let u = lib.get(name).unwrap_or_else(|| panic!("library has no {name}"));
    c.intern_gate_with(u, GateOrigin::Library(name.to_string()))
}

/// The quantum Fourier transform on `n` qubits, qubit 0 most significant:
/// a Hadamard and controlled phases per qubit, then the reversing swaps.
pub fn qft(n: usize) -> Circuit {
    let lib = GateLibrary::standard();
    let mut c = Circuit::qubits(n);
    let h = library_gate(&mut c, &lib, "H");
    let cp = if n > 1 { library_gate(&mut c, &lib, "CP") } else { 0 };
    let swap = if n > 1 { library_gate(&mut c, &lib, "SWAP") } else { 0 };
    let push = |c: &mut Circuit, g: usize, qudits: Vec<usize>, params: Vec<ParamBinding>| {
        c.append(Instruction::gate(g, qudits, params)).expect("valid qft gate");
    };
    for i in 0..n {
        push(&mut c, h, vec![i], vec![]);
        for j in i + 1..n {
            let angle = 2.0 * PI / f64::powi(2.0, (j - i + 1) as i32);
            push(&mut c, cp, vec![j, i], vec![ParamBinding::Const(angle)]);
        }
    }
    for i in 0..n / 2 {
        push(&mut c, swap, vec![i, n - 1 - i], vec![]);
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Brickwall {
    /// One CNOT-U3-U3 block per pair and layer.
    Thin,
    /// Three blocks per pair and layer.
    Thick,
}

impl std::str::FromStr for Brickwall {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "thin" => Ok(Brickwall::Thin),
            "thick" => Ok(Brickwall::Thick),
            _ => Err(format!("unknown brickwall variant `{s}` (expected thin or thick)")),
        }
    }
}

/// A square brickwall on `n` qubits: a U3 on every qubit, then `n` ladder
/// layers of CNOT blocks over consecutive pairs. Every U3 gets fresh
/// parameters.
pub fn brickwall(variant: Brickwall, n: usize) -> Circuit {
    let lib = GateLibrary::standard();
    let mut c = Circuit::qubits(n);
    let u3 = library_gate(&mut c, &lib, "U3");
    let cx = library_gate(&mut c, &lib, "CNOT");
    let mut next = 0;
    let mut add_u3 = |c: &mut Circuit, q: usize| {
        let params = (next..next + 3).map(ParamBinding::Var).collect();
        next += 3;
        c.append(Instruction::gate(u3, vec![q], params)).expect("valid u3");
    };
    for q in 0..n {
        add_u3(&mut c, q);
    }
    let reps = match variant {
        Brickwall::Thin => 1,
        Brickwall::Thick => 3,
    };
    for _ in 0..n {
        for q in 0..n.saturating_sub(1) {
            for _ in 0..reps {
                c.append(Instruction::gate(cx, vec![q, q + 1], vec![])).expect("valid cnot");
                add_u3(&mut c, q);
                add_u3(&mut c, q + 1);
            }
        }
    }
    c
}
