mod common;

use std::collections::HashMap;
use std::f64::consts::PI;

use common::{c, max_diff, random_params, rng};
use num_complex::Complex64;
use qudit_core::frontend::compile_unitary;
use qudit_core::gates::GateLibrary;
use qudit_core::qcir::generators::{brickwall, qft, Brickwall};
use qudit_core::qcir::*;
use qudit_core::Matrix;

fn g(name: &str) -> qudit_core::UnitaryExprMatrix {
    GateLibrary::std_gate(name)
}

fn vars(range: std::ops::Range<usize>) -> Vec<ParamBinding> {
    range.map(ParamBinding::Var).collect()
}

/// Whether `seq` lists each instruction once and every instruction comes
/// after all earlier-appended instructions sharing a wire.
fn is_topological(circ: &Circuit, seq: &[InstrRef]) -> bool {
    let order = circ.append_order();
    let pos: HashMap<InstrRef, usize> = seq.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    if pos.len() != order.len() || seq.len() != order.len() {
        return false;
    }
    for (i, a) in order.iter().enumerate() {
        for b in &order[i + 1..] {
            let wa: Vec<Wire> = circ.instruction(*a).wires().collect();
            if circ.instruction(*b).wires().any(|w| wa.contains(&w)) && pos[a] > pos[b] {
                return false;
            }
        }
    }
    true
}

#[test]
fn append_packs_cycles_early() {
    let mut circ = Circuit::qubits(2);
    let h = circ.append_gate(&g("H"), &[0], vec![]).unwrap();
    let x = circ.append_gate(&g("X"), &[1], vec![]).unwrap();
    assert_eq!((h.cycle, x.cycle), (0, 0));
    let cx = circ.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    assert_eq!(cx.cycle, 1);
    assert_eq!(circ.cycles().len(), 2);
    assert_eq!(circ.successor(h, Wire::Qudit(0)), Some(cx));
    assert_eq!(circ.predecessor(cx, Wire::Qudit(1)), Some(x));
    assert_eq!(circ.successor(cx, Wire::Qudit(1)), None);
    circ.validate().unwrap();
}

#[test]
fn append_rejects_bad_operands() {
    let mut circ = Circuit::qubits(2);
    assert!(matches!(circ.append_gate(&g("CNOT"), &[0, 0], vec![]), Err(CircuitError::DuplicateOperand(0))));
    assert!(matches!(circ.append_gate(&g("H"), &[2], vec![]), Err(CircuitError::QuditOutOfRange(2))));
    assert!(matches!(circ.append_gate(&g("U3"), &[0], vars(0..2)), Err(CircuitError::ParamCount { .. })));
    let mut qutrit = Circuit::new(vec![3, 2]);
    assert!(matches!(qutrit.append_gate(&g("P3"), &[1], vars(0..2)), Err(CircuitError::RadixMismatch { .. })));
    assert!(qutrit.append_gate(&g("P3"), &[0], vars(0..2)).is_ok());
    assert_eq!(qutrit.num_params(), 2);
    assert!(circ.is_empty());
}

#[test]
fn gate_set_interns_by_expression() {
    let mut circ = Circuit::qubits(1);
    let a = circ.intern_gate(&g("U3"));
    let b = circ.intern_gate(&g("U3"));
    assert_eq!(a, b);
    let renamed = compile_unitary(
        "utry Other(a, b, c) { [[cos(a/2), ~e^(i*c)*sin(a/2)], [e^(i*b)*sin(a/2), e^(i*(b+c))*cos(a/2)]] }",
    )
    .unwrap();
    assert_eq!(circ.intern_gate(&renamed), a);
    assert_eq!(circ.intern_gate(&g("CNOT")), 1);
    assert_eq!(circ.intern_gate(&g("CX")), 1);
    assert_eq!(circ.gate_set().len(), 2);
}

#[test]
fn gate_set_uses_equality_checks_beyond_structure() {
    let mut set = GateSet::default();
    let rz = set.intern(&g("RZ"), GateOrigin::Inline(None));
    // Same matrix, written with products of exponentials.
    let alt = compile_unitary("utry RZ2(t) { [[e^(~i*t/4)*e^(~i*t/4), 0], [0, e^(i*t/4)*e^(i*t/4)]] }").unwrap();
    assert_eq!(set.intern(&alt, GateOrigin::Inline(None)), rz);
    // Congruent but not equal: kept apart, reported as congruent.
    let u1 = g("U1");
    let u1_idx = set.intern(&u1, GateOrigin::Inline(None));
    assert_ne!(u1_idx, rz);
    assert_eq!(set.congruent_entry(&u1).map(|e| e.0), Some(rz));
}

#[test]
fn iter_dag_is_topological() {
    let circ = brickwall(Brickwall::Thin, 3);
    let seq: Vec<InstrRef> = circ.iter_dag().collect();
    assert!(is_topological(&circ, &seq));
    // Each CNOT comes after the U3s feeding it on both wires.
    for (i, r) in seq.iter().enumerate() {
        let instr = circ.instruction(*r);
        if instr.qudits.len() == 2 {
            for &q in &instr.qudits {
                if let Some(p) = circ.predecessor(*r, Wire::Qudit(q)) {
                    assert!(seq[..i].contains(&p));
                }
            }
        }
    }

    let mut single = Circuit::qubits(1);
    single.append_gate(&g("H"), &[0], vec![]).unwrap();
    assert_eq!(single.iter_dag().count(), 1);
}

#[test]
fn reversed_appends_stay_topological() {
    let fwd = brickwall(Brickwall::Thick, 3);
    let mut rev = Circuit::qubits(3);
    for gate in fwd.gate_set().iter() {
        rev.intern_gate(gate);
    }
    for r in fwd.append_order().iter().rev() {
        rev.append(fwd.instruction(*r).clone()).unwrap();
    }
    rev.validate().unwrap();
    let seq: Vec<InstrRef> = rev.iter_dag().collect();
    assert!(is_topological(&rev, &seq));
}

#[test]
fn oracle_cnot_orientations() {
    let mut circ = Circuit::qubits(2);
    circ.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    let u = to_unitary_oracle(&circ, &[]).unwrap();
    let cnot = Matrix::from_fn(4, 4, |r, c| {
        let to = if r >= 2 { r ^ 1 } else { r };
        if to == c { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    assert_eq!(max_diff(&u, &cnot), 0.0);

    // Control on qudit 1, target on qudit 0: |q0 q1> -> |q0^q1, q1>.
    let mut flipped = Circuit::qubits(2);
    flipped.append_gate(&g("CNOT"), &[1, 0], vec![]).unwrap();
    let u = to_unitary_oracle(&flipped, &[]).unwrap();
    let perm = |s: usize| {
        let (q0, q1) = (s >> 1, s & 1);
        ((q0 ^ q1) << 1) | q1
    };
    let want = Matrix::from_fn(4, 4, |r, col| if perm(col) == r { c(1.0, 0.0) } else { c(0.0, 0.0) });
    assert_eq!(max_diff(&u, &want), 0.0);
}

#[test]
fn oracle_is_unitary_on_brickwalls() {
    let mut r = rng(7);
    for (variant, n) in [(Brickwall::Thin, 2), (Brickwall::Thin, 3), (Brickwall::Thick, 3)] {
        let circ = brickwall(variant, n);
        let p = random_params(&mut r, circ.num_params());
        let u = to_unitary_oracle(&circ, &p).unwrap();
        assert!(u.unitarity_error() <= 1e-10, "{variant:?} {n}");
    }
}

#[test]
fn oracle_rejects_measurement() {
    let mut circ = Circuit::with_clbits(vec![2], 1);
    circ.append(Instruction { op: Operation::Measure, qudits: vec![0], clbits: vec![0] }).unwrap();
    assert!(matches!(to_unitary_oracle(&circ, &[]), Err(CircuitError::NonUnitary(_))));
}

#[test]
fn oracle_invariant_under_commuting_reorder() {
    let lib_h = g("H");
    let lib_u3 = g("U3");
    let mut a = Circuit::qubits(3);
    let mut b = Circuit::qubits(3);
    a.append_gate(&lib_u3, &[0], vars(0..3)).unwrap();
    a.append_gate(&lib_h, &[2], vec![]).unwrap();
    a.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    b.append_gate(&lib_h, &[2], vec![]).unwrap();
    b.append_gate(&lib_u3, &[0], vars(0..3)).unwrap();
    b.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    let p = random_params(&mut rng(3), 3);
    let d = max_diff(&to_unitary_oracle(&a, &p).unwrap(), &to_unitary_oracle(&b, &p).unwrap());
    assert!(d <= 1e-12);
}

#[test]
fn extend_matches_kron_with_identity() {
    let u3 = g("U3").eval_numeric(&[0.3, 1.1, -0.4]).unwrap();
    let i2 = Matrix::<f64>::identity(2);
    let e = extend_gate(&u3, &[2, 2], &[1]);
    assert!(max_diff(&e, &i2.kron(&u3)) == 0.0);
    let e = extend_gate(&u3, &[3, 2], &[1]);
    assert!(max_diff(&e, &Matrix::<f64>::identity(3).kron(&u3)) == 0.0);
}

#[test]
fn partition_thin_brickwall_into_cnot_blocks() {
    let circ = brickwall(Brickwall::Thin, 3);
    let parts = partition(&circ, 2).unwrap();
    parts.validate().unwrap();
    assert_eq!(parts.num_instructions(), 6);
    for (i, &r) in parts.append_order().iter().enumerate() {
        let Operation::Subcircuit { circuit, .. } = &parts.instruction(r).op else { panic!("expected a block") };
        let sizes: Vec<usize> =
            circuit.append_order().iter().map(|&s| circuit.instruction(s).qudits.len()).collect();
        // The first block also takes the leading U3s of both its qubits,
        // the second the leading U3 of qubit 2.
        let want = match i {
            0 => vec![1, 1, 2, 1, 1],
            1 => vec![1, 2, 1, 1],
            _ => vec![2, 1, 1],
        };
        assert_eq!(sizes, want, "block {i}");
    }
    assert_eq!(partition(&brickwall(Brickwall::Thin, 4), 2).unwrap().num_instructions(), 12);
}

#[test]
fn partition_at_full_width_is_one_block() {
    for circ in [brickwall(Brickwall::Thin, 3), qft(4)] {
        let parts = partition(&circ, circ.num_qudits()).unwrap();
        assert_eq!(parts.num_instructions(), 1);
    }
}

#[test]
fn partition_then_flatten_preserves_unitary() {
    let mut r = rng(11);
    for (circ, max) in [
        (brickwall(Brickwall::Thin, 3), 2),
        (brickwall(Brickwall::Thick, 3), 2),
        (brickwall(Brickwall::Thin, 4), 3),
        (qft(4), 2),
        (qft(4), 3),
    ] {
        let p = random_params(&mut r, circ.num_params());
        let want = to_unitary_oracle(&circ, &p).unwrap();
        let parts = partition(&circ, max).unwrap();
        assert!(max_diff(&to_unitary_oracle(&parts, &p).unwrap(), &want) <= 1e-12);
        let flat = parts.flatten();
        flat.validate().unwrap();
        assert_eq!(flat.num_instructions(), circ.num_instructions());
        assert!(max_diff(&to_unitary_oracle(&flat, &p).unwrap(), &want) <= 1e-12);
    }
}

#[test]
fn partition_rejects_oversized_gates() {
    let mut circ = Circuit::qubits(3);
    circ.append_gate(&g("CCX"), &[0, 1, 2], vec![]).unwrap();
    assert!(matches!(partition(&circ, 2), Err(CircuitError::OversizedGate { size: 3, max: 2 })));
}

#[test]
fn partition_passes_measurements_through() {
    let mut circ = Circuit::with_clbits(vec![2, 2], 1);
    circ.append_gate(&g("H"), &[0], vec![]).unwrap();
    circ.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    circ.append(Instruction { op: Operation::Measure, qudits: vec![1], clbits: vec![0] }).unwrap();
    circ.append_gate(&g("X"), &[1], vec![]).unwrap();
    let parts = partition(&circ, 2).unwrap();
    let kinds: Vec<&str> = parts
        .append_order()
        .iter()
        .map(|&r| match parts.instruction(r).op {
            Operation::Subcircuit { .. } => "block",
            Operation::Measure => "measure",
            _ => "other",
        })
        .collect();
    assert_eq!(kinds, ["block", "measure", "block"]);
}

#[test]
fn qft_gate_counts() {
    for (n, want) in [(1, 1), (2, 4), (3, 7), (5, 5 + 10 + 2)] {
        assert_eq!(qft(n).num_instructions(), want);
        assert_eq!(want, n + n * (n - 1) / 2 + n / 2);
    }
}

#[test]
fn qft2_is_the_dft() {
    let u = to_unitary_oracle(&qft(2), &[]).unwrap();
    let dft = Matrix::from_fn(4, 4, |j, k| Complex64::from_polar(0.5, 2.0 * PI * (j * k) as f64 / 4.0));
    assert!(max_diff(&u, &dft) <= 1e-12);
    let u = to_unitary_oracle(&qft(3), &[]).unwrap();
    let dft = Matrix::from_fn(8, 8, |j, k| Complex64::from_polar(8f64.sqrt().recip(), 2.0 * PI * (j * k) as f64 / 8.0));
    assert!(max_diff(&u, &dft) <= 1e-12);
}

#[test]
fn brickwall_gate_counts() {
    assert_eq!(brickwall(Brickwall::Thin, 3).num_instructions(), 21);
    assert_eq!(brickwall(Brickwall::Thick, 3).num_instructions(), 57);
    assert_eq!(brickwall(Brickwall::Thin, 3).num_params(), 3 * (3 + 12));
    assert_eq!(brickwall(Brickwall::Thin, 3).gate_set().len(), 2);
}

#[test]
fn json_round_trip_is_textually_exact() {
    let lib = GateLibrary::standard();
    for circ in [qft(3), brickwall(Brickwall::Thick, 3)] {
        let text = circuit_to_json(&circ);
        let back = circuit_from_json(&text, &lib).unwrap();
        assert_eq!(circuit_to_json(&back), text);
        let p = random_params(&mut rng(5), circ.num_params());
        let d = max_diff(&to_unitary_oracle(&circ, &p).unwrap(), &to_unitary_oracle(&back, &p).unwrap());
        assert_eq!(d, 0.0);
    }
}

#[test]
fn json_keeps_aliases_defs_and_classical_ops() {
    let text = r#"{
  "radices": [2, 2],
  "clbits": 1,
  "gates": [
    {"utry": "CX", "loc": [0, 1]},
    {"utry": "CNOT", "loc": [1, 0]},
    {"utry": "Mine", "loc": [0], "params": [{"var": 0}]},
    {"utry": "utry Inl(t) {\n  [[1, 0], [0, e^(i*t)]]\n}", "loc": [1], "params": [{"const": 0.25}]},
    {"op": "measure", "loc": [0], "clbits": [0]},
    {"utry": "X", "loc": [1], "if": {"clbit": 0, "value": 1}},
    {"op": "reset", "loc": [0]}
  ],
  "defs": {"Mine": "utry Mine(a) { [[cos(a), ~sin(a)], [sin(a), cos(a)]] }"}
}"#;
    let lib = GateLibrary::standard();
    let circ = circuit_from_json(text, &lib).unwrap();
    // CX and CNOT, and the inline phase and U1, share gate-set entries.
    assert_eq!(circ.gate_set().len(), 4);
    assert_eq!(circ.num_params(), 1);
    let out = circuit_to_json(&circ);
    let again = circuit_from_json(&out, &lib).unwrap();
    assert_eq!(circuit_to_json(&again), out);
    let normalize = |s: &str| s.split_whitespace().collect::<String>();
    let value: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(value["gates"][0]["utry"], "CX");
    assert_eq!(value["gates"][1]["utry"], "CNOT");
    assert_eq!(value["gates"][5]["if"]["value"], 1);
    assert!(normalize(&out).contains(&normalize(r#""defs":{"Mine":"#)));
}

#[test]
fn json_errors() {
    let lib = GateLibrary::standard();
    assert!(circuit_from_json("{", &lib).is_err());
    let unknown = r#"{"radices":[2],"gates":[{"utry":"Nope","loc":[0]}]}"#;
    assert!(matches!(circuit_from_json(unknown, &lib), Err(CircuitError::Json(_))));
    let bad_loc = r#"{"radices":[2],"gates":[{"utry":"H","loc":[3]}]}"#;
    assert!(matches!(circuit_from_json(bad_loc, &lib), Err(CircuitError::QuditOutOfRange(3))));
}

#[test]
fn flatten_nested_subcircuits_rebinds_params() {
    let mut inner = Circuit::qubits(1);
    inner.append_gate(&g("U3"), &[0], vars(0..3)).unwrap();
    let inner = std::sync::Arc::new(inner);
    let mut outer = Circuit::qubits(2);
    let params = vec![ParamBinding::Var(2), ParamBinding::Const(0.5), ParamBinding::Var(0)];
    outer
        .append(Instruction { op: Operation::Subcircuit { circuit: inner.clone(), params }, qudits: vec![1], clbits: vec![] })
        .unwrap();
    assert_eq!(outer.num_params(), 3);
    let flat = outer.flatten();
    let Operation::Gate { params, .. } = &flat.instruction(flat.append_order()[0]).op else { panic!() };
    assert_eq!(params, &vec![ParamBinding::Var(2), ParamBinding::Const(0.5), ParamBinding::Var(0)]);
    let p = [0.1, 0.2, 0.3];
    let d = max_diff(&to_unitary_oracle(&outer, &p).unwrap(), &to_unitary_oracle(&flat, &p).unwrap());
    assert_eq!(d, 0.0);
}

#[test]
fn large_qft_builds() {
    let circ = qft(128);
    assert_eq!(circ.num_instructions(), 128 + 128 * 127 / 2 + 64);
    circ.validate().unwrap();
}
