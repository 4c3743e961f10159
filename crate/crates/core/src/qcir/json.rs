use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{Circuit, CircuitError, GateOrigin, Instruction, Operation, ParamBinding};
use crate::frontend::compile_unitary;
use crate::gates::GateLibrary;
use crate::symexpr::UnitaryExprMatrix;

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    radices: Vec<usize>,
    #[serde(default)]
    clbits: usize,
    gates: Vec<GateJson>,
    #[serde(default)]
    defs: IndexMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct GateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subcircuit: Option<Box<CircuitJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    op: Option<String>,
    loc: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    clbits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<ParamBinding>,
    #[serde(default, rename = "if", skip_serializing_if = "Option::is_none")]
    condition: Option<ConditionJson>,
}

#[derive(Serialize, Deserialize)]
struct ConditionJson {
    clbit: usize,
    value: u8,
}

/// Write a circuit as pretty-printed JSON.
pub fn circuit_to_json(c: &Circuit) -> String {
    serde_json::to_string_pretty(&to_json(c)).expect("circuit json serializes")
}

fn to_json(c: &Circuit) -> CircuitJson {
    let mut defs = IndexMap::new();
    let mut gates = Vec::new();
    for (i, &r) in c.append_order().iter().enumerate() {
        let instr = c.instruction(r);
        let (op, condition, clbits) = match &instr.op {
            Operation::ClassicallyControlled { op, value } => {
                (op.as_ref(), Some(ConditionJson { clbit: instr.clbits[0], value: *value }), vec![])
            }
            op => (op, None, instr.clbits.clone()),
        };
        let mut g = GateJson {
            utry: None,
            subcircuit: None,
            op: None,
            loc: instr.qudits.clone(),
            clbits,
            params: op.params().to_vec(),
            condition,
        };
        match op {
            Operation::Gate { gate, .. } => {
                let e = c.gate_set().entry(*gate);
                let origin = c.label(i).unwrap_or(&e.origin);
                if let GateOrigin::Defined { name, source } = origin {
                    defs.entry(name.clone()).or_insert_with(|| source.clone());
                }
                g.utry = Some(reference(origin, &e.expr));
            }
            Operation::Subcircuit { circuit, .. } => g.subcircuit = Some(Box::new(to_json(circuit))),
            Operation::Measure => g.op = Some("measure".into()),
            Operation::Reset => g.op = Some("reset".into()),
            Operation::ClassicallyControlled { .. } => unreachable!("nested classical control"),
        }
        gates.push(g);
    }
    // Definitions of gates no instruction uses.
    for k in 0..c.gate_set().len() {
        if let GateOrigin::Defined { name, source } = &c.gate_set().entry(k).origin {
            defs.entry(name.clone()).or_insert_with(|| source.clone());
        }
    }
    CircuitJson { radices: c.radices().to_vec(), clbits: c.num_clbits(), gates, defs }
}

/// Read a circuit. Gate references resolve against the circuit's own
/// definitions first, then `lib`; text starting with `utry` is compiled
/// in place.
pub fn circuit_from_json(text: &str, lib: &GateLibrary) -> Result<Circuit, CircuitError> {
    let j: CircuitJson = serde_json::from_str(text).map_err(|e| CircuitError::Json(e.to_string()))?;
    from_json(&j, lib)
}

fn from_json(j: &CircuitJson, lib: &GateLibrary) -> Result<Circuit, CircuitError> {
    let mut c = Circuit::with_clbits(j.radices.clone(), j.clbits);
    let mut resolved: HashMap<String, (usize, GateOrigin)> = HashMap::new();
    for g in &j.gates {
        let bad = |m: String| CircuitError::Json(m);
        let (op, label) = if let Some(reference) = &g.utry {
            let (gate, origin) = match resolved.get(reference) {
                Some(r) => r.clone(),
                None => {
                    let (u, origin) = resolve(reference, &j.defs, lib)?;
                    let gate = c.intern_gate_with(&u, origin.clone());
                    resolved.insert(reference.clone(), (gate, origin.clone()));
                    (gate, origin)
                }
            };
            let label = (c.gate_set().entry(gate).origin != origin).then_some(origin);
            (Operation::Gate { gate, params: g.params.clone() }, label)
        } else if let Some(sub) = &g.subcircuit {
            let inner = from_json(sub, lib)?;
            (Operation::Subcircuit { circuit: Arc::new(inner), params: g.params.clone() }, None)
        } else {
            match g.op.as_deref() {
                Some("measure") => (Operation::Measure, None),
                Some("reset") => (Operation::Reset, None),
                Some(other) => return Err(bad(format!("unknown op `{other}`"))),
                None => return Err(bad("instruction needs `utry`, `subcircuit`, or `op`".into())),
            }
        };
        let (op, clbits) = match &g.condition {
            Some(cond) => (Operation::ClassicallyControlled { op: Box::new(op), value: cond.value }, vec![cond.clbit]),
            None => (op, g.clbits.clone()),
        };
        c.append(Instruction { op, qudits: g.loc.clone(), clbits })?;
        if let Some(l) = label {
            c.set_last_label(l);
        }
    }
    Ok(c)
}

fn reference(origin: &GateOrigin, u: &UnitaryExprMatrix) -> String {
    match origin {
        GateOrigin::Library(name) | GateOrigin::Defined { name, .. } => name.clone(),
        GateOrigin::Inline(Some(src)) => src.clone(),
        GateOrigin::Inline(None) => u.to_string(),
    }
}

fn resolve(
    reference: &str,
    defs: &IndexMap<String, String>,
    lib: &GateLibrary,
) -> Result<(UnitaryExprMatrix, GateOrigin), CircuitError> {
    let compile = |src: &str| compile_unitary(src).map_err(|e| CircuitError::Json(format!("gate source: {e}")));
    if reference.trim_start().starts_with("utry") {
        let u = compile(reference)?;
        return Ok((u, GateOrigin::Inline(Some(reference.to_string()))));
    }
    if let Some(src) = defs.get(reference) {
        let u = compile(src)?;
        let origin = GateOrigin::Defined { name: reference.to_string(), source: src.clone() };
        return Ok((u, origin));
    }
    match lib.get(reference) {
        Some(u) => Ok((u.clone(), GateOrigin::Library(reference.to_string()))),
        None => Err(CircuitError::Json(format!("unknown gate `{reference}`"))),
    }
}
