use std::sync::Arc;

use super::{Circuit, CircuitError, Instruction, Operation, ParamBinding};

struct Block {
    // Indices into the append order.
    members: Vec<usize>,
    qudits: Vec<usize>,
    sealed: bool,
    last: usize,
    passthrough: bool,
}

/// Group gates left to right into subcircuit blocks touching at most
/// `max_qudits` qudits each.
///
/// A gate joins the open blocks that currently own its qudits when the
/// union fits; otherwise it starts a new block and closes those. Leading
/// single-qudit gates wait for the first block on their qudit. Non-unitary
/// instructions are kept as they are.
pub fn partition(c: &Circuit, max_qudits: usize) -> Result<Circuit, CircuitError> {
    let order = c.append_order();
    let mut blocks: Vec<Block> = Vec::new();
    // Latest block per qudit.
    let mut owner: Vec<Option<usize>> = vec![None; c.num_qudits()];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); c.num_qudits()];

    for (i, &r) in order.iter().enumerate() {
        let instr = c.instruction(r);
        let qs = &instr.qudits;
        if !instr.op.is_unitary() {
            for &q in qs {
                if let Some(b) = owner[q] {
                    blocks[b].sealed = true;
                }
            }
            let mut members = Vec::new();
            for &q in qs {
                members.append(&mut pending[q]);
            }
            // Pending gates ahead of it get a block of their own.
            if !members.is_empty() {
                let mut bqs: Vec<usize> = members.iter().flat_map(|&m| c.instruction(order[m]).qudits.clone()).collect();
                bqs.sort_unstable();
                bqs.dedup();
                let last = *members.iter().max().unwrap();
                blocks.push(Block { members, qudits: bqs, sealed: true, last, passthrough: false });
            }
            blocks.push(Block { members: vec![i], qudits: qs.clone(), sealed: true, last: i, passthrough: true });
            for &q in qs {
                owner[q] = Some(blocks.len() - 1);
            }
            continue;
        }
        if qs.len() > max_qudits {
            return Err(CircuitError::OversizedGate { size: qs.len(), max: max_qudits });
        }
        if qs.len() == 1 && owner[qs[0]].is_none() {
            pending[qs[0]].push(i);
            continue;
        }
        let mut owners: Vec<usize> = qs.iter().filter_map(|&q| owner[q]).collect();
        owners.sort_unstable();
        owners.dedup();
        let mut union: Vec<usize> = qs.clone();
        for &b in &owners {
            union.extend(&blocks[b].qudits);
        }
        union.sort_unstable();
        union.dedup();
        let joinable = owners.iter().all(|&b| !blocks[b].sealed) && union.len() <= max_qudits;
        let target = if joinable && !owners.is_empty() {
            // Merge every owning block into the first.
            let t = owners[0];
            for &b in &owners[1..] {
                let moved = std::mem::take(&mut blocks[b].members);
                blocks[t].members.extend(moved);
                blocks[b].sealed = true;
                for &q in &blocks[b].qudits.clone() {
                    owner[q] = Some(t);
                }
                blocks[b].qudits.clear();
            }
            blocks[t].qudits = union;
            t
        } else {
            for &b in &owners {
                blocks[b].sealed = true;
            }
            let mut qudits = qs.clone();
            qudits.sort_unstable();
            blocks.push(Block { members: vec![], qudits, sealed: false, last: i, passthrough: false });
            blocks.len() - 1
        };
        for &q in qs {
            blocks[target].members.append(&mut pending[q]);
            owner[q] = Some(target);
        }
        blocks[target].members.push(i);
        blocks[target].last = i;
    }
    // Single-qudit gates that never met a block.
    for q in 0..c.num_qudits() {
        if !pending[q].is_empty() {
            let members = std::mem::take(&mut pending[q]);
            let last = *members.last().unwrap();
            blocks.push(Block { members, qudits: vec![q], sealed: true, last, passthrough: false });
        }
    }

    blocks.retain(|b| !b.members.is_empty());
    blocks.sort_by_key(|b| b.last);

    let mut out = Circuit::with_clbits(c.radices().to_vec(), c.num_clbits());
    out.reserve_params(c.num_params());
    for b in &blocks {
        if b.passthrough {
            let instr = c.instruction(order[b.members[0]]);
            let op = copy_op(c, &instr.op, &mut out);
            out.append(Instruction { op, qudits: instr.qudits.clone(), clbits: instr.clbits.clone() })?;
            continue;
        }
        let mut members = b.members.clone();
        members.sort_unstable();
        let (sub, bindings) = block_circuit(c, &b.qudits, members.iter().map(|&m| c.instruction(order[m])))?;
        out.append(Instruction {
            op: Operation::Subcircuit { circuit: Arc::new(sub), params: bindings },
            qudits: b.qudits.clone(),
            clbits: vec![],
        })?;
    }
    Ok(out)
}

/// A circuit over `qudits` (in that order) holding `instrs`, with its own
/// parameters bound to the outer ones they use.
fn block_circuit<'a>(
    c: &Circuit,
    qudits: &[usize],
    instrs: impl Iterator<Item = &'a Instruction>,
) -> Result<(Circuit, Vec<ParamBinding>), CircuitError> {
    let radices = qudits.iter().map(|&q| c.radices()[q]).collect();
    let mut sub = Circuit::new(radices);
    let mut outer: Vec<usize> = Vec::new();
    for instr in instrs {
        let local: Vec<usize> = instr.qudits.iter().map(|q| qudits.iter().position(|x| x == q).unwrap()).collect();
        let mut rebind = |p: &ParamBinding| match *p {
            ParamBinding::Var(k) => {
                let j = outer.iter().position(|&o| o == k).unwrap_or_else(|| {
                    outer.push(k);
                    outer.len() - 1
                });
                ParamBinding::Var(j)
            }
            cst => cst,
        };
        let op = match &instr.op {
            Operation::Gate { gate, params } => {
                let e = c.gate_set().entry(*gate);
                let g = sub.intern_gate_with(&e.expr, e.origin.clone());
                Operation::Gate { gate: g, params: params.iter().map(&mut rebind).collect() }
            }
            Operation::Subcircuit { circuit, params } => {
                Operation::Subcircuit { circuit: circuit.clone(), params: params.iter().map(&mut rebind).collect() }
            }
            _ => unreachable!("blocks hold unitary instructions only"),
        };
        sub.append(Instruction { op, qudits: local, clbits: vec![] })?;
    }
    sub.reserve_params(outer.len());
    Ok((sub, outer.into_iter().map(ParamBinding::Var).collect()))
}

fn copy_op(c: &Circuit, op: &Operation, out: &mut Circuit) -> Operation {
    match op {
        Operation::Gate { gate, params } => {
            let e = c.gate_set().entry(*gate);
            Operation::Gate { gate: out.intern_gate_with(&e.expr, e.origin.clone()), params: params.clone() }
        }
        Operation::ClassicallyControlled { op, value } => {
            Operation::ClassicallyControlled { op: Box::new(copy_op(c, op, out)), value: *value }
        }
        other => other.clone(),
    }
}
