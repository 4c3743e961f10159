use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gate_set::{GateOrigin, GateSet};
use super::CircuitError;
use crate::symexpr::UnitaryExprMatrix;

/// A gate parameter: an entry of the circuit's parameter vector or a
/// fixed value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamBinding {
    Var(usize),
    Const(f64),
}

impl ParamBinding {
    #[inline]
    pub fn value(self, params: &[f64]) -> f64 {
        match self {
            ParamBinding::Var(k) => params[k],
            ParamBinding::Const(v) => v,
        }
    }

    pub fn var(self) -> Option<usize> {
        match self {
            ParamBinding::Var(k) => Some(k),
            ParamBinding::Const(_) => None,
        }
    }
}

/// Something an instruction occupies within a cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wire {
    Qudit(usize),
    Clbit(usize),
}

#[derive(Clone, Debug)]
pub enum Operation {
    /// An entry of the circuit's gate set.
    Gate { gate: usize, params: Vec<ParamBinding> },
    /// A nested circuit acting as one instruction; `params` binds the
    /// nested circuit's parameters.
    Subcircuit { circuit: Arc<Circuit>, params: Vec<ParamBinding> },
    /// Measure `qudits[0]` into `clbits[0]`.
    Measure,
    /// Reset `qudits[0]` to the zero state.
    Reset,
    /// Apply `op` when `clbits[0]` holds `value`.
    ClassicallyControlled { op: Box<Operation>, value: u8 },
}

impl Operation {
    pub fn is_unitary(&self) -> bool {
        matches!(self, Operation::Gate { .. } | Operation::Subcircuit { .. })
    }

    pub fn params(&self) -> &[ParamBinding] {
        match self {
            Operation::Gate { params, .. } | Operation::Subcircuit { params, .. } => params,
            Operation::ClassicallyControlled { op, .. } => op.params(),
            Operation::Measure | Operation::Reset => &[],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instruction {
    pub op: Operation,
    pub qudits: Vec<usize>,
    pub clbits: Vec<usize>,
}

impl Instruction {
    pub fn gate(gate: usize, qudits: Vec<usize>, params: Vec<ParamBinding>) -> Self {
        Instruction { op: Operation::Gate { gate, params }, qudits, clbits: vec![] }
    }

    pub fn wires(&self) -> impl Iterator<Item = Wire> + '_ {
        self.qudits.iter().map(|&q| Wire::Qudit(q)).chain(self.clbits.iter().map(|&c| Wire::Clbit(c)))
    }
}

/// Position of an instruction: cycle index and slot within the cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstrRef {
    pub cycle: usize,
    pub slot: usize,
}

#[derive(Clone, Debug)]
struct Slot {
    instr: Instruction,
    // Per wire, in `Instruction::wires` order.
    prev: Vec<Option<usize>>,
    next: Vec<Option<usize>>,
}

/// Instructions that run in parallel; each wire occupies at most one slot.
#[derive(Clone, Debug, Default)]
pub struct Cycle {
    slots: Vec<Slot>,
    wires: BTreeMap<Wire, usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn instructions(&self) -> impl Iterator<Item = &Instruction> {
        self.slots.iter().map(|s| &s.instr)
    }

    /// Slot holding `wire` in this cycle.
    pub fn slot_of(&self, wire: Wire) -> Option<usize> {
        self.wires.get(&wire).copied()
    }

    /// Previous and next cycle using `wire`, as seen from this cycle.
    pub fn links(&self, wire: Wire) -> Option<(Option<usize>, Option<usize>)> {
        let s = &self.slots[self.slot_of(wire)?];
        let k = s.instr.wires().position(|w| w == wire)?;
        Some((s.prev[k], s.next[k]))
    }
}

/// A cycle-structured qudit circuit with its own gate set.
#[derive(Clone, Debug)]
pub struct Circuit {
    radices: Vec<usize>,
    num_clbits: usize,
    num_params: usize,
    cycles: Vec<Cycle>,
    gate_set: GateSet,
    last_qudit: Vec<Option<usize>>,
    last_clbit: Vec<Option<usize>>,
    order: Vec<InstrRef>,
    // Per appended instruction: how its gate was referenced when read, if
    // that differs from the gate-set entry.
    labels: Vec<Option<GateOrigin>>,
}

impl Circuit {
    pub fn new(radices: Vec<usize>) -> Self {
        Self::with_clbits(radices, 0)
    }

    pub fn with_clbits(radices: Vec<usize>, num_clbits: usize) -> Self {
        Circuit {
            last_qudit: vec![None; radices.len()],
            last_clbit: vec![None; num_clbits],
            radices,
            num_clbits,
            num_params: 0,
            cycles: Vec::new(),
            gate_set: GateSet::default(),
            order: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn qubits(n: usize) -> Self {
        Self::new(vec![2; n])
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn num_qudits(&self) -> usize {
        self.radices.len()
    }

    pub fn num_clbits(&self) -> usize {
        self.num_clbits
    }

    /// Total dimension, the product of the radices.
    pub fn dim(&self) -> usize {
        self.radices.iter().product()
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Grow the parameter vector to at least `n` entries.
    pub fn reserve_params(&mut self, n: usize) {
        self.num_params = self.num_params.max(n);
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn gate_set(&self) -> &GateSet {
        &self.gate_set
    }

    pub fn num_instructions(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn instruction(&self, r: InstrRef) -> &Instruction {
        &self.cycles[r.cycle].slots[r.slot].instr
    }

    /// Instructions in the order they were appended.
    pub fn append_order(&self) -> &[InstrRef] {
        &self.order
    }

    /// Add `u` to the gate set unless an equal expression is already there.
    pub fn intern_gate(&mut self, u: &UnitaryExprMatrix) -> usize {
        self.gate_set.intern(u, GateOrigin::Inline(None))
    }

    pub fn intern_gate_with(&mut self, u: &UnitaryExprMatrix, origin: GateOrigin) -> usize {
        self.gate_set.intern(u, origin)
    }

    /// Intern `u` and append it on `qudits`.
    pub fn append_gate(
        &mut self,
        u: &UnitaryExprMatrix,
        qudits: &[usize],
        params: Vec<ParamBinding>,
    ) -> Result<InstrRef, CircuitError> {
        let g = self.intern_gate(u);
        self.append(Instruction::gate(g, qudits.to_vec(), params))
    }

    /// Place `instr` in the earliest cycle after the last use of each of its
    /// wires.
    pub fn append(&mut self, instr: Instruction) -> Result<InstrRef, CircuitError> {
        self.validate_instruction(&instr)?;
        for p in instr.op.params() {
            if let ParamBinding::Var(k) = *p {
                self.num_params = self.num_params.max(k + 1);
            }
        }
        let wires: Vec<Wire> = instr.wires().collect();
        let prev: Vec<Option<usize>> = wires.iter().map(|&w| self.last(w)).collect();
        let cycle = prev.iter().flatten().map(|c| c + 1).max().unwrap_or(0);
        if cycle == self.cycles.len() {
            self.cycles.push(Cycle::default());
        }
        for (&w, p) in wires.iter().zip(&prev) {
            if let Some(pc) = *p {
                let c = &mut self.cycles[pc];
                let s = c.wires[&w];
                let k = c.slots[s].instr.wires().position(|x| x == w).unwrap();
                c.slots[s].next[k] = Some(cycle);
            }
            *self.last_mut(w) = Some(cycle);
        }
        let c = &mut self.cycles[cycle];
        let slot = c.slots.len();
        for &w in &wires {
            c.wires.insert(w, slot);
        }
        c.slots.push(Slot { next: vec![None; wires.len()], prev, instr });
        let r = InstrRef { cycle, slot };
        self.order.push(r);
        self.labels.push(None);
        Ok(r)
    }

    fn last(&self, w: Wire) -> Option<usize> {
        match w {
            Wire::Qudit(q) => self.last_qudit[q],
            Wire::Clbit(c) => self.last_clbit[c],
        }
    }

    fn last_mut(&mut self, w: Wire) -> &mut Option<usize> {
        match w {
            Wire::Qudit(q) => &mut self.last_qudit[q],
            Wire::Clbit(c) => &mut self.last_clbit[c],
        }
    }

    fn validate_instruction(&self, instr: &Instruction) -> Result<(), CircuitError> {
        let n = self.num_qudits();
        for (i, &q) in instr.qudits.iter().enumerate() {
            if q >= n {
                return Err(CircuitError::QuditOutOfRange(q));
            }
            if instr.qudits[..i].contains(&q) {
                return Err(CircuitError::DuplicateOperand(q));
            }
        }
        for (i, &c) in instr.clbits.iter().enumerate() {
            if c >= self.num_clbits {
                return Err(CircuitError::ClbitOutOfRange(c));
            }
            if instr.clbits[..i].contains(&c) {
                return Err(CircuitError::DuplicateOperand(c));
            }
        }
        let radices: Vec<usize> = instr.qudits.iter().map(|&q| self.radices[q]).collect();
        self.validate_op(&instr.op, &radices, instr.clbits.len())
    }

    fn validate_op(&self, op: &Operation, radices: &[usize], clbits: usize) -> Result<(), CircuitError> {
        let check_params = |params: &[ParamBinding], want: usize| {
            if params.len() != want {
                return Err(CircuitError::ParamCount { expected: want, found: params.len() });
            }
            Ok(())
        };
        match op {
            Operation::Gate { gate, params } => {
                let u = self.gate_set.get(*gate).ok_or(CircuitError::UnknownGate(*gate))?;
                if u.radices() != radices {
                    return Err(CircuitError::RadixMismatch { expected: u.radices().to_vec(), found: radices.to_vec() });
                }
                if clbits != 0 {
                    return Err(CircuitError::Malformed("gates take no classical bits".into()));
                }
                check_params(params, u.num_params())
            }
            Operation::Subcircuit { circuit, params } => {
                if circuit.radices() != radices {
                    return Err(CircuitError::RadixMismatch {
                        expected: circuit.radices().to_vec(),
                        found: radices.to_vec(),
                    });
                }
                if clbits != 0 {
                    return Err(CircuitError::Malformed("subcircuits take no classical bits".into()));
                }
                check_params(params, circuit.num_params())
            }
            Operation::Measure => {
                if radices.len() != 1 || clbits != 1 {
                    return Err(CircuitError::Malformed("measure takes one qudit and one classical bit".into()));
                }
                Ok(())
            }
            Operation::Reset => {
                if radices.len() != 1 || clbits != 0 {
                    return Err(CircuitError::Malformed("reset takes one qudit".into()));
                }
                Ok(())
            }
            Operation::ClassicallyControlled { op, .. } => {
                if clbits != 1 {
                    return Err(CircuitError::Malformed("a classical condition reads one bit".into()));
                }
                if !op.is_unitary() {
                    return Err(CircuitError::Malformed("only gates and subcircuits can be controlled".into()));
                }
                self.validate_op(op, radices, 0)
            }
        }
    }

    /// Every instruction once, in a topological order: by cycle, then slot.
    pub fn iter_dag(&self) -> impl Iterator<Item = InstrRef> + '_ {
        self.cycles
            .iter()
            .enumerate()
            .flat_map(|(c, cy)| (0..cy.slots.len()).map(move |s| InstrRef { cycle: c, slot: s }))
    }

    fn neighbour(&self, r: InstrRef, wire: Wire, forward: bool) -> Option<InstrRef> {
        let s = &self.cycles[r.cycle].slots[r.slot];
        let k = s.instr.wires().position(|w| w == wire)?;
        let cycle = if forward { s.next[k] } else { s.prev[k] }?;
        Some(InstrRef { cycle, slot: self.cycles[cycle].wires[&wire] })
    }

    /// Next instruction on `wire` after `r`.
    pub fn successor(&self, r: InstrRef, wire: Wire) -> Option<InstrRef> {
        self.neighbour(r, wire, true)
    }

    /// Previous instruction on `wire` before `r`.
    pub fn predecessor(&self, r: InstrRef, wire: Wire) -> Option<InstrRef> {
        self.neighbour(r, wire, false)
    }

    /// First instruction on `wire`.
    pub fn first_on(&self, wire: Wire) -> Option<InstrRef> {
        let mut r = self.last(wire).map(|cycle| InstrRef { cycle, slot: self.cycles[cycle].wires[&wire] })?;
        while let Some(p) = self.predecessor(r, wire) {
            r = p;
        }
        Some(r)
    }

    /// Check the cycle structure: one slot per wire per cycle, operands in
    /// range, and prev/next links that chain exactly the cycles using each
    /// wire.
    pub fn validate(&self) -> Result<(), String> {
        let mut uses: BTreeMap<Wire, Vec<usize>> = BTreeMap::new();
        for (ci, cy) in self.cycles.iter().enumerate() {
            let mut seen = BTreeMap::new();
            for (si, s) in cy.slots.iter().enumerate() {
                let wires: Vec<Wire> = s.instr.wires().collect();
                if s.prev.len() != wires.len() || s.next.len() != wires.len() {
                    return Err(format!("cycle {ci} slot {si}: link arity"));
                }
                for &w in &wires {
                    if seen.insert(w, si).is_some() {
                        return Err(format!("cycle {ci}: {w:?} used twice"));
                    }
                    if cy.wires.get(&w) != Some(&si) {
                        return Err(format!("cycle {ci}: wire map disagrees for {w:?}"));
                    }
                    match w {
                        Wire::Qudit(q) if q >= self.num_qudits() => return Err(format!("qudit {q} out of range")),
                        Wire::Clbit(c) if c >= self.num_clbits => return Err(format!("clbit {c} out of range")),
                        _ => {}
                    }
                    uses.entry(w).or_default().push(ci);
                }
            }
            if seen.len() != cy.wires.len() {
                return Err(format!("cycle {ci}: stale wire map"));
            }
        }
        for (w, cycles) in &uses {
            for (i, &c) in cycles.iter().enumerate() {
                let (prev, next) = self.cycles[c].links(*w).ok_or("missing link")?;
                let want_prev = if i == 0 { None } else { Some(cycles[i - 1]) };
                let want_next = cycles.get(i + 1).copied();
                if prev != want_prev || next != want_next {
                    return Err(format!("{w:?} links at cycle {c}: {prev:?}/{next:?}"));
                }
            }
        }
        if self.order.len() != self.cycles.iter().map(Cycle::len).sum::<usize>() {
            return Err("append order out of sync".into());
        }
        Ok(())
    }

    /// Replace every subcircuit by its instructions, recursively.
    pub fn flatten(&self) -> Circuit {
        let mut out = Circuit::with_clbits(self.radices.clone(), self.num_clbits);
        out.reserve_params(self.num_params);
        let mut gate_map = vec![None; self.gate_set.len()];
        self.flatten_into(&mut out, &(0..self.num_qudits()).collect::<Vec<_>>(), None, &mut gate_map);
        out
    }

    fn flatten_into(
        &self,
        out: &mut Circuit,
        qudit_map: &[usize],
        bind: Option<&[ParamBinding]>,
        gate_map: &mut Vec<Option<usize>>,
    ) {
        let rebind = |p: &ParamBinding| match (*p, bind) {
            (ParamBinding::Var(k), Some(b)) => b[k],
            _ => *p,
        };
        for &r in &self.order {
            let instr = self.instruction(r);
            let qudits: Vec<usize> = instr.qudits.iter().map(|&q| qudit_map[q]).collect();
            match &instr.op {
                Operation::Subcircuit { circuit, params } => {
                    let inner: Vec<ParamBinding> = params.iter().map(rebind).collect();
                    let mut inner_map = vec![None; circuit.gate_set.len()];
                    circuit.flatten_into(out, &qudits, Some(&inner), &mut inner_map);
                }
                op => {
                    let op = self.remap_op(op, out, &rebind, gate_map);
                    let clbits = instr.clbits.clone();
                    out.append(Instruction { op, qudits, clbits }).expect("flattened instruction is valid");
                }
            }
        }
    }

    fn remap_op(
        &self,
        op: &Operation,
        out: &mut Circuit,
        rebind: &dyn Fn(&ParamBinding) -> ParamBinding,
        gate_map: &mut Vec<Option<usize>>,
    ) -> Operation {
        match op {
            Operation::Gate { gate, params } => {
                let g = *gate_map[*gate].get_or_insert_with(|| {
                    let e = self.gate_set.entry(*gate);
                    out.gate_set.intern(&e.expr, e.origin.clone())
                });
                Operation::Gate { gate: g, params: params.iter().map(rebind).collect() }
            }
            Operation::Subcircuit { circuit, params } => {
                Operation::Subcircuit { circuit: circuit.clone(), params: params.iter().map(rebind).collect() }
            }
            Operation::ClassicallyControlled { op, value } => Operation::ClassicallyControlled {
                op: Box::new(self.remap_op(op, out, rebind, gate_map)),
                value: *value,
            },
            Operation::Measure => Operation::Measure,
            Operation::Reset => Operation::Reset,
        }
    }

    /// The gate reference recorded for the `i`-th appended instruction.
    pub fn label(&self, i: usize) -> Option<&GateOrigin> {
        self.labels.get(i)?.as_ref()
    }

    pub(crate) fn set_last_label(&mut self, label: GateOrigin) {
        if let Some(l) = self.labels.last_mut() {
            *l = Some(label);
        }
    }
}
