use std::collections::HashMap;

use crate::congruence::Checker;
use crate::symexpr::{ComplexExpr, ScalarExpr, UnitaryExprMatrix};

/// Where a gate-set entry came from; decides how it is written out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateOrigin {
    /// A gate of the library, referenced by name.
    Library(String),
    /// A named definition carried alongside the circuit.
    Defined { name: String, source: String },
    /// Given directly; `Some` keeps the source text it was read from.
    Inline(Option<String>),
}

#[derive(Clone, Debug)]
pub struct GateSetEntry {
    pub expr: UnitaryExprMatrix,
    pub origin: GateOrigin,
}

// Radices plus elements with parameters renamed positionally.
type Key = (Vec<usize>, usize, Vec<ComplexExpr>);

/// An append-only indexed set of gates, keyed by expression identity.
#[derive(Clone, Debug, Default)]
pub struct GateSet {
    entries: Vec<GateSetEntry>,
    index: HashMap<Key, usize>,
}

fn canonical_names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("__p{k}")).collect()
}

fn key_of(u: &UnitaryExprMatrix) -> Key {
    let c = u.rename_params(&canonical_names(u.num_params()));
    (u.radices().to_vec(), u.num_params(), c.elements().to_vec())
}

impl GateSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&UnitaryExprMatrix> {
        self.entries.get(i).map(|e| &e.expr)
    }

    pub fn entry(&self, i: usize) -> &GateSetEntry {
        &self.entries[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &UnitaryExprMatrix> {
        self.entries.iter().map(|e| &e.expr)
    }

    /// Index of an entry equal to `u`, with `u`'s parameters matched
    /// positionally. Structurally identical entries are found by hash;
    /// otherwise each candidate of the same shape goes through
    /// [`Checker::check_equal`].
    pub fn find(&self, u: &UnitaryExprMatrix) -> Option<usize> {
        if let Some(&i) = self.index.get(&key_of(u)) {
            return Some(i);
        }
        let checker = Checker::default();
        self.entries.iter().position(|e| {
            let x = &e.expr;
            x.radices() == u.radices()
                && x.num_params() == u.num_params()
                && checker.check_equal(x, &u.rename_params(x.params())).equal
        })
    }

    /// Index of `u`, appending it if no equal entry exists.
    pub fn intern(&mut self, u: &UnitaryExprMatrix, origin: GateOrigin) -> usize {
        if let Some(i) = self.find(u) {
            return i;
        }
        let i = self.entries.len();
        self.index.insert(key_of(u), i);
        self.entries.push(GateSetEntry { expr: u.clone(), origin });
        i
    }

    /// An entry that equals `u` up to a global phase but is not equal to it.
    /// Such gates are kept apart; this is only for diagnostics.
    pub fn congruent_entry(&self, u: &UnitaryExprMatrix) -> Option<(usize, ScalarExpr)> {
        let checker = Checker::default();
        self.entries.iter().enumerate().find_map(|(i, e)| {
            let x = &e.expr;
            if x.radices() != u.radices() || x.num_params() != u.num_params() {
                return None;
            }
            let phase = checker.check_phase_congruent(x, &u.rename_params(x.params())).phase.ok()?;
            (!phase.is_zero()).then_some((i, phase))
        })
    }
}
