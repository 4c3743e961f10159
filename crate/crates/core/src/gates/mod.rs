//! The standard gate library and named-gate lookup.

use std::sync::OnceLock;

use indexmap::IndexMap;

use crate::frontend::{lower_to_symbolic, parse_qgl, print_def, ParseError};
use crate::symexpr::UnitaryExprMatrix;

/// QGL source of the standard gates.
pub const PRELUDE: &str = include_str!("prelude.qgl");

#[derive(Clone, Debug)]
pub struct GateEntry {
    pub source: String,
    pub expr: UnitaryExprMatrix,
}

/// Named gate definitions in declaration order. Later definitions replace
/// earlier ones with the same name.
#[derive(Clone, Debug, Default)]
pub struct GateLibrary {
    gates: IndexMap<String, GateEntry>,
}

impl GateLibrary {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The standard library, parsed once per process.
    pub fn standard() -> Self {
        static STANDARD: OnceLock<GateLibrary> = OnceLock::new();
        STANDARD
            .get_or_init(|| {
                let mut lib = GateLibrary::empty();
                lib.extend_from_source(PRELUDE).expect("standard gate library parses");
                lib
            })
            .clone()
    }

    pub fn extend_from_source(&mut self, source: &str) -> Result<Vec<String>, ParseError> {
        let mut names = Vec::new();
        for def in parse_qgl(source)? {
            let expr = lower_to_symbolic(&def)?;
            names.push(def.name.clone());
            self.gates.insert(def.name.clone(), GateEntry { source: print_def(&def), expr });
        }
        Ok(names)
    }

    pub fn get(&self, name: &str) -> Option<&UnitaryExprMatrix> {
        self.gates.get(name).map(|g| &g.expr)
    }

    pub fn entry(&self, name: &str) -> Option<&GateEntry> {
        self.gates.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.gates.keys().map(String::as_str)
    }

    /// Look up a standard gate by name.
    ///
    /// Panics if the standard library does not define `name`.
    pub fn std_gate(name: &str) -> UnitaryExprMatrix {
        Self::standard().get(name).unwrap_or_else(|| panic!("no standard gate named {name}")).clone()
    }
}
