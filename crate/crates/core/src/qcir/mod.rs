//! Cycle-based circuits over qudits with an expression-keyed gate set.

mod circuit;
mod gate_set;
pub mod generators;
mod json;
mod oracle;
mod partition;

pub use circuit::{Circuit, Cycle, InstrRef, Instruction, Operation, ParamBinding, Wire};
pub use gate_set::{GateOrigin, GateSet, GateSetEntry};
pub use json::{circuit_from_json, circuit_to_json};
pub use oracle::{extend_gate, to_unitary_oracle};
pub use partition::partition;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("qudit {0} out of range")]
    QuditOutOfRange(usize),
    #[error("classical bit {0} out of range")]
    ClbitOutOfRange(usize),
    #[error("operand {0} used twice")]
    DuplicateOperand(usize),
    #[error("no gate with index {0}")]
    UnknownGate(usize),
    #[error("gate acts on radices {expected:?}, operands have {found:?}")]
    RadixMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("expected {expected} parameters, got {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("parameter {0} out of range")]
    ParamOutOfRange(usize),
    #[error("gate on {size} qudits exceeds the block limit of {max}")]
    OversizedGate { size: usize, max: usize },
    #[error("instruction is not unitary: {0}")]
    NonUnitary(String),
    #[error("{0}")]
    Malformed(String),
    #[error("json: {0}")]
    Json(String),
}
