use thiserror::Error;

use crate::circuit::Violation;

fn join(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("invalid circuit: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("network config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid network: {0}")]
    Invariant(String),
    #[error("invalid coupling map: {0}")]
    Coupling(String),
    #[error("qubit {qubit} out of range for {n_qubits}-qubit map")]
    OutOfRange { qubit: usize, n_qubits: usize },
    #[error("identical qubits {0}")]
    Identical(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("dimension mismatch: state has {state} qubits, circuit needs {circuit}")]
    DimensionMismatch { state: usize, circuit: usize },
    #[error("{requested} qubits exceeds simulator cap of {cap}")]
    TooManyQubits { requested: usize, cap: usize },
    #[error("{count} measurements exceeds the exhaustive limit of {limit}")]
    TooManyMeasurements { count: usize, limit: usize },
    #[error("qubit {0} out of range")]
    QubitOutOfRange(usize),
    #[error("clbit {0} out of range")]
    ClbitOutOfRange(usize),
    #[error("measure, reset and conditional gates need classical context")]
    NeedsClassicalContext,
    #[error("non-unitary single-qubit matrix")]
    NonUnitary,
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("qubits {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("reversed cnot needs edge {target}->{control} and no edge {control}->{target}")]
    ReversedPrecondition { control: usize, target: usize },
    #[error("qubit {qubit} outside the {n_qubits}-qubit coupling map")]
    OutsideMap { qubit: usize, n_qubits: usize },
    #[error("no path between physical qubits {0} and {1}")]
    NoPath(usize, usize),
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RemoteError {
    #[error("communication qubit occupied: {0}")]
    Occupied(usize),
    #[error("pair not allocated on qubits {0} and {1}")]
    PairNotAllocated(usize, usize),
    #[error("link path must contain at least one link")]
    EmptyPath,
    #[error("link path is not contiguous at hop {0}")]
    BrokenPath(usize),
    #[error("unknown link {0}")]
    UnknownLink(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("not enough data qubits: circuit needs {needed}, network offers {available}")]
    Capacity { needed: usize, available: usize },
    #[error("malformed options: {0}")]
    Options(String),
    #[error("devices {0} and {1} are not connected by any link path")]
    Unreachable(String, String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
