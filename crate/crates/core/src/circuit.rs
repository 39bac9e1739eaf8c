//! Hardware-agnostic circuit representation.
//!
//! A [`Circuit`] is an ordered gate list over a quantum and a classical
//! register. Construction never fails; [`Circuit::validate`] reports every
//! invariant violation so callers can decide how to react.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CircuitError;

/// Index into a circuit's quantum register.
pub type QubitId = usize;
/// Index into a circuit's classical register.
pub type ClbitId = usize;

/// Unitarity tolerance for [`Gate::U1q`] matrices.
pub const UNITARY_TOL: f64 = 1e-10;

/// Row-major 2x2 complex matrix.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Body of a classically controlled gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(QubitId),
    X(QubitId),
    Z(QubitId),
    /// Arbitrary single-qubit unitary.
    U1q(QubitId, Matrix2),
    Cnot {
        control: QubitId,
        target: QubitId,
    },
    Swap(QubitId, QubitId),
    Measure {
        qubit: QubitId,
        clbit: ClbitId,
    },
    Reset(QubitId),
    /// Applies `body` to `qubit` iff classical bit `clbit` is 1.
    IfBit {
        clbit: ClbitId,
        body: Pauli,
        qubit: QubitId,
    },
}

impl Gate {
    pub fn cnot(control: QubitId, target: QubitId) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn measure(qubit: QubitId, clbit: ClbitId) -> Self {
        Gate::Measure { qubit, clbit }
    }

    pub fn if_bit(clbit: ClbitId, body: Pauli, qubit: QubitId) -> Self {
        Gate::IfBit { clbit, body, qubit }
    }

    /// Qubits touched by this gate, in operand order.
    pub fn qubits(&self) -> Vec<QubitId> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::U1q(q, _) | Gate::Reset(q) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Swap(a, b) => vec![a, b],
            Gate::Measure { qubit, .. } | Gate::IfBit { qubit, .. } => vec![qubit],
        }
    }

    pub fn clbit(&self) -> Option<ClbitId> {
        match *self {
            Gate::Measure { clbit, .. } | Gate::IfBit { clbit, .. } => Some(clbit),
            _ => None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. } | Gate::Swap(..))
    }

    /// Returns the same gate with every qubit operand passed through `f`.
    pub fn map_qubits(&self, mut f: impl FnMut(QubitId) -> QubitId) -> Gate {
        match *self {
            Gate::H(q) => Gate::H(f(q)),
            Gate::X(q) => Gate::X(f(q)),
            Gate::Z(q) => Gate::Z(f(q)),
            Gate::U1q(q, m) => Gate::U1q(f(q), m),
            Gate::Cnot { control, target } => Gate::cnot(f(control), f(target)),
            Gate::Swap(a, b) => Gate::Swap(f(a), f(b)),
            Gate::Measure { qubit, clbit } => Gate::measure(f(qubit), clbit),
            Gate::Reset(q) => Gate::Reset(f(q)),
            Gate::IfBit { clbit, body, qubit } => Gate::if_bit(clbit, body, f(qubit)),
        }
    }

    pub fn map_clbit(&self, mut f: impl FnMut(ClbitId) -> ClbitId) -> Gate {
        match *self {
            Gate::Measure { qubit, clbit } => Gate::measure(qubit, f(clbit)),
            Gate::IfBit { clbit, body, qubit } => Gate::if_bit(f(clbit), body, qubit),
            ref g => g.clone(),
        }
    }
}

/// True if `m` is unitary within [`UNITARY_TOL`].
pub fn is_unitary(m: &Matrix2) -> bool {
    for i in 0..2 {
        for j in 0..2 {
            let dot: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            if (dot - Complex64::new(expected, 0.0)).norm() > UNITARY_TOL {
                return false;
            }
        }
    }
    true
}

/// One invariant violation, anchored at the offending gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub gate_index: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at gate {}", self.message, self.gate_index)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_clbits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Self {
        Circuit {
            n_qubits,
            n_clbits,
            gates: Vec::new(),
        }
    }

    pub fn with_gates(n_qubits: usize, n_clbits: usize, gates: Vec<Gate>) -> Self {
        Circuit {
            n_qubits,
            n_clbits,
            gates,
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> &mut Self {
        self.gates.extend(gates);
        self
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn measure_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Measure { .. }))
            .count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Every invariant violation, in gate order. Empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut written = vec![false; self.n_clbits];
        for (i, gate) in self.gates.iter().enumerate() {
            let mut push = |message: String| {
                out.push(Violation {
                    gate_index: i,
                    message,
                })
            };
            for q in gate.qubits() {
                if q >= self.n_qubits {
                    push(format!(
                        "qubit {q} out of range (register size {})",
                        self.n_qubits
                    ));
                }
            }
            if let Some(c) = gate.clbit() {
                if c >= self.n_clbits {
                    push(format!(
                        "clbit {c} out of range (register size {})",
                        self.n_clbits
                    ));
                }
            }
            match gate {
                Gate::Cnot { control, target } if control == target => {
                    push("identical operands".to_string())
                }
                Gate::Swap(a, b) if a == b => push("identical operands".to_string()),
                Gate::U1q(_, m) if !is_unitary(m) => push("non-unitary matrix".to_string()),
                Gate::Measure { clbit, .. } => {
                    if let Some(w) = written.get_mut(*clbit) {
                        *w = true;
                    }
                }
                Gate::IfBit { clbit, .. } if *clbit < self.n_clbits && !written[*clbit] => {
                    push(format!("read-before-write of clbit {clbit}"))
                }
                _ => {}
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), CircuitError> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CircuitError::Invalid(violations))
        }
    }

    /// Layer count under greedy earliest-layer scheduling: a gate lands one
    /// layer after the latest layer holding any of its qubits or clbits.
    pub fn depth(&self) -> Result<usize, CircuitError> {
        self.ensure_valid()?;
        Ok(self.depth_unchecked())
    }

    pub(crate) fn depth_unchecked(&self) -> usize {
        let mut qubit_layer = vec![0usize; self.n_qubits];
        let mut clbit_layer = vec![0usize; self.n_clbits];
        let mut depth = 0;
        for gate in &self.gates {
            let qs = gate.qubits();
            let c = gate.clbit();
            let layer = 1 + qs
                .iter()
                .map(|&q| qubit_layer[q])
                .chain(c.map(|c| clbit_layer[c]))
                .max()
                .unwrap_or(0);
            for q in qs {
                qubit_layer[q] = layer;
            }
            if let Some(c) = c {
                clbit_layer[c] = layer;
            }
            depth = depth.max(layer);
        }
        depth
    }

    /// Weighted qubit interaction graph. A SWAP weighs 3, its CNOT count.
    pub fn interaction_graph(&self) -> Result<InteractionGraph, CircuitError> {
        self.ensure_valid()?;
        let mut graph = InteractionGraph::new(self.n_qubits);
        for gate in &self.gates {
            match *gate {
                Gate::Cnot { control, target } => graph.add(control, target, 1),
                Gate::Swap(a, b) => graph.add(a, b, 3),
                _ => {}
            }
        }
        Ok(graph)
    }
}

/// Undirected weighted graph over qubit indices; edges keyed `(low, high)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InteractionGraph {
    pub n_nodes: usize,
    pub edges: BTreeMap<(usize, usize), u64>,
}

impl InteractionGraph {
    pub fn new(n_nodes: usize) -> Self {
        InteractionGraph {
            n_nodes,
            edges: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, a: usize, b: usize, weight: u64) {
        let key = (a.min(b), a.max(b));
        *self.edges.entry(key).or_insert(0) += weight;
    }

    pub fn weight(&self, a: usize, b: usize) -> u64 {
        self.edges.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Sum of incident edge weights per node.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0; self.n_nodes];
        for (&(a, b), &w) in &self.edges {
            deg[a] += w;
            deg[b] += w;
        }
        deg
    }

    /// Dense symmetric adjacency matrix.
    pub fn matrix(&self) -> Vec<Vec<u64>> {
        let mut m = vec![vec![0; self.n_nodes]; self.n_nodes];
        for (&(a, b), &w) in &self.edges {
            m[a][b] += w;
            m[b][a] += w;
        }
        m
    }

    /// Total weight of edges whose endpoints carry different labels.
    pub fn cut_weight(&self, part: &[usize]) -> u64 {
        self.edges
            .iter()
            .filter(|(&(a, b), _)| part[a] != part[b])
            .map(|(_, &w)| w)
            .sum()
    }
}
