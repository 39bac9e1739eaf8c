//! Makes two-qubit gates executable on a coupling map.
//!
//! A CNOT on a reversed edge is conjugated by Hadamards; a CNOT between
//! non-adjacent qubits moves the control along the shortest path with SWAPs
//! (each lowered to three CNOTs) until it neighbours the target.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, QubitId};
use crate::device::CouplingMap;
use crate::error::RouteError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingMode {
    /// Undo the inserted swaps after each routed gate.
    #[default]
    Restore,
    /// Keep the swaps and track the resulting permutation.
    Permute,
}

impl std::str::FromStr for RoutingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "restore" => Ok(RoutingMode::Restore),
            "permute" => Ok(RoutingMode::Permute),
            other => Err(format!(
                "unknown routing mode `{other}` (expected restore|permute)"
            )),
        }
    }
}

/// Bijection between logical (virtual) and physical qubits of one map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    to_physical: Vec<usize>,
    to_logical: Vec<usize>,
}

impl Layout {
    pub fn identity(n: usize) -> Self {
        Layout {
            to_physical: (0..n).collect(),
            to_logical: (0..n).collect(),
        }
    }

    /// `mapping[logical] = physical`; must be a permutation.
    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self, RouteError> {
        let n = mapping.len();
        let mut to_logical = vec![usize::MAX; n];
        for (l, &p) in mapping.iter().enumerate() {
            if p >= n || to_logical[p] != usize::MAX {
                return Err(RouteError::Layout(format!(
                    "{mapping:?} is not a permutation"
                )));
            }
            to_logical[p] = l;
        }
        Ok(Layout {
            to_physical: mapping,
            to_logical,
        })
    }

    pub fn len(&self) -> usize {
        self.to_physical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_physical.is_empty()
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.to_physical[logical]
    }

    pub fn logical(&self, physical: usize) -> usize {
        self.to_logical[physical]
    }

    pub fn mapping(&self) -> &[usize] {
        &self.to_physical
    }

    /// Exchanges the logical occupants of two physical qubits.
    pub fn swap_physical(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.to_logical[a], self.to_logical[b]);
        self.to_logical.swap(a, b);
        self.to_physical[la] = b;
        self.to_physical[lb] = a;
    }
}

fn hh_conjugated(control: usize, target: usize) -> Vec<Gate> {
    vec![
        Gate::H(control),
        Gate::H(target),
        Gate::cnot(target, control),
        Gate::H(control),
        Gate::H(target),
    ]
}

/// CNOT(control -> target) built from the physical edge target -> control.
pub fn lower_reversed_cnot(
    coupling: &CouplingMap,
    control: usize,
    target: usize,
) -> Result<Vec<Gate>, RouteError> {
    check_on_map(coupling, control)?;
    check_on_map(coupling, target)?;
    if !coupling.has_edge(target, control) || coupling.has_edge(control, target) {
        return Err(RouteError::ReversedPrecondition { control, target });
    }
    Ok(hh_conjugated(control, target))
}

/// A CNOT between adjacent qubits in whichever orientation the map allows.
fn adjacent_cnot(
    coupling: &CouplingMap,
    control: usize,
    target: usize,
) -> Result<Vec<Gate>, RouteError> {
    if coupling.has_edge(control, target) {
        Ok(vec![Gate::cnot(control, target)])
    } else if coupling.has_edge(target, control) {
        Ok(hh_conjugated(control, target))
    } else {
        Err(RouteError::NotAdjacent(control, target))
    }
}

/// SWAP as three alternating CNOTs. The outer pair follows a physical edge
/// when one exists, so at most the middle CNOT needs reversing.
pub fn lower_swap(a: usize, b: usize, coupling: &CouplingMap) -> Result<Vec<Gate>, RouteError> {
    check_on_map(coupling, a)?;
    check_on_map(coupling, b)?;
    if a == b || !coupling.is_adjacent(a, b) {
        return Err(RouteError::NotAdjacent(a, b));
    }
    let (x, y) = if coupling.has_edge(a, b) || !coupling.has_edge(b, a) {
        (a, b)
    } else {
        (b, a)
    };
    let mut out = adjacent_cnot(coupling, x, y)?;
    out.extend(adjacent_cnot(coupling, y, x)?);
    out.extend(adjacent_cnot(coupling, x, y)?);
    Ok(out)
}

fn swap_len(coupling: &CouplingMap, a: usize, b: usize) -> usize {
    if coupling.has_edge(a, b) && coupling.has_edge(b, a) {
        3
    } else {
        7
    }
}

fn cnot_len(coupling: &CouplingMap, control: usize, target: usize) -> usize {
    if coupling.has_edge(control, target) {
        1
    } else {
        5
    }
}

/// Path for the control to walk towards the target: minimum hops first,
/// then fewest routed gates (each swap counted `hop_factor` times), then
/// lexicographically smallest.
pub(crate) fn cheapest_shortest_path(
    coupling: &CouplingMap,
    control: usize,
    target: usize,
    hop_factor: usize,
) -> Option<Vec<usize>> {
    let dist = coupling.distances_from(target);
    let hops = dist[control]?;
    let mut order: Vec<usize> = (0..coupling.n_qubits())
        .filter(|&v| dist[v].is_some_and(|d| d >= 1 && d <= hops))
        .collect();
    order.sort_by_key(|&v| (dist[v], v));
    // cost[v]: gates to finish with the control sitting on v
    let mut cost = vec![usize::MAX; coupling.n_qubits()];
    let step = |v: usize, u: usize, cost: &[usize]| hop_factor * swap_len(coupling, v, u) + cost[u];
    for &v in &order {
        cost[v] = if dist[v] == Some(1) {
            cnot_len(coupling, v, target)
        } else {
            coupling
                .neighbors(v)
                .iter()
                .filter(|&&u| dist[u].map(|d| d + 1) == dist[v])
                .map(|&u| step(v, u, &cost))
                .min()?
        };
    }
    let mut path = vec![control];
    let mut cur = control;
    while cur != target {
        let here = dist[cur]?;
        cur = if here == 1 {
            target
        } else {
            *coupling.neighbors(cur).iter().find(|&&u| {
                dist[u].map(|d| d + 1) == Some(here) && step(cur, u, &cost) == cost[cur]
            })?
        };
        path.push(cur);
    }
    Some(path)
}

fn check_on_map(coupling: &CouplingMap, q: usize) -> Result<(), RouteError> {
    if q >= coupling.n_qubits() {
        Err(RouteError::OutsideMap {
            qubit: q,
            n_qubits: coupling.n_qubits(),
        })
    } else {
        Ok(())
    }
}

/// Every CNOT in `circuit` that is not on a physical edge, by gate index.
/// SWAP gates are reported too since routed output contains none.
pub fn illegal_gates(circuit: &Circuit, coupling: &CouplingMap) -> Vec<usize> {
    illegal_gates_with(circuit, coupling, |_, _| false)
}

pub(crate) fn illegal_gates_with(
    circuit: &Circuit,
    coupling: &CouplingMap,
    allowed: impl Fn(usize, usize) -> bool,
) -> Vec<usize> {
    circuit
        .gates
        .iter()
        .enumerate()
        .filter(|(_, g)| match **g {
            Gate::Cnot { control, target } => {
                !(control < coupling.n_qubits()
                    && target < coupling.n_qubits()
                    && coupling.has_edge(control, target))
                    && !allowed(control, target)
            }
            Gate::Swap(..) => true,
            _ => false,
        })
        .map(|(i, _)| i)
        .collect()
}

/// Routing knobs used by the distributed compiler on top of [`route`].
pub(crate) struct RouteContext<'a> {
    /// Physical qubits whose occupant must never be displaced permanently;
    /// a permute-mode gate whose moving chain touches one is restored.
    pub pinned: &'a BTreeSet<usize>,
    /// Two-qubit pairs emitted verbatim (e.g. link-level EPR generation).
    pub passthrough: &'a dyn Fn(usize, usize) -> bool,
}

/// Routes `circuit` onto `coupling` starting from `initial`.
///
/// Output qubit indices are physical. The returned layout maps each logical
/// qubit to its final physical position; in restore mode it equals
/// `initial`.
pub fn route(
    circuit: &Circuit,
    coupling: &CouplingMap,
    initial: &Layout,
    mode: RoutingMode,
) -> Result<(Circuit, Layout), RouteError> {
    let none = BTreeSet::new();
    let ctx = RouteContext {
        pinned: &none,
        passthrough: &|_, _| false,
    };
    route_with(circuit, coupling, initial, mode, &ctx)
}

pub(crate) fn route_with(
    circuit: &Circuit,
    coupling: &CouplingMap,
    initial: &Layout,
    mode: RoutingMode,
    ctx: &RouteContext<'_>,
) -> Result<(Circuit, Layout), RouteError> {
    circuit.ensure_valid()?;
    let n = coupling.n_qubits();
    if circuit.n_qubits > n {
        return Err(RouteError::OutsideMap {
            qubit: circuit.n_qubits - 1,
            n_qubits: n,
        });
    }
    if initial.len() != n {
        return Err(RouteError::Layout(format!(
            "layout covers {} qubits, map has {n}",
            initial.len()
        )));
    }
    let mut layout = initial.clone();
    let mut out = Circuit::new(n, circuit.n_clbits);
    for gate in &circuit.gates {
        match *gate {
            Gate::Cnot { control, target } => route_cnot(
                coupling,
                &mut layout,
                control,
                target,
                mode,
                ctx,
                &mut out.gates,
            )?,
            Gate::Swap(a, b) => {
                let (pa, pb) = (layout.physical(a), layout.physical(b));
                if coupling.is_adjacent(pa, pb) {
                    out.gates.extend(lower_swap(pa, pb, coupling)?);
                } else {
                    for (c, t) in [(a, b), (b, a), (a, b)] {
                        route_cnot(coupling, &mut layout, c, t, mode, ctx, &mut out.gates)?;
                    }
                }
            }
            ref g => out.gates.push(g.map_qubits(|q| layout.physical(q))),
        }
    }
    Ok((out, layout))
}

fn route_cnot(
    coupling: &CouplingMap,
    layout: &mut Layout,
    control: QubitId,
    target: QubitId,
    mode: RoutingMode,
    ctx: &RouteContext<'_>,
    out: &mut Vec<Gate>,
) -> Result<(), RouteError> {
    let (pc, pt) = (layout.physical(control), layout.physical(target));
    if (ctx.passthrough)(pc, pt) {
        out.push(Gate::cnot(pc, pt));
        return Ok(());
    }
    if coupling.is_adjacent(pc, pt) {
        out.extend(adjacent_cnot(coupling, pc, pt)?);
        return Ok(());
    }
    let hop_factor = if mode == RoutingMode::Permute { 1 } else { 2 };
    let path =
        cheapest_shortest_path(coupling, pc, pt, hop_factor).ok_or(RouteError::NoPath(pc, pt))?;
    // control walks path[0] -> path[len-2], next to the target at path[len-1]
    let hops: Vec<(usize, usize)> = path[..path.len() - 1]
        .windows(2)
        .map(|w| (w[0], w[1]))
        .collect();
    for &(a, b) in &hops {
        out.extend(lower_swap(a, b, coupling)?);
    }
    let moved = path[path.len() - 2];
    out.extend(adjacent_cnot(coupling, moved, pt)?);
    let keep = mode == RoutingMode::Permute
        && !path[..path.len() - 1]
            .iter()
            .any(|q| ctx.pinned.contains(q));
    if keep {
        for &(a, b) in &hops {
            layout.swap_physical(a, b);
        }
    } else {
        for &(a, b) in hops.iter().rev() {
            out.extend(lower_swap(a, b, coupling)?);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::StateVector;

    fn run(gates: &[Gate], n: usize, input: usize) -> StateVector {
        let mut s = StateVector::basis(n, input).unwrap();
        for g in gates {
            s.apply_unitary(g).unwrap();
        }
        s
    }

    #[test]
    fn reversed_cnot_truth_table() {
        let map = CouplingMap::new(2, [(1, 0)]).unwrap();
        let gates = lower_reversed_cnot(&map, 0, 1).unwrap();
        assert_eq!(gates.len(), 5);
        // control = qubit 0; |c=1,t=0> is index 1
        for (input, output) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
            let f = run(&gates, 2, input)
                .fidelity(&StateVector::basis(2, output).unwrap())
                .unwrap();
            assert!((f - 1.0).abs() < 1e-12);
        }
        assert!(lower_reversed_cnot(&map, 1, 0).is_err());
    }

    #[test]
    fn swap_with_single_edge() {
        let map = CouplingMap::new(2, [(0, 1)]).unwrap();
        let gates = lower_swap(0, 1, &map).unwrap();
        assert_eq!(gates.len(), 7);
        for (input, output) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            let f = run(&gates, 2, input)
                .fidelity(&StateVector::basis(2, output).unwrap())
                .unwrap();
            assert!((f - 1.0).abs() < 1e-12);
        }
        let rev = lower_swap(1, 0, &map).unwrap();
        assert_eq!(rev.len(), 7);
        let line = CouplingMap::line(3);
        assert_eq!(lower_swap(0, 2, &line), Err(RouteError::NotAdjacent(0, 2)));
    }

    #[test]
    fn layout_bookkeeping() {
        let mut l = Layout::identity(3);
        l.swap_physical(0, 1);
        assert_eq!(l.mapping(), &[1, 0, 2]);
        assert_eq!(l.logical(1), 0);
        assert!(Layout::from_mapping(vec![0, 0]).is_err());
        assert_eq!(Layout::from_mapping(vec![1, 0]).unwrap(), {
            let mut m = Layout::identity(2);
            m.swap_physical(0, 1);
            m
        });
    }

    #[test]
    fn adjacent_cnot_is_fixed_point() {
        let map = CouplingMap::line(3);
        let c = Circuit::with_gates(3, 0, vec![Gate::cnot(1, 2), Gate::H(0)]);
        let (routed, layout) = route(&c, &map, &Layout::identity(3), RoutingMode::Restore).unwrap();
        assert_eq!(routed, c);
        assert_eq!(layout, Layout::identity(3));
    }

    #[test]
    fn circuit_too_wide() {
        let map = CouplingMap::line(2);
        let c = Circuit::with_gates(3, 0, vec![Gate::H(2)]);
        assert!(matches!(
            route(&c, &map, &Layout::identity(2), RoutingMode::Restore),
            Err(RouteError::OutsideMap { .. })
        ));
    }

    #[test]
    fn pinned_qubit_forces_restore() {
        let map = CouplingMap::line(4);
        let pinned: BTreeSet<usize> = [1].into();
        let ctx = RouteContext {
            pinned: &pinned,
            passthrough: &|_, _| false,
        };
        let c = Circuit::with_gates(4, 0, vec![Gate::cnot(0, 3)]);
        let (_, layout) =
            route_with(&c, &map, &Layout::identity(4), RoutingMode::Permute, &ctx).unwrap();
        assert_eq!(layout, Layout::identity(4));
        let (_, layout) = route(&c, &map, &Layout::identity(4), RoutingMode::Permute).unwrap();
        assert_eq!(layout.mapping(), &[2, 0, 1, 3]);
    }
}
