//! Lowering of remote primitives onto local gates over shared EPR pairs:
//! teledata (state teleportation), telegate (remote CNOT) and entanglement
//! swapping across intermediate devices.
//!
//! All qubit indices here are global physical indices of a
//! [`NetworkTopology`]. Every primitive finishes by resetting the
//! communication qubits it used, so each comm qubit ends free and in `|0>`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circuit::{ClbitId, Gate, Pauli, QubitId};
use crate::device::NetworkTopology;
use crate::error::RemoteError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occupancy {
    Free,
    /// Holds one half of the pair with this id.
    Half(usize),
    /// Holds a teleported data state.
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkCounters {
    pub pairs_generated: u64,
    pub pairs_consumed: u64,
}

/// A live Bell pair `(near, far)` in state Φ+.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprPair {
    pub id: usize,
    pub near: QubitId,
    pub far: QubitId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PairRecord {
    near: QubitId,
    far: QubitId,
    links: Vec<usize>,
    /// Produced by swapping; its hop pairs were already counted consumed.
    swapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LinkInfo {
    ends: [(usize, QubitId); 2],
    epr_cost: f64,
}

/// Book-keeping of EPR generation and consumption for one compilation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprLedger {
    links: Vec<LinkInfo>,
    counters: Vec<LinkCounters>,
    occupancy: BTreeMap<QubitId, Occupancy>,
    comm_device: BTreeMap<QubitId, usize>,
    live: BTreeMap<usize, PairRecord>,
    next_pair: usize,
    cost: f64,
}

impl EprLedger {
    pub fn new(net: &NetworkTopology) -> Self {
        let links: Vec<LinkInfo> = (0..net.links().len())
            .map(|i| {
                let (a, b) = net.link_ends(i);
                LinkInfo {
                    ends: [a, b],
                    epr_cost: net.links()[i].epr_cost,
                }
            })
            .collect();
        let comm_device = net
            .comm_globals()
            .into_iter()
            .map(|q| (q, net.site(q).device))
            .collect::<BTreeMap<_, _>>();
        EprLedger {
            counters: vec![LinkCounters::default(); links.len()],
            occupancy: comm_device.keys().map(|&q| (q, Occupancy::Free)).collect(),
            comm_device,
            links,
            live: BTreeMap::new(),
            next_pair: 0,
            cost: 0.0,
        }
    }

    pub fn counters(&self) -> &[LinkCounters] {
        &self.counters
    }

    pub fn pairs_generated(&self) -> u64 {
        self.counters.iter().map(|c| c.pairs_generated).sum()
    }

    pub fn pairs_consumed(&self) -> u64 {
        self.counters.iter().map(|c| c.pairs_consumed).sum()
    }

    /// Accrued generation cost in link cost units.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn occupancy(&self, comm: QubitId) -> Option<Occupancy> {
        self.occupancy.get(&comm).copied()
    }

    pub fn all_free(&self) -> bool {
        self.occupancy.values().all(|o| *o == Occupancy::Free) && self.live.is_empty()
    }

    /// Marks a comm qubit that held teleported data as free again.
    pub fn release(&mut self, comm: QubitId) {
        if let Some(o) = self.occupancy.get_mut(&comm) {
            *o = Occupancy::Free;
        }
    }

    fn is_live(&self, pair: &EprPair) -> bool {
        self.live
            .get(&pair.id)
            .is_some_and(|r| r.near == pair.near && r.far == pair.far)
            && self.occupancy.get(&pair.near) == Some(&Occupancy::Half(pair.id))
            && self.occupancy.get(&pair.far) == Some(&Occupancy::Half(pair.id))
    }

    fn consume(&mut self, pair: &EprPair) -> Result<PairRecord, RemoteError> {
        if !self.is_live(pair) {
            return Err(RemoteError::PairNotAllocated(pair.near, pair.far));
        }
        let record = self.live.remove(&pair.id).expect("checked live");
        if !record.swapped {
            for &l in &record.links {
                self.counters[l].pairs_consumed += 1;
            }
        }
        Ok(record)
    }

    fn device_of(&self, comm: QubitId) -> Option<usize> {
        self.comm_device.get(&comm).copied()
    }
}

/// Hands out fresh classical bits, starting after the caller's register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClbitPool {
    next: ClbitId,
}

impl ClbitPool {
    pub fn starting_at(first: ClbitId) -> Self {
        ClbitPool { next: first }
    }

    pub fn take(&mut self) -> ClbitId {
        self.next += 1;
        self.next - 1
    }

    /// Total register size needed so far.
    pub fn size(&self) -> usize {
        self.next
    }
}

/// Prepares Φ+ across `link`, with `near` on the end at device `from`.
pub fn generate_epr(
    ledger: &mut EprLedger,
    link: usize,
    from: usize,
) -> Result<(Vec<Gate>, EprPair), RemoteError> {
    let info = ledger
        .links
        .get(link)
        .ok_or(RemoteError::UnknownLink(link))?;
    let [e0, e1] = info.ends;
    let (near, far) = if e0.0 == from {
        (e0.1, e1.1)
    } else {
        (e1.1, e0.1)
    };
    let cost = info.epr_cost;
    for q in [near, far] {
        if ledger.occupancy.get(&q) != Some(&Occupancy::Free) {
            return Err(RemoteError::Occupied(q));
        }
    }
    let id = ledger.next_pair;
    ledger.next_pair += 1;
    ledger.occupancy.insert(near, Occupancy::Half(id));
    ledger.occupancy.insert(far, Occupancy::Half(id));
    ledger.live.insert(
        id,
        PairRecord {
            near,
            far,
            links: vec![link],
            swapped: false,
        },
    );
    ledger.counters[link].pairs_generated += 1;
    ledger.cost += cost;
    let gates = vec![
        Gate::Reset(near),
        Gate::Reset(far),
        Gate::H(near),
        Gate::cnot(near, far),
    ];
    Ok((gates, EprPair { id, near, far }))
}

/// Teleports `src` onto `pair.far`. Afterwards `pair.near` and `src` are
/// reset; `pair.far` holds the data and stays occupied until released.
pub fn lower_teledata(
    ledger: &mut EprLedger,
    src: QubitId,
    pair: &EprPair,
    clbits: (ClbitId, ClbitId),
) -> Result<Vec<Gate>, RemoteError> {
    ledger.consume(pair)?;
    ledger.occupancy.insert(pair.near, Occupancy::Free);
    ledger.occupancy.insert(pair.far, Occupancy::Data);
    let (m1, m2) = clbits;
    Ok(vec![
        Gate::cnot(src, pair.near),
        Gate::H(src),
        Gate::measure(pair.near, m1),
        Gate::measure(src, m2),
        Gate::if_bit(m1, Pauli::X, pair.far),
        Gate::if_bit(m2, Pauli::Z, pair.far),
        Gate::Reset(pair.near),
        Gate::Reset(src),
    ])
}

/// CNOT(control -> target) where `control` shares a device with
/// `pair.near` and `target` with `pair.far`.
pub fn lower_telegate(
    ledger: &mut EprLedger,
    control: QubitId,
    target: QubitId,
    pair: &EprPair,
    clbits: (ClbitId, ClbitId),
) -> Result<Vec<Gate>, RemoteError> {
    ledger.consume(pair)?;
    ledger.occupancy.insert(pair.near, Occupancy::Free);
    ledger.occupancy.insert(pair.far, Occupancy::Free);
    let (a, b) = (pair.near, pair.far);
    let (m1, m2) = clbits;
    Ok(vec![
        Gate::cnot(control, a),
        Gate::measure(a, m1),
        Gate::if_bit(m1, Pauli::X, b),
        Gate::cnot(b, target),
        Gate::H(b),
        Gate::measure(b, m2),
        Gate::if_bit(m2, Pauli::Z, control),
        Gate::Reset(a),
        Gate::Reset(b),
    ])
}

/// Generates a pair on every hop of `path` (starting at device `from`) and
/// joins them by Bell measurements at each intermediate device. Returns the
/// end-to-end pair; a single-hop path is plain generation.
pub fn swap_entanglement(
    ledger: &mut EprLedger,
    path: &[usize],
    from: usize,
    pool: &mut ClbitPool,
) -> Result<(Vec<Gate>, EprPair), RemoteError> {
    if path.is_empty() {
        return Err(RemoteError::EmptyPath);
    }
    let snapshot = ledger.clone();
    let mut gates = Vec::new();
    let mut hops = Vec::with_capacity(path.len());
    let mut device = from;
    for (i, &link) in path.iter().enumerate() {
        let Some(info) = ledger.links.get(link) else {
            *ledger = snapshot;
            return Err(RemoteError::UnknownLink(link));
        };
        let [e0, e1] = info.ends;
        let next = if e0.0 == device {
            e1.0
        } else if e1.0 == device {
            e0.0
        } else {
            *ledger = snapshot;
            return Err(RemoteError::BrokenPath(i));
        };
        let generated = generate_epr(ledger, link, device);
        device = next;
        match generated {
            Ok((g, pair)) => {
                gates.extend(g);
                hops.push(pair);
            }
            Err(e) => {
                *ledger = snapshot;
                return Err(e);
            }
        }
    }
    if hops.len() == 1 {
        return Ok((gates, hops[0]));
    }
    let end = hops.last().expect("non-empty").far;
    let mut links = Vec::with_capacity(hops.len());
    for pair in &hops {
        links.extend(ledger.consume(pair)?.links);
    }
    for w in hops.windows(2) {
        let (x, y) = (w[0].far, w[1].near);
        debug_assert_eq!(ledger.device_of(x), ledger.device_of(y));
        let (ma, mb) = (pool.take(), pool.take());
        gates.extend([
            Gate::cnot(x, y),
            Gate::H(x),
            Gate::measure(x, ma),
            Gate::measure(y, mb),
            Gate::if_bit(mb, Pauli::X, end),
            Gate::if_bit(ma, Pauli::Z, end),
            Gate::Reset(x),
            Gate::Reset(y),
        ]);
        ledger.occupancy.insert(x, Occupancy::Free);
        ledger.occupancy.insert(y, Occupancy::Free);
    }
    let id = ledger.next_pair;
    ledger.next_pair += 1;
    let near = hops[0].near;
    ledger.occupancy.insert(near, Occupancy::Half(id));
    ledger.occupancy.insert(end, Occupancy::Half(id));
    ledger.live.insert(
        id,
        PairRecord {
            near,
            far: end,
            links,
            swapped: true,
        },
    );
    Ok((gates, EprPair { id, near, far: end }))
}

/// How a remote two-qubit interaction was carried out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RemoteKind {
    /// Logical `qubit` moved to device `dst` (or back home).
    Teledata {
        qubit: usize,
        src_device: usize,
        dst_device: usize,
    },
    /// CNOT between logical qubits on distinct devices.
    Telegate { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteOp {
    #[serde(flatten)]
    pub kind: RemoteKind,
    /// Link indices from the source device to the destination device.
    pub link_path: Vec<usize>,
}
