//! Processor and network model: coupling maps, data vs communication
//! qubits, and the quantum links that join devices.
//!
//! Physical qubits of a [`NetworkTopology`] are numbered globally by
//! concatenating devices in declaration order: device `d` owns the range
//! `offset(d)..offset(d) + n_qubits(d)`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::TopologyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjacency {
    Direct,
    Reversed,
    NonAdjacent,
}

/// Directed CNOT coupling graph of one device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingMap {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
}

impl CouplingMap {
    /// Builds a map, rejecting out-of-range endpoints, self-loops and
    /// disconnected graphs.
    pub fn new(
        n_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        let map = Self::unchecked(n_qubits, edges)?;
        if n_qubits > 0 && map.component_of(0).len() != n_qubits {
            return Err(TopologyError::Coupling(
                "underlying undirected graph is not connected".into(),
            ));
        }
        Ok(map)
    }

    /// Same endpoint checks as [`CouplingMap::new`] but allows several
    /// components, e.g. the disjoint union of every device in a network.
    pub(crate) fn unchecked(
        n_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        let mut set = BTreeSet::new();
        let mut neighbors = vec![Vec::new(); n_qubits];
        for (c, t) in edges {
            for q in [c, t] {
                if q >= n_qubits {
                    return Err(TopologyError::OutOfRange { qubit: q, n_qubits });
                }
            }
            if c == t {
                return Err(TopologyError::Coupling(format!("self-loop on qubit {c}")));
            }
            if set.insert((c, t)) {
                neighbors[c].push(t);
                neighbors[t].push(c);
            }
        }
        for n in &mut neighbors {
            n.sort_unstable();
            n.dedup();
        }
        Ok(CouplingMap {
            n_qubits,
            edges: set,
            neighbors,
        })
    }

    /// Linear chain `0 -> 1 -> ... -> n-1`.
    pub fn line(n_qubits: usize) -> Self {
        Self::new(n_qubits, (1..n_qubits).map(|i| (i - 1, i))).expect("line is connected")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, control: usize, target: usize) -> bool {
        self.edges.contains(&(control, target))
    }

    /// Undirected neighbors, ascending.
    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    fn check(&self, q: usize) -> Result<(), TopologyError> {
        if q >= self.n_qubits {
            Err(TopologyError::OutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    pub fn adjacency_kind(
        &self,
        control: usize,
        target: usize,
    ) -> Result<Adjacency, TopologyError> {
        self.check(control)?;
        self.check(target)?;
        if control == target {
            return Err(TopologyError::Identical(control));
        }
        Ok(if self.has_edge(control, target) {
            Adjacency::Direct
        } else if self.has_edge(target, control) {
            Adjacency::Reversed
        } else {
            Adjacency::NonAdjacent
        })
    }

    fn component_of(&self, start: usize) -> Vec<usize> {
        let dist = self.distances_from(start);
        (0..self.n_qubits).filter(|&q| dist[q].is_some()).collect()
    }

    /// Undirected hop distance from `source` to every qubit.
    pub fn distances_from(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n_qubits];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Minimum-hop path on the undirected view; among equally short paths the
    /// lexicographically smallest qubit sequence wins.
    pub fn shortest_path(&self, a: usize, b: usize) -> Result<Vec<usize>, TopologyError> {
        self.check(a)?;
        self.check(b)?;
        self.try_shortest_path(a, b)
            .ok_or_else(|| TopologyError::Coupling(format!("no path between qubits {a} and {b}")))
    }

    pub(crate) fn try_shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let dist = self.distances_from(b);
        let mut remaining = dist[a]?;
        let mut path = vec![a];
        let mut cur = a;
        while remaining > 0 {
            // neighbors are sorted, so the first one on a shortest route is
            // the lexicographically smallest continuation
            cur = *self.neighbors[cur]
                .iter()
                .find(|&&v| dist[v] == Some(remaining - 1))?;
            path.push(cur);
            remaining -= 1;
        }
        Some(path)
    }
}

/// One processor in the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: String,
    pub coupling: CouplingMap,
    pub comm_qubits: BTreeSet<usize>,
}

impl DeviceSpec {
    pub fn new(
        id: impl Into<String>,
        coupling: CouplingMap,
        comm_qubits: impl IntoIterator<Item = usize>,
    ) -> Result<Self, TopologyError> {
        let id = id.into();
        let comm_qubits: BTreeSet<usize> = comm_qubits.into_iter().collect();
        if let Some(&q) = comm_qubits.iter().find(|&&q| q >= coupling.n_qubits()) {
            return Err(TopologyError::Invariant(format!(
                "device {id}: communication qubit {q} out of range"
            )));
        }
        if comm_qubits.len() >= coupling.n_qubits() {
            return Err(TopologyError::Invariant(format!(
                "device {id}: no data qubits left"
            )));
        }
        Ok(DeviceSpec {
            id,
            coupling,
            comm_qubits,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.coupling.n_qubits()
    }

    pub fn data_qubits(&self) -> Vec<usize> {
        (0..self.n_qubits())
            .filter(|q| !self.comm_qubits.contains(q))
            .collect()
    }

    pub fn is_comm(&self, local: usize) -> bool {
        self.comm_qubits.contains(&local)
    }
}

/// Endpoint of a quantum link: `(device id, local comm qubit)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkEnd {
    pub device: String,
    pub qubit: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumLink {
    pub a: LinkEnd,
    pub b: LinkEnd,
    /// Relative cost units per generated pair.
    pub epr_cost: f64,
}

pub const DEFAULT_EPR_COST: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    devices: Vec<DeviceSpec>,
    links: Vec<QuantumLink>,
    #[serde(skip)]
    offsets: Vec<usize>,
}

/// Physical qubit located on a device, by device position and local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub device: usize,
    pub local: usize,
}

impl NetworkTopology {
    pub fn new(devices: Vec<DeviceSpec>, links: Vec<QuantumLink>) -> Result<Self, TopologyError> {
        let mut seen = BTreeSet::new();
        for d in &devices {
            if !seen.insert(d.id.as_str()) {
                return Err(TopologyError::Invariant(format!(
                    "duplicate device id `{}`",
                    d.id
                )));
            }
        }
        if devices.is_empty() {
            return Err(TopologyError::Invariant("network has no devices".into()));
        }
        let mut offsets = Vec::with_capacity(devices.len());
        let mut acc = 0;
        for d in &devices {
            offsets.push(acc);
            acc += d.n_qubits();
        }
        let net = NetworkTopology {
            devices,
            links,
            offsets,
        };
        for (i, link) in net.links.iter().enumerate() {
            let da = net.endpoint_device(&link.a, i)?;
            let db = net.endpoint_device(&link.b, i)?;
            if da == db {
                return Err(TopologyError::Invariant(format!(
                    "link {i} joins device `{}` to itself",
                    link.a.device
                )));
            }
            if !(link.epr_cost >= 0.0 && link.epr_cost.is_finite()) {
                return Err(TopologyError::Invariant(format!(
                    "link {i} has invalid epr_cost {}",
                    link.epr_cost
                )));
            }
        }
        let reach = net.device_distances(0);
        if let Some(d) = reach.iter().position(|d| d.is_none()) {
            return Err(TopologyError::Invariant(format!(
                "device `{}` is not reachable over quantum links",
                net.devices[d].id
            )));
        }
        Ok(net)
    }

    fn endpoint_device(&self, end: &LinkEnd, link: usize) -> Result<usize, TopologyError> {
        let d = self.device_index(&end.device).ok_or_else(|| {
            TopologyError::Invariant(format!("link {link} names unknown device `{}`", end.device))
        })?;
        if !self.devices[d].is_comm(end.qubit) {
            return Err(TopologyError::Invariant(format!(
                "link {link} endpoint {}:{} is not a communication qubit",
                end.device, end.qubit
            )));
        }
        Ok(d)
    }

    pub fn devices(&self) -> &[DeviceSpec] {
        &self.devices
    }

    pub fn links(&self) -> &[QuantumLink] {
        &self.links
    }

    pub fn device_index(&self, id: &str) -> Option<usize> {
        self.devices.iter().position(|d| d.id == id)
    }

    pub fn offset(&self, device: usize) -> usize {
        self.offsets[device]
    }

    pub fn total_qubits(&self) -> usize {
        self.devices.iter().map(|d| d.n_qubits()).sum()
    }

    pub fn total_data_qubits(&self) -> usize {
        self.devices.iter().map(|d| d.data_qubits().len()).sum()
    }

    pub fn global(&self, site: Site) -> usize {
        self.offsets[site.device] + site.local
    }

    pub fn site(&self, global: usize) -> Site {
        let device = self.offsets.partition_point(|&o| o <= global) - 1;
        Site {
            device,
            local: global - self.offsets[device],
        }
    }

    /// Device positions and global comm qubits of a link's two ends.
    pub fn link_ends(&self, link: usize) -> ((usize, usize), (usize, usize)) {
        let l = &self.links[link];
        let resolve = |end: &LinkEnd| {
            let d = self.device_index(&end.device).expect("validated link");
            (
                d,
                self.global(Site {
                    device: d,
                    local: end.qubit,
                }),
            )
        };
        (resolve(&l.a), resolve(&l.b))
    }

    /// True if `(a, b)` are the two ends of some link, in either order.
    pub fn is_link_pair(&self, a: usize, b: usize) -> bool {
        (0..self.links.len()).any(|i| {
            let ((_, x), (_, y)) = self.link_ends(i);
            (x, y) == (a, b) || (x, y) == (b, a)
        })
    }

    fn device_neighbors(&self, device: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.links.len() {
            let ((da, _), (db, _)) = self.link_ends(i);
            if da == device {
                out.push((db, i));
            } else if db == device {
                out.push((da, i));
            }
        }
        out
    }

    fn device_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.devices.len()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for (v, _) in self.device_neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest sequence of link indices from device `from` to device `to`.
    /// Ties go to the lexicographically smallest sequence of device ids,
    /// then to the lowest link index between a fixed device pair.
    pub fn link_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let dist = self.device_distances(to);
        let mut remaining = dist[from]?;
        let mut cur = from;
        let mut path = Vec::with_capacity(remaining);
        while remaining > 0 {
            let (next, link) = self
                .device_neighbors(cur)
                .into_iter()
                .filter(|&(v, _)| dist[v] == Some(remaining - 1))
                .min_by(|a, b| {
                    self.devices[a.0]
                        .id
                        .cmp(&self.devices[b.0].id)
                        .then(a.1.cmp(&b.1))
                })?;
            path.push(link);
            cur = next;
            remaining -= 1;
        }
        Some(path)
    }

    /// Every device's coupling map laid side by side on global indices.
    pub fn union_coupling(&self) -> CouplingMap {
        let edges = self.devices.iter().enumerate().flat_map(|(d, dev)| {
            let off = self.offsets[d];
            dev.coupling.edges().map(move |(c, t)| (c + off, t + off))
        });
        CouplingMap::unchecked(self.total_qubits(), edges).expect("device maps are valid")
    }

    /// Global indices of every communication qubit.
    pub fn comm_globals(&self) -> BTreeSet<usize> {
        self.devices
            .iter()
            .enumerate()
            .flat_map(|(d, dev)| dev.comm_qubits.iter().map(move |&q| (d, q)))
            .map(|(device, local)| self.global(Site { device, local }))
            .collect()
    }
}
