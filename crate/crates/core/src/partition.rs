//! Capacity-constrained assignment of logical qubits to devices.
//!
//! Greedy region growing seeds each device with the heaviest unassigned
//! qubit, then pairwise exchange (plus moves into spare capacity) runs
//! until no single exchange lowers the cut weight.

use serde::{Deserialize, Serialize};

use crate::circuit::InteractionGraph;
use crate::device::{NetworkTopology, Site};
use crate::error::CompileError;

/// `sites[logical]` is the device and local data qubit hosting it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub sites: Vec<Site>,
}

impl Assignment {
    pub fn devices(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.device).collect()
    }

    /// Checks injectivity and that every site is a data qubit.
    pub fn check(&self, net: &NetworkTopology) -> Result<(), CompileError> {
        let mut seen = std::collections::BTreeSet::new();
        for (l, s) in self.sites.iter().enumerate() {
            let dev = net.devices().get(s.device).ok_or_else(|| {
                CompileError::Options(format!("logical {l}: unknown device {}", s.device))
            })?;
            if s.local >= dev.n_qubits() || dev.is_comm(s.local) {
                return Err(CompileError::Options(format!(
                    "logical {l}: {}:{} is not a data qubit",
                    dev.id, s.local
                )));
            }
            if !seen.insert(*s) {
                return Err(CompileError::Options(format!(
                    "logical {l}: {}:{} assigned twice",
                    dev.id, s.local
                )));
            }
        }
        Ok(())
    }
}

/// Greedy growth: device by device, seed with the highest-degree unassigned
/// qubit and absorb the most strongly connected one until full.
pub fn greedy_grow(graph: &InteractionGraph, capacities: &[usize]) -> Vec<usize> {
    let n = graph.n_nodes;
    let adj = graph.matrix();
    let degree = graph.degrees();
    let mut part = vec![usize::MAX; n];
    let mut left = n;
    for (d, &cap) in capacities.iter().enumerate() {
        let mut conn = vec![0u64; n];
        for _ in 0..cap {
            if left == 0 {
                break;
            }
            // first pick is the seed: every conn is 0 so degree decides
            let pick = (0..n)
                .filter(|&v| part[v] == usize::MAX)
                .max_by(|&a, &b| {
                    (conn[a], degree[a])
                        .cmp(&(conn[b], degree[b]))
                        .then(b.cmp(&a))
                })
                .expect("unassigned vertex exists");
            part[pick] = d;
            left -= 1;
            for v in 0..n {
                conn[v] += adj[pick][v];
            }
        }
    }
    part
}

fn gain_move(adj: &[Vec<u64>], part: &[usize], v: usize, to: usize) -> i64 {
    let from = part[v];
    let (mut w_to, mut w_from) = (0i64, 0i64);
    for (u, &w) in adj[v].iter().enumerate() {
        if u == v {
            continue;
        }
        if part[u] == to {
            w_to += w as i64;
        } else if part[u] == from {
            w_from += w as i64;
        }
    }
    w_to - w_from
}

/// Repeatedly applies the best cut-reducing exchange of two qubits on
/// different devices, or move of one qubit into a device with spare
/// capacity, until none reduces the cut.
pub fn refine(graph: &InteractionGraph, mut part: Vec<usize>, capacities: &[usize]) -> Vec<usize> {
    let n = graph.n_nodes;
    let adj = graph.matrix();
    let mut load = vec![0usize; capacities.len()];
    for &d in &part {
        load[d] += 1;
    }
    loop {
        let mut best: Option<(i64, usize, Option<usize>, usize)> = None;
        let mut consider = |gain: i64, u: usize, v: Option<usize>, to: usize| {
            if gain > 0 && best.is_none_or(|b| gain > b.0) {
                best = Some((gain, u, v, to));
            }
        };
        for u in 0..n {
            for v in u + 1..n {
                if part[u] == part[v] {
                    continue;
                }
                let gain = gain_move(&adj, &part, u, part[v]) + gain_move(&adj, &part, v, part[u])
                    - 2 * adj[u][v] as i64;
                consider(gain, u, Some(v), part[v]);
            }
            for (d, &cap) in capacities.iter().enumerate() {
                if d != part[u] && load[d] < cap {
                    consider(gain_move(&adj, &part, u, d), u, None, d);
                }
            }
        }
        match best {
            None => return part,
            Some((_, u, Some(v), _)) => part.swap(u, v),
            Some((_, u, None, to)) => {
                load[part[u]] -= 1;
                load[to] += 1;
                part[u] = to;
            }
        }
    }
}

/// Baseline: logical `i` goes to the next device with room, cycling.
pub fn round_robin(n: usize, capacities: &[usize]) -> Vec<usize> {
    let mut load = vec![0usize; capacities.len()];
    let mut part = Vec::with_capacity(n);
    let mut d = 0;
    for _ in 0..n {
        while load[d] >= capacities[d] {
            d = (d + 1) % capacities.len();
        }
        part.push(d);
        load[d] += 1;
        d = (d + 1) % capacities.len();
    }
    part
}

/// Device-level partition: greedy growth followed by refinement.
pub fn partition_devices(
    graph: &InteractionGraph,
    capacities: &[usize],
) -> Result<Vec<usize>, CompileError> {
    let available: usize = capacities.iter().sum();
    if graph.n_nodes > available {
        return Err(CompileError::Capacity {
            needed: graph.n_nodes,
            available,
        });
    }
    Ok(refine(graph, greedy_grow(graph, capacities), capacities))
}

/// Assigns every logical qubit to a device and a data qubit on it. Qubits
/// with remote interactions get the data qubits closest to the device's
/// communication qubits.
pub fn partition(
    graph: &InteractionGraph,
    net: &NetworkTopology,
) -> Result<Assignment, CompileError> {
    let capacities: Vec<usize> = net
        .devices()
        .iter()
        .map(|d| d.data_qubits().len())
        .collect();
    let part = partition_devices(graph, &capacities)?;
    Ok(place_within_devices(graph, net, &part))
}

pub(crate) fn place_within_devices(
    graph: &InteractionGraph,
    net: &NetworkTopology,
    part: &[usize],
) -> Assignment {
    let adj = graph.matrix();
    let remote_weight: Vec<u64> = (0..graph.n_nodes)
        .map(|v| {
            (0..graph.n_nodes)
                .filter(|&u| part[u] != part[v])
                .map(|u| adj[v][u])
                .sum()
        })
        .collect();
    let mut sites = vec![
        Site {
            device: 0,
            local: 0
        };
        graph.n_nodes
    ];
    for (d, dev) in net.devices().iter().enumerate() {
        let mut logical: Vec<usize> = (0..graph.n_nodes).filter(|&v| part[v] == d).collect();
        logical.sort_by_key(|&v| (std::cmp::Reverse(remote_weight[v]), v));
        let comm_dist: Vec<Vec<Option<usize>>> = dev
            .comm_qubits
            .iter()
            .map(|&c| dev.coupling.distances_from(c))
            .collect();
        let mut slots = dev.data_qubits();
        slots.sort_by_key(|&q| {
            (
                comm_dist
                    .iter()
                    .filter_map(|dist| dist[q])
                    .min()
                    .unwrap_or(usize::MAX),
                q,
            )
        });
        for (v, q) in logical.into_iter().zip(slots) {
            sites[v] = Site {
                device: d,
                local: q,
            };
        }
    }
    Assignment { sites }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Gate};
    use crate::network::preset;

    fn graph(n: usize, edges: &[(usize, usize)]) -> InteractionGraph {
        let c = Circuit::with_gates(n, 0, edges.iter().map(|&(a, b)| Gate::cnot(a, b)).collect());
        c.interaction_graph().unwrap()
    }

    #[test]
    fn fits_on_one_device() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let part = partition_devices(&g, &[4, 4]).unwrap();
        assert_eq!(part, vec![0, 0, 0]);
        assert_eq!(g.cut_weight(&part), 0);
    }

    #[test]
    fn capacity_exceeded() {
        let g = graph(5, &[]);
        assert_eq!(
            partition_devices(&g, &[2, 2]),
            Err(CompileError::Capacity {
                needed: 5,
                available: 4
            })
        );
    }

    #[test]
    fn round_robin_respects_capacity() {
        assert_eq!(round_robin(5, &[1, 4]), vec![0, 1, 1, 1, 1]);
        assert_eq!(round_robin(4, &[2, 2]), vec![0, 1, 0, 1]);
    }

    #[test]
    fn refinement_fixes_bad_start() {
        let g = graph(4, &[(0, 1), (0, 1), (2, 3), (2, 3), (1, 2)]);
        let part = refine(&g, vec![0, 1, 0, 1], &[2, 2]);
        assert_eq!(g.cut_weight(&part), 1);
    }

    #[test]
    fn placement_prefers_comm_neighbourhood() {
        let net = preset("2x-ibmqx2-linked").unwrap();
        // 0-1 interact across devices, 2 and 3 idle
        let g = graph(4, &[(0, 1)]);
        let a = place_within_devices(&g, &net, &[0, 1, 0, 1]);
        // data qubits 2 and 3 touch comm qubit 4 on ibmqx2; 2 wins the tie
        assert_eq!(
            a.sites[0],
            Site {
                device: 0,
                local: 2
            }
        );
        assert_eq!(
            a.sites[1],
            Site {
                device: 1,
                local: 2
            }
        );
        assert_eq!(
            a.sites[2],
            Site {
                device: 0,
                local: 3
            }
        );
        a.check(&net).unwrap();
    }
}
