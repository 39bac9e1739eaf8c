//! JSON network configuration and built-in presets.

use serde::{Deserialize, Serialize};

use crate::device::{
    CouplingMap, DeviceSpec, LinkEnd, NetworkTopology, QuantumLink, DEFAULT_EPR_COST,
};
use crate::error::TopologyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub id: String,
    pub n_qubits: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub comm_qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub a: (String, usize),
    pub b: (String, usize),
    #[serde(default = "default_cost")]
    pub epr_cost: f64,
}

fn default_cost() -> f64 {
    DEFAULT_EPR_COST
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub devices: Vec<DeviceConfig>,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
}

impl NetworkConfig {
    pub fn build(&self) -> Result<NetworkTopology, TopologyError> {
        let devices = self
            .devices
            .iter()
            .map(|d| {
                let coupling =
                    CouplingMap::new(d.n_qubits, d.edges.iter().map(|e| (e[0], e[1])))
                        .map_err(|e| TopologyError::Invariant(format!("device `{}`: {e}", d.id)))?;
                DeviceSpec::new(d.id.clone(), coupling, d.comm_qubits.iter().copied())
            })
            .collect::<Result<Vec<_>, _>>()?;
        let links = self
            .links
            .iter()
            .map(|l| QuantumLink {
                a: LinkEnd {
                    device: l.a.0.clone(),
                    qubit: l.a.1,
                },
                b: LinkEnd {
                    device: l.b.0.clone(),
                    qubit: l.b.1,
                },
                epr_cost: l.epr_cost,
            })
            .collect();
        NetworkTopology::new(devices, links)
    }

    pub fn from_topology(net: &NetworkTopology) -> Self {
        NetworkConfig {
            devices: net
                .devices()
                .iter()
                .map(|d| DeviceConfig {
                    id: d.id.clone(),
                    n_qubits: d.n_qubits(),
                    edges: d.coupling.edges().map(|(c, t)| [c, t]).collect(),
                    comm_qubits: d.comm_qubits.iter().copied().collect(),
                })
                .collect(),
            links: net
                .links()
                .iter()
                .map(|l| LinkConfig {
                    a: (l.a.device.clone(), l.a.qubit),
                    b: (l.b.device.clone(), l.b.qubit),
                    epr_cost: l.epr_cost,
                })
                .collect(),
        }
    }
}

/// Parses and validates a JSON network config.
pub fn load_network(text: &str) -> Result<NetworkTopology, TopologyError> {
    let config: NetworkConfig = serde_json::from_str(text).map_err(|e| TopologyError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    config.build()
}

/// Transcription of the 16-qubit IBM QX3 coupling map (qiskit backend
/// configuration `ibmqx3`, coupling_map field). Preset version 1.
pub const IBMQX3_EDGES: [(usize, usize); 20] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 14),
    (4, 3),
    (4, 5),
    (6, 7),
    (6, 11),
    (7, 10),
    (8, 7),
    (9, 8),
    (9, 10),
    (11, 10),
    (12, 5),
    (12, 11),
    (12, 13),
    (13, 4),
    (13, 14),
    (15, 0),
    (15, 14),
];

/// Transcription of the 5-qubit IBM QX2 coupling map (qiskit backend
/// configuration `ibmqx2`). Preset version 1.
pub const IBMQX2_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 2), (3, 2), (3, 4), (4, 2)];

/// Local index of the communication qubit in the linked ibmqx2 preset.
/// Qubit 4 touches only qubits 2 and 3, so data qubits 0 and 1 reach the
/// link through swaps.
pub const IBMQX2_COMM_QUBIT: usize = 4;

pub const PRESETS: [&str; 2] = ["ibmqx3", "2x-ibmqx2-linked"];

pub fn preset(name: &str) -> Option<NetworkTopology> {
    match name {
        "ibmqx3" => {
            let coupling = CouplingMap::new(16, IBMQX3_EDGES).expect("preset is valid");
            let dev = DeviceSpec::new("ibmqx3", coupling, []).expect("preset is valid");
            Some(NetworkTopology::new(vec![dev], vec![]).expect("preset is valid"))
        }
        "2x-ibmqx2-linked" => {
            let dev = |id: &str| {
                let coupling = CouplingMap::new(5, IBMQX2_EDGES).expect("preset is valid");
                DeviceSpec::new(id, coupling, [IBMQX2_COMM_QUBIT]).expect("preset is valid")
            };
            let link = QuantumLink {
                a: LinkEnd {
                    device: "A".into(),
                    qubit: IBMQX2_COMM_QUBIT,
                },
                b: LinkEnd {
                    device: "B".into(),
                    qubit: IBMQX2_COMM_QUBIT,
                },
                epr_cost: DEFAULT_EPR_COST,
            };
            Some(
                NetworkTopology::new(vec![dev("A"), dev("B")], vec![link])
                    .expect("preset is valid"),
            )
        }
        _ => None,
    }
}

/// Resolves a preset name first, then falls back to parsing `text` as JSON.
pub fn preset_or_config(name_or_text: &str) -> Result<NetworkTopology, TopologyError> {
    match preset(name_or_text.trim()) {
        Some(net) => Ok(net),
        None => load_network(name_or_text),
    }
}
