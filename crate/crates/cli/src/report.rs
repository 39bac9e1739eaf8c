use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

use dqc_core::compiler::{Metrics, PassCounts, VerifyReport};

/// Bumped whenever a field of [`Report`] changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Machine-readable result of one command. Field order is fixed so equal
/// inputs serialize to equal bytes.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    /// Options as given on the command line, after defaults.
    pub options: BTreeMap<String, String>,
    /// SHA-256 of each input: circuit text, canonical network config, plan.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass_counts: Option<PassCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<Simulation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            options: BTreeMap::new(),
            inputs: BTreeMap::new(),
            seed,
            metrics: None,
            verification: None,
            pass_counts: None,
            simulation: None,
            topology: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize)]
pub struct SimBranch {
    /// Classical register, bit 0 first.
    pub bits: String,
    pub probability: f64,
}

#[derive(Debug, Serialize)]
pub struct Simulation {
    pub mode: String,
    pub n_qubits: usize,
    pub branches: Vec<SimBranch>,
}

#[derive(Debug, Serialize)]
pub struct TopologyDevice {
    pub id: String,
    pub n_qubits: usize,
    pub global_offset: usize,
    pub data_qubits: Vec<usize>,
    pub comm_qubits: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Serialize)]
pub struct TopologyLink {
    pub a: String,
    pub b: String,
    pub epr_cost: f64,
}

#[derive(Debug, Serialize)]
pub struct Topology {
    pub devices: Vec<TopologyDevice>,
    pub links: Vec<TopologyLink>,
}
