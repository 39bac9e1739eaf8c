//! Compiling quantum circuits for networks of small devices joined by
//! entanglement links.
//!
//! A circuit is partitioned across devices, cross-device gates become
//! teleportation primitives that consume EPR pairs, and each device's part
//! is routed onto its coupling map. A statevector simulator checks the
//! result.

pub mod circuit;
pub mod compiler;
pub mod device;
pub mod error;
pub mod network;
pub mod partition;
pub mod qasm;
pub mod remote;
pub mod router;
pub mod sim;

pub use circuit::{Circuit, Gate, InteractionGraph, Pauli};
pub use compiler::{
    compile, verify, CompileOptions, CostWeights, DistributedPlan, Metrics, VerifyReport,
    VerifyStatus,
};
pub use device::{CouplingMap, DeviceSpec, NetworkTopology, QuantumLink, Site};
pub use error::{CircuitError, CompileError, RemoteError, RouteError, SimError, TopologyError};
pub use network::{load_network, preset, NetworkConfig};
pub use router::{route, Layout, RoutingMode};
pub use sim::{run_exhaustive, run_sampled, Branch, StateVector};
