//! `dqc`: compile, verify, simulate and inspect distributed quantum circuits.
//!
//! Exit status: 0 on success, 1 when an input cannot be read or parsed,
//! 2 when inputs parse but are rejected (capacity, validation, failed
//! verification).

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use thiserror::Error;

use dqc_core::compiler::{compile, verify_lowered, CompileOptions, VerifyReport, VerifyStatus};
use dqc_core::network::{preset, NetworkConfig};
use dqc_core::sim::{run_exhaustive, run_sampled};
use dqc_core::{
    load_network, qasm, Circuit, CircuitError, CompileError, NetworkTopology, RoutingMode,
    SimError, StateVector, TopologyError,
};

use report::{sha256_hex, Report, SimBranch, Simulation, Topology, TopologyDevice, TopologyLink};

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Rejected(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Parse(_) => 1,
            CliError::Rejected(_) => 2,
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match e {
            CompileError::Circuit(CircuitError::Parse { .. })
            | CompileError::Topology(TopologyError::Parse { .. }) => CliError::Parse(e.to_string()),
            e => CliError::Rejected(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CompileError::from(e).into()
    }
}

#[derive(Parser)]
#[command(name = "dqc", version, about = "Distributed quantum circuit compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a circuit for a network and write the lowered circuit.
    Compile {
        circuit: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        compile: CompileArgs,
        /// Lowered circuit destination; the plan goes to `<out>.plan.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the equivalence check.
        #[arg(long)]
        no_verify: bool,
    },
    /// Check a compiled plan (or a fresh compilation) against the circuit.
    Verify {
        circuit: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        compile: CompileArgs,
        /// Plan written by `compile --out`.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Simulate a circuit from |0...0>.
    Simulate {
        circuit: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
        mode: Mode,
    },
    /// Print the metrics block, for a circuit or for the bare network.
    Metrics {
        circuit: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        compile: CompileArgs,
    },
    /// List devices, links and coupling edges of a network.
    Topology {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Network config path or preset name (`ibmqx3`, `2x-ibmqx2-linked`).
    #[arg(long, default_value = "2x-ibmqx2-linked")]
    network: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the JSON report instead of the human summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long, value_enum, default_value_t = Routing::Restore)]
    routing: Routing,
    #[arg(long, default_value_t = dqc_core::compiler::DEFAULT_STRATEGY_THRESHOLD)]
    strategy_threshold: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Routing {
    Restore,
    Permute,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sampled,
    Exhaustive,
}

impl CompileArgs {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            strategy_threshold: self.strategy_threshold,
            routing: match self.routing {
                Routing::Restore => RoutingMode::Restore,
                Routing::Permute => RoutingMode::Permute,
            },
            ..CompileOptions::default()
        }
    }

    fn record(&self, report: &mut Report) {
        let routing = match self.routing {
            Routing::Restore => "restore",
            Routing::Permute => "permute",
        };
        report.options.insert("routing".into(), routing.into());
        report.options.insert(
            "strategy_threshold".into(),
            self.strategy_threshold.to_string(),
        );
    }
}

/// Fields of a saved plan that verification needs.
#[derive(Deserialize)]
struct SavedPlan {
    initial_placement: Vec<usize>,
    final_placement: Vec<usize>,
    circuit: Circuit,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_circuit(path: &Path, report: &mut Report) -> Result<Circuit, CliError> {
    let text = read(path)?;
    report
        .inputs
        .insert("circuit_sha256".into(), sha256_hex(text.as_bytes()));
    qasm::parse(&text).map_err(|e| match e {
        CircuitError::Parse { .. } => CliError::Parse(format!("{}: {e}", path.display())),
        e => CliError::Rejected(format!("{}: {e}", path.display())),
    })
}

fn load_net(common: &Common, report: &mut Report) -> Result<NetworkTopology, CliError> {
    let net = match preset(&common.network) {
        Some(net) => net,
        None => {
            let text = read(Path::new(&common.network))?;
            load_network(&text).map_err(|e| match e {
                TopologyError::Parse { .. } => CliError::Parse(format!("{}: {e}", common.network)),
                e => CliError::Rejected(format!("{}: {e}", common.network)),
            })?
        }
    };
    // the digest covers the canonical config so a preset and its expansion agree
    let canonical =
        serde_json::to_string(&NetworkConfig::from_topology(&net)).expect("config serializes");
    report
        .inputs
        .insert("network_sha256".into(), sha256_hex(canonical.as_bytes()));
    report
        .options
        .insert("network".into(), common.network.clone());
    Ok(net)
}

fn verification_line(v: &VerifyReport) -> String {
    match v.status {
        VerifyStatus::Passed => format!(
            "verification: passed (max infidelity {:e}, {} inputs, {} branches)",
            v.max_infidelity, v.inputs_checked, v.branches_checked
        ),
        _ => format!(
            "verification: {:?} ({})",
            v.status,
            v.reason.as_deref().unwrap_or("")
        )
        .to_lowercase(),
    }
}

fn check_verified(v: &VerifyReport) -> Result<(), CliError> {
    match v.status {
        VerifyStatus::Failed => Err(CliError::Rejected(format!(
            "verification failed: {}",
            v.reason.as_deref().unwrap_or("")
        ))),
        _ => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compile {
            circuit,
            common,
            compile: args,
            out,
            no_verify,
        } => {
            let mut report = Report::new("compile", common.seed);
            args.record(&mut report);
            report
                .options
                .insert("verify".into(), (!no_verify).to_string());
            let c = load_circuit(&circuit, &mut report)?;
            let net = load_net(&common, &mut report)?;
            let plan = compile(&c, &net, &args.options())?;
            let lowered = qasm::emit(&plan.circuit);
            if let Some(out) = &out {
                write(out, &lowered)?;
                let mut plan_path = out.clone().into_os_string();
                plan_path.push(".plan.json");
                let plan_json =
                    serde_json::to_string_pretty(&plan).expect("plan serializes") + "\n";
                write(Path::new(&plan_path), &plan_json)?;
            }
            if !no_verify {
                report.verification = Some(verify_lowered(
                    &plan.circuit,
                    &plan.initial_placement,
                    &plan.final_placement,
                    &c,
                    common.seed,
                )?);
            }
            report.metrics = Some(plan.metrics.clone());
            report.pass_counts = Some(plan.pass_counts.clone());
            if common.json {
                print!("{}", report.to_json());
            } else {
                if out.is_none() {
                    print!("{lowered}");
                }
                let m = &plan.metrics;
                eprintln!(
                    "remote ops {} ({} telegate, {} teledata), EPR pairs {} consumed / {} generated",
                    m.remote_op_count, m.telegate_count, m.teledata_count, m.epr_pairs_consumed, m.epr_pairs_generated
                );
                eprintln!(
                    "gates {} -> {} -> {}, depth {}, cost {}",
                    plan.pass_counts.input,
                    plan.pass_counts.after_remote_lowering,
                    plan.pass_counts.after_routing,
                    m.lowered_depth,
                    m.total_cost
                );
                if let Some(v) = &report.verification {
                    eprintln!("{}", verification_line(v));
                }
            }
            report.verification.as_ref().map_or(Ok(()), check_verified)
        }
        Command::Verify {
            circuit,
            common,
            compile: args,
            plan,
        } => {
            let mut report = Report::new("verify", common.seed);
            let c = load_circuit(&circuit, &mut report)?;
            let v = match plan {
                Some(path) => {
                    let text = read(&path)?;
                    report
                        .inputs
                        .insert("plan_sha256".into(), sha256_hex(text.as_bytes()));
                    let saved: SavedPlan = serde_json::from_str(&text).map_err(|e| {
                        CliError::Parse(format!("{}: line {}: {e}", path.display(), e.line()))
                    })?;
                    verify_lowered(
                        &saved.circuit,
                        &saved.initial_placement,
                        &saved.final_placement,
                        &c,
                        common.seed,
                    )?
                }
                None => {
                    args.record(&mut report);
                    let net = load_net(&common, &mut report)?;
                    let plan = compile(&c, &net, &args.options())?;
                    report.metrics = Some(plan.metrics.clone());
                    report.pass_counts = Some(plan.pass_counts.clone());
                    verify_lowered(
                        &plan.circuit,
                        &plan.initial_placement,
                        &plan.final_placement,
                        &c,
                        common.seed,
                    )?
                }
            };
            if common.json {
                report.verification = Some(v.clone());
                print!("{}", report.to_json());
            } else {
                println!("{}", verification_line(&v));
            }
            check_verified(&v)
        }
        Command::Simulate {
            circuit,
            common,
            mode,
        } => {
            let mut report = Report::new("simulate", common.seed);
            let c = load_circuit(&circuit, &mut report)?;
            let start = StateVector::zero(c.n_qubits)?;
            let (mode_name, mut branches) = match mode {
                Mode::Exhaustive => ("exhaustive", run_exhaustive(&c, &start)?),
                Mode::Sampled => ("sampled", vec![run_sampled(&c, &start, common.seed)?]),
            };
            report.options.insert("mode".into(), mode_name.into());
            branches.sort_by(|a, b| a.classical_bits.cmp(&b.classical_bits));
            let sim = Simulation {
                mode: mode_name.into(),
                n_qubits: c.n_qubits,
                branches: branches
                    .iter()
                    .map(|b| SimBranch {
                        bits: b.bit_string(),
                        probability: b.probability,
                    })
                    .collect(),
            };
            if common.json {
                report.simulation = Some(sim);
                print!("{}", report.to_json());
            } else {
                println!("{} branch(es), bit 0 first", sim.branches.len());
                for b in &sim.branches {
                    let bits = if b.bits.is_empty() { "-" } else { &b.bits };
                    println!("{bits}\t{}", b.probability);
                }
            }
            Ok(())
        }
        Command::Metrics {
            circuit,
            common,
            compile: args,
        } => {
            let mut report = Report::new("metrics", common.seed);
            args.record(&mut report);
            let c = match &circuit {
                Some(path) => load_circuit(path, &mut report)?,
                None => Circuit::new(0, 0),
            };
            let net = load_net(&common, &mut report)?;
            let plan = compile(&c, &net, &args.options())?;
            let m = plan.metrics.clone();
            if common.json {
                report.metrics = Some(m);
                report.pass_counts = Some(plan.pass_counts);
                print!("{}", report.to_json());
            } else {
                println!("remote_op_count\t{}", m.remote_op_count);
                println!("telegate_count\t{}", m.telegate_count);
                println!("teledata_count\t{}", m.teledata_count);
                println!("epr_pairs_generated\t{}", m.epr_pairs_generated);
                println!("epr_pairs_consumed\t{}", m.epr_pairs_consumed);
                println!("lowered_depth\t{}", m.lowered_depth);
                println!("lowered_gate_count\t{}", m.lowered_gate_count);
                println!("total_cost\t{}", m.total_cost);
                println!("isolated_dimension\t{}", m.isolated_dimension);
                println!(
                    "clustered_dimension\t{} (2^{})",
                    m.clustered_dimension, m.clustered_log2
                );
            }
            Ok(())
        }
        Command::Topology { common } => {
            let mut report = Report::new("topology", common.seed);
            let net = load_net(&common, &mut report)?;
            let topo = Topology {
                devices: net
                    .devices()
                    .iter()
                    .enumerate()
                    .map(|(i, d)| TopologyDevice {
                        id: d.id.clone(),
                        n_qubits: d.n_qubits(),
                        global_offset: net.offset(i),
                        data_qubits: d.data_qubits(),
                        comm_qubits: d.comm_qubits.iter().copied().collect(),
                        edges: d.coupling.edges().map(|(c, t)| [c, t]).collect(),
                    })
                    .collect(),
                links: net
                    .links()
                    .iter()
                    .map(|l| TopologyLink {
                        a: format!("{}:{}", l.a.device, l.a.qubit),
                        b: format!("{}:{}", l.b.device, l.b.qubit),
                        epr_cost: l.epr_cost,
                    })
                    .collect(),
            };
            if common.json {
                report.topology = Some(topo);
                print!("{}", report.to_json());
            } else {
                for d in &topo.devices {
                    println!(
                        "device {} qubits {} offset {} data {:?} comm {:?}",
                        d.id, d.n_qubits, d.global_offset, d.data_qubits, d.comm_qubits
                    );
                    let edges: Vec<String> =
                        d.edges.iter().map(|[c, t]| format!("{c}->{t}")).collect();
                    println!("  edges {}", edges.join(" "));
                }
                for l in &topo.links {
                    println!("link {} <-> {} epr_cost {}", l.a, l.b, l.epr_cost);
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
