//! The distributed compiler: partition, pick a remote strategy per gate,
//! lower remote primitives, route every device locally, and account for
//! the resources used.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::circuit::{Circuit, Gate, QubitId};
use crate::device::{NetworkTopology, Site};
use crate::error::{CompileError, SimError};
use crate::partition::{partition, Assignment};
use crate::remote::{
    lower_teledata, lower_telegate, swap_entanglement, ClbitPool, EprLedger, RemoteKind, RemoteOp,
};
use crate::router::{route_with, Layout, RouteContext, RoutingMode};
use crate::sim::{for_each_branch, random_qubit, run_exhaustive, StateVector, DEFAULT_QUBIT_CAP};

pub const DEFAULT_STRATEGY_THRESHOLD: usize = 3;
pub const VERIFY_TOL: f64 = 1e-10;
pub const VERIFY_RANDOM_INPUTS: usize = 20;

/// Per-gate weights of the cost model. Relative units only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub single_qubit: f64,
    pub local_cnot: f64,
    /// Multiplied by the link's `epr_cost` for every generated pair.
    pub epr_generation: f64,
    pub measurement: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            single_qubit: 1.0,
            local_cnot: 10.0,
            epr_generation: 100.0,
            measurement: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    /// Consecutive remote gates needed before a qubit is teleported over.
    pub strategy_threshold: usize,
    pub routing: RoutingMode,
    pub weights: CostWeights,
    /// Fixed placement; partitioning is skipped when set.
    pub assignment: Option<Assignment>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            strategy_threshold: DEFAULT_STRATEGY_THRESHOLD,
            routing: RoutingMode::Restore,
            weights: CostWeights::default(),
            assignment: None,
        }
    }
}

impl CompileOptions {
    fn check(&self) -> Result<(), CompileError> {
        if self.strategy_threshold == 0 {
            return Err(CompileError::Options(
                "strategy threshold must be at least 1".into(),
            ));
        }
        let w = &self.weights;
        for (name, v) in [
            ("single_qubit", w.single_qubit),
            ("local_cnot", w.local_cnot),
            ("epr_generation", w.epr_generation),
            ("measurement", w.measurement),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CompileError::Options(format!(
                    "cost weight {name} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Telegate,
    /// Teleport `qubit` to `to_device` for the coming burst of gates.
    Teledata {
        qubit: QubitId,
        to_device: usize,
    },
}

/// Number of upcoming two-qubit interactions of `qubit` whose partner sits
/// on `device`, starting at gate `at` and stopping at the first interaction
/// with a partner elsewhere. Single-qubit gates on `qubit` do not break the
/// run; a SWAP counts as its three CNOTs.
pub fn remote_run_length(
    gates: &[Gate],
    at: usize,
    qubit: QubitId,
    device: usize,
    device_of: impl Fn(QubitId) -> usize,
) -> usize {
    let mut run = 0;
    for g in &gates[at..] {
        let (a, b, weight) = match *g {
            Gate::Cnot { control, target } => (control, target, 1),
            Gate::Swap(a, b) => (a, b, 3),
            _ => continue,
        };
        let partner = if a == qubit {
            b
        } else if b == qubit {
            a
        } else {
            continue;
        };
        if device_of(partner) != device {
            break;
        }
        run += weight;
    }
    run
}

/// Chooses how to execute the remote two-qubit gate at `gates[at]`.
///
/// Telegate costs one pair per gate; teledata costs two (there and back),
/// so a qubit moves only when its run against one device reaches
/// `threshold`. Ties keep qubits home.
pub fn select_strategy(
    gates: &[Gate],
    at: usize,
    device_of: impl Fn(QubitId) -> usize,
    threshold: usize,
) -> Strategy {
    let (a, b) = match gates[at] {
        Gate::Cnot { control, target } => (control, target),
        Gate::Swap(a, b) => (a, b),
        _ => return Strategy::Telegate,
    };
    let (da, db) = (device_of(a), device_of(b));
    if da == db {
        return Strategy::Telegate;
    }
    let run_a = remote_run_length(gates, at, a, db, &device_of);
    let run_b = remote_run_length(gates, at, b, da, &device_of);
    let (qubit, run, to_device) = if run_b > run_a {
        (b, run_b, da)
    } else {
        (a, run_a, db)
    };
    if run >= threshold {
        Strategy::Teledata { qubit, to_device }
    } else {
        Strategy::Telegate
    }
}

fn serialize_biguint<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub remote_op_count: u64,
    pub telegate_count: u64,
    pub teledata_count: u64,
    pub epr_pairs_generated: u64,
    pub epr_pairs_consumed: u64,
    pub lowered_depth: usize,
    pub lowered_gate_count: usize,
    pub total_cost: f64,
    #[serde(serialize_with = "serialize_biguint")]
    pub isolated_dimension: BigUint,
    #[serde(serialize_with = "serialize_biguint")]
    pub clustered_dimension: BigUint,
    pub clustered_log2: usize,
}

/// Σ over devices of 2^(device qubits): every device used on its own,
/// with no qubit set aside for communication.
pub fn isolated_dimension(net: &NetworkTopology) -> BigUint {
    net.devices()
        .iter()
        .map(|d| BigUint::from(1u8) << d.n_qubits())
        .sum()
}

/// 2^(Σ data qubits): the devices joined into one register. A lone device
/// needs no communication qubits, so it keeps all of them.
pub fn clustered_log2(net: &NetworkTopology) -> usize {
    if net.devices().len() == 1 {
        net.devices()[0].n_qubits()
    } else {
        net.total_data_qubits()
    }
}

pub fn clustered_dimension(net: &NetworkTopology) -> BigUint {
    BigUint::from(1u8) << clustered_log2(net)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassCounts {
    pub input: usize,
    pub after_remote_lowering: usize,
    pub after_routing: usize,
}

/// Output of [`compile`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributedPlan {
    pub assignment: Assignment,
    /// Global physical qubit holding each logical qubit before execution.
    pub initial_placement: Vec<QubitId>,
    /// Global physical qubit holding each logical qubit afterwards.
    pub final_placement: Vec<QubitId>,
    /// Lowered circuit over every physical qubit of the network. Original
    /// classical bits keep their indices; remote primitives append theirs.
    pub circuit: Circuit,
    pub ledger: EprLedger,
    pub remote_ops: Vec<RemoteOp>,
    pub pass_counts: PassCounts,
    pub cut_weight: u64,
    pub metrics: Metrics,
}

struct Lowering<'a> {
    net: &'a NetworkTopology,
    home: Vec<QubitId>,
    loc: Vec<QubitId>,
    /// Spare data qubits per device, ascending.
    free_slots: Vec<BTreeSet<usize>>,
    migrated: BTreeSet<QubitId>,
    ledger: EprLedger,
    pool: ClbitPool,
    out: Vec<Gate>,
    remote_ops: Vec<RemoteOp>,
}

impl Lowering<'_> {
    fn device(&self, global: QubitId) -> usize {
        self.net.site(global).device
    }

    fn device_of_logical(&self, l: QubitId) -> usize {
        self.device(self.loc[l])
    }

    fn link_path(&self, from: usize, to: usize) -> Result<Vec<usize>, CompileError> {
        self.net.link_path(from, to).ok_or_else(|| {
            CompileError::Unreachable(
                self.net.devices()[from].id.clone(),
                self.net.devices()[to].id.clone(),
            )
        })
    }

    /// Teleports the state on global qubit `src` into global data qubit
    /// `slot` on another device.
    fn teleport(&mut self, src: QubitId, slot: QubitId) -> Result<Vec<usize>, CompileError> {
        let (from, to) = (self.device(src), self.device(slot));
        let path = self.link_path(from, to)?;
        let (gates, pair) = swap_entanglement(&mut self.ledger, &path, from, &mut self.pool)?;
        self.out.extend(gates);
        let clbits = (self.pool.take(), self.pool.take());
        self.out
            .extend(lower_teledata(&mut self.ledger, src, &pair, clbits)?);
        self.out.push(Gate::Swap(pair.far, slot));
        self.ledger.release(pair.far);
        Ok(path)
    }

    fn migrate(&mut self, l: QubitId, to_device: usize) -> Result<bool, CompileError> {
        let dev = &self.net.devices()[to_device];
        let comm_dist: Vec<Vec<Option<usize>>> = dev
            .comm_qubits
            .iter()
            .map(|&c| dev.coupling.distances_from(c))
            .collect();
        // nearest free slot to a communication qubit, lowest index on ties
        let Some(slot_local) = self.free_slots[to_device].iter().copied().min_by_key(|&q| {
            (
                comm_dist
                    .iter()
                    .filter_map(|d| d[q])
                    .min()
                    .unwrap_or(usize::MAX),
                q,
            )
        }) else {
            return Ok(false);
        };
        self.free_slots[to_device].remove(&slot_local);
        let slot = self.net.global(Site {
            device: to_device,
            local: slot_local,
        });
        let src_device = self.device_of_logical(l);
        let path = self.teleport(self.loc[l], slot)?;
        self.loc[l] = slot;
        self.migrated.insert(l);
        self.remote_ops.push(RemoteOp {
            kind: RemoteKind::Teledata {
                qubit: l,
                src_device,
                dst_device: to_device,
            },
            link_path: path,
        });
        Ok(true)
    }

    fn return_home(&mut self, l: QubitId) -> Result<(), CompileError> {
        let slot = self.loc[l];
        let site = self.net.site(slot);
        let path = self.teleport(slot, self.home[l])?;
        self.free_slots[site.device].insert(site.local);
        self.migrated.remove(&l);
        self.loc[l] = self.home[l];
        self.remote_ops.push(RemoteOp {
            kind: RemoteKind::Teledata {
                qubit: l,
                src_device: site.device,
                dst_device: self.device(self.home[l]),
            },
            link_path: path,
        });
        Ok(())
    }

    fn telegate(&mut self, control: QubitId, target: QubitId) -> Result<(), CompileError> {
        let (pc, pt) = (self.loc[control], self.loc[target]);
        let (dc, dt) = (self.device(pc), self.device(pt));
        let path = self.link_path(dc, dt)?;
        let (gates, pair) = swap_entanglement(&mut self.ledger, &path, dc, &mut self.pool)?;
        self.out.extend(gates);
        let clbits = (self.pool.take(), self.pool.take());
        self.out
            .extend(lower_telegate(&mut self.ledger, pc, pt, &pair, clbits)?);
        self.remote_ops.push(RemoteOp {
            kind: RemoteKind::Telegate { control, target },
            link_path: path,
        });
        Ok(())
    }

    fn two_qubit(
        &mut self,
        gates: &[Gate],
        at: usize,
        threshold: usize,
    ) -> Result<(), CompileError> {
        let (a, b) = match gates[at] {
            Gate::Cnot { control, target } => (control, target),
            Gate::Swap(a, b) => (a, b),
            _ => unreachable!("two_qubit called on a single-qubit gate"),
        };
        // a migrated qubit goes home once its partner is not on the device
        // it moved to
        for (x, partner) in [(a, b), (b, a)] {
            if self.migrated.contains(&x)
                && self.device_of_logical(partner) != self.device_of_logical(x)
            {
                self.return_home(x)?;
            }
        }
        if self.device_of_logical(a) == self.device_of_logical(b) {
            self.out.push(gates[at].map_qubits(|q| self.loc[q]));
            return Ok(());
        }
        if let Strategy::Teledata { qubit, to_device } =
            select_strategy(gates, at, |q| self.device_of_logical(q), threshold)
        {
            if !self.migrated.contains(&qubit) && self.migrate(qubit, to_device)? {
                self.out.push(gates[at].map_qubits(|q| self.loc[q]));
                return Ok(());
            }
        }
        match gates[at] {
            Gate::Cnot { control, target } => self.telegate(control, target),
            _ => {
                for (c, t) in [(a, b), (b, a), (a, b)] {
                    self.telegate(c, t)?;
                }
                Ok(())
            }
        }
    }
}

/// Compiles `circuit` for `net`. Deterministic in its inputs.
pub fn compile(
    circuit: &Circuit,
    net: &NetworkTopology,
    options: &CompileOptions,
) -> Result<DistributedPlan, CompileError> {
    options.check()?;
    circuit.ensure_valid()?;
    let available = net.total_data_qubits();
    if circuit.n_qubits > available {
        return Err(CompileError::Capacity {
            needed: circuit.n_qubits,
            available,
        });
    }
    let graph = circuit.interaction_graph()?;
    let assignment = match &options.assignment {
        Some(a) => {
            if a.sites.len() != circuit.n_qubits {
                return Err(CompileError::Options(format!(
                    "assignment covers {} qubits, circuit has {}",
                    a.sites.len(),
                    circuit.n_qubits
                )));
            }
            a.check(net)?;
            a.clone()
        }
        None => partition(&graph, net)?,
    };
    let cut_weight = graph.cut_weight(&assignment.devices());
    let home: Vec<QubitId> = assignment.sites.iter().map(|&s| net.global(s)).collect();
    let mut free_slots: Vec<BTreeSet<usize>> = net
        .devices()
        .iter()
        .map(|d| d.data_qubits().into_iter().collect())
        .collect();
    for s in &assignment.sites {
        free_slots[s.device].remove(&s.local);
    }

    let mut lw = Lowering {
        net,
        loc: home.clone(),
        home: home.clone(),
        free_slots,
        migrated: BTreeSet::new(),
        ledger: EprLedger::new(net),
        pool: ClbitPool::starting_at(circuit.n_clbits),
        out: Vec::with_capacity(circuit.len()),
        remote_ops: Vec::new(),
    };
    for (i, gate) in circuit.gates.iter().enumerate() {
        if gate.is_two_qubit() {
            lw.two_qubit(&circuit.gates, i, options.strategy_threshold)?;
        } else {
            let mapped = gate.map_qubits(|q| lw.loc[q]);
            lw.out.push(mapped);
        }
    }
    let still_away: Vec<QubitId> = lw.migrated.iter().copied().collect();
    for l in still_away {
        lw.return_home(l)?;
    }

    let unrouted = Circuit::with_gates(net.total_qubits(), lw.pool.size(), lw.out);
    let after_remote_lowering = unrouted.len();
    let pinned = net.comm_globals();
    let passthrough = |a: usize, b: usize| net.is_link_pair(a, b);
    let ctx = RouteContext {
        pinned: &pinned,
        passthrough: &passthrough,
    };
    let (lowered, layout) = route_with(
        &unrouted,
        &net.union_coupling(),
        &Layout::identity(net.total_qubits()),
        options.routing,
        &ctx,
    )?;
    let final_placement = home.iter().map(|&h| layout.physical(h)).collect();

    let mut plan = DistributedPlan {
        assignment,
        initial_placement: home,
        final_placement,
        pass_counts: PassCounts {
            input: circuit.len(),
            after_remote_lowering,
            after_routing: lowered.len(),
        },
        circuit: lowered,
        ledger: lw.ledger,
        remote_ops: lw.remote_ops,
        cut_weight,
        metrics: Metrics {
            remote_op_count: 0,
            telegate_count: 0,
            teledata_count: 0,
            epr_pairs_generated: 0,
            epr_pairs_consumed: 0,
            lowered_depth: 0,
            lowered_gate_count: 0,
            total_cost: 0.0,
            isolated_dimension: BigUint::default(),
            clustered_dimension: BigUint::default(),
            clustered_log2: 0,
        },
    };
    plan.metrics = compute_metrics(&plan, net, &options.weights);
    Ok(plan)
}

/// Recomputes the metrics block of a plan.
pub fn compute_metrics(
    plan: &DistributedPlan,
    net: &NetworkTopology,
    weights: &CostWeights,
) -> Metrics {
    let mut gate_cost = 0.0;
    for g in &plan.circuit.gates {
        gate_cost += match *g {
            Gate::Cnot { control, target } if net.is_link_pair(control, target) => 0.0,
            Gate::Cnot { .. } | Gate::Swap(..) => weights.local_cnot,
            Gate::Measure { .. } => weights.measurement,
            _ => weights.single_qubit,
        };
    }
    let count = |pred: fn(&RemoteKind) -> bool| {
        plan.remote_ops.iter().filter(|op| pred(&op.kind)).count() as u64
    };
    Metrics {
        remote_op_count: plan.cut_weight,
        telegate_count: count(|k| matches!(k, RemoteKind::Telegate { .. })),
        teledata_count: count(|k| matches!(k, RemoteKind::Teledata { .. })),
        epr_pairs_generated: plan.ledger.pairs_generated(),
        epr_pairs_consumed: plan.ledger.pairs_consumed(),
        lowered_depth: plan.circuit.depth_unchecked(),
        lowered_gate_count: plan.circuit.len(),
        total_cost: gate_cost + plan.ledger.cost() * weights.epr_generation,
        isolated_dimension: isolated_dimension(net),
        clustered_dimension: clustered_dimension(net),
        clustered_log2: clustered_log2(net),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyStatus {
    Passed,
    Failed,
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub status: VerifyStatus,
    /// Worst `1 - |<ideal|lowered>|` over every input and branch.
    pub max_infidelity: f64,
    /// Worst gap between lowered and ideal outcome probabilities.
    pub max_probability_error: f64,
    pub inputs_checked: usize,
    pub branches_checked: usize,
    pub simulated_qubits: usize,
    pub reason: Option<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.status == VerifyStatus::Passed
    }

    fn unverifiable(reason: String) -> Self {
        VerifyReport {
            status: VerifyStatus::Unverifiable,
            max_infidelity: f64::NAN,
            max_probability_error: f64::NAN,
            inputs_checked: 0,
            branches_checked: 0,
            simulated_qubits: 0,
            reason: Some(reason),
        }
    }
}

/// Input states used by [`verify`]: every basis state for up to three
/// logical qubits, otherwise `|0..0>`, `|1..1>` and each single-excitation
/// state; then `random` Haar-random product states.
pub fn verification_inputs(
    n: usize,
    random: usize,
    seed: u64,
) -> Result<Vec<StateVector>, SimError> {
    let mut inputs = Vec::new();
    if n <= 3 {
        for i in 0..1usize << n {
            inputs.push(StateVector::basis(n, i)?);
        }
    } else {
        inputs.push(StateVector::basis(n, 0)?);
        inputs.push(StateVector::basis(n, (1 << n) - 1)?);
        for q in 0..n {
            inputs.push(StateVector::basis(n, 1 << q)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let qubits: Vec<_> = (0..n).map(|_| random_qubit(&mut rng)).collect();
        inputs.push(StateVector::product(&qubits)?);
    }
    Ok(inputs)
}

/// Checks the lowered circuit against `original` by branch-exhaustive
/// simulation. Only physical qubits the plan touches are simulated; all
/// others stay `|0>` throughout.
pub fn verify(
    plan: &DistributedPlan,
    original: &Circuit,
    seed: u64,
) -> Result<VerifyReport, CompileError> {
    verify_lowered(
        &plan.circuit,
        &plan.initial_placement,
        &plan.final_placement,
        original,
        seed,
    )
}

/// [`verify`] on the parts of a plan: `initial[l]` and `fin[l]` are the
/// physical qubits holding logical `l` before and after `lowered`.
pub fn verify_lowered(
    lowered: &Circuit,
    initial: &[QubitId],
    fin: &[QubitId],
    original: &Circuit,
    seed: u64,
) -> Result<VerifyReport, CompileError> {
    original.ensure_valid()?;
    if initial.len() != original.n_qubits || fin.len() != original.n_qubits {
        return Err(CompileError::Options(format!(
            "placement covers {} and {} qubits, circuit has {}",
            initial.len(),
            fin.len(),
            original.n_qubits
        )));
    }
    if lowered.n_clbits < original.n_clbits {
        return Err(CompileError::Options(
            "lowered circuit drops classical bits".into(),
        ));
    }
    lowered.ensure_valid()?;
    let mut active: BTreeSet<QubitId> = lowered.gates.iter().flat_map(|g| g.qubits()).collect();
    active.extend(initial.iter().copied());
    active.extend(fin.iter().copied());
    if active.len() > DEFAULT_QUBIT_CAP {
        return Ok(VerifyReport::unverifiable(format!(
            "unverifiable at desk scale: {} active qubits exceeds cap {DEFAULT_QUBIT_CAP}",
            active.len()
        )));
    }
    let compact: BTreeMap<QubitId, usize> =
        active.iter().enumerate().map(|(i, &q)| (q, i)).collect();
    let width = active.len();
    let lowered = Circuit::with_gates(
        width,
        lowered.n_clbits,
        lowered
            .gates
            .iter()
            .map(|g| g.map_qubits(|q| compact[&q]))
            .collect(),
    );
    let initial: Vec<usize> = initial.iter().map(|q| compact[q]).collect();
    let fin: Vec<usize> = fin.iter().map(|q| compact[q]).collect();

    let mut report = VerifyReport {
        status: VerifyStatus::Passed,
        max_infidelity: 0.0,
        max_probability_error: 0.0,
        inputs_checked: 0,
        branches_checked: 0,
        simulated_qubits: width,
        reason: None,
    };
    let inputs = verification_inputs(original.n_qubits, VERIFY_RANDOM_INPUTS, seed)?;
    for input in &inputs {
        let ideal = match run_exhaustive(original, input) {
            Ok(b) => b,
            Err(SimError::TooManyMeasurements { .. }) => {
                return Ok(VerifyReport::unverifiable(
                    "original circuit has too many measurements".into(),
                ))
            }
            Err(e) => return Err(e.into()),
        };
        let expected: Vec<(Vec<bool>, StateVector)> = ideal
            .iter()
            .map(|b| Ok((b.classical_bits.clone(), b.final_state.embed(&fin, width)?)))
            .collect::<Result<_, SimError>>()?;
        let mut ideal_prob: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        for b in &ideal {
            *ideal_prob.entry(b.classical_bits.clone()).or_default() += b.probability;
        }
        let mut lowered_prob: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
        let start = input.embed(&initial, width)?;
        let n_orig = original.n_clbits;
        let outcome = for_each_branch(&lowered, &start, |branch| {
            let bits = branch.classical_bits[..n_orig].to_vec();
            let best = expected
                .iter()
                .filter(|(b, _)| *b == bits)
                .filter_map(|(_, s)| s.inner(&branch.final_state).ok())
                .map(|ip| 1.0 - ip.norm())
                .fold(f64::INFINITY, f64::min);
            report.max_infidelity = report.max_infidelity.max(best);
            report.branches_checked += 1;
            *lowered_prob.entry(bits).or_default() += branch.probability;
        });
        match outcome {
            Ok(()) => {}
            Err(SimError::TooManyMeasurements { count, limit }) => {
                return Ok(VerifyReport::unverifiable(format!(
                    "unverifiable at desk scale: {count} measurements exceeds {limit}"
                )))
            }
            Err(e) => return Err(e.into()),
        }
        let keys: BTreeSet<&Vec<bool>> = ideal_prob.keys().chain(lowered_prob.keys()).collect();
        for k in keys {
            let gap = (ideal_prob.get(k).copied().unwrap_or(0.0)
                - lowered_prob.get(k).copied().unwrap_or(0.0))
            .abs();
            report.max_probability_error = report.max_probability_error.max(gap);
        }
        report.inputs_checked += 1;
    }
    if !(report.max_infidelity <= VERIFY_TOL && report.max_probability_error <= VERIFY_TOL) {
        report.status = VerifyStatus::Failed;
        report.reason = Some(format!(
            "max infidelity {:e}, max probability error {:e}",
            report.max_infidelity, report.max_probability_error
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::preset;

    fn cnots(pairs: &[(usize, usize)]) -> Vec<Gate> {
        pairs.iter().map(|&(c, t)| Gate::cnot(c, t)).collect()
    }

    #[test]
    fn strategy_examples() {
        // qubits 0,1 on device 0; 2 on device 1
        let dev = |q: usize| usize::from(q >= 2);
        let single = cnots(&[(0, 2)]);
        assert_eq!(select_strategy(&single, 0, dev, 3), Strategy::Telegate);

        let burst = cnots(&[(0, 2), (0, 2), (0, 2), (0, 2), (0, 2)]);
        assert_eq!(
            select_strategy(&burst, 0, dev, 3),
            Strategy::Teledata {
                qubit: 0,
                to_device: 1
            }
        );

        let pair = cnots(&[(0, 2), (2, 0), (0, 1)]);
        assert_eq!(remote_run_length(&pair, 0, 0, 1, dev), 2);
        assert_eq!(select_strategy(&pair, 0, dev, 3), Strategy::Telegate);

        let mut with_local = cnots(&[(0, 2), (0, 2)]);
        with_local.push(Gate::H(0));
        with_local.extend(cnots(&[(0, 2), (0, 1), (0, 2)]));
        assert_eq!(remote_run_length(&with_local, 0, 0, 1, dev), 3);
    }

    #[test]
    fn options_are_checked() {
        let net = preset("2x-ibmqx2-linked").unwrap();
        let c = Circuit::new(1, 0);
        let bad = CompileOptions {
            strategy_threshold: 0,
            ..CompileOptions::default()
        };
        assert!(matches!(
            compile(&c, &net, &bad),
            Err(CompileError::Options(_))
        ));
        let bad = CompileOptions {
            weights: CostWeights {
                measurement: f64::NAN,
                ..CostWeights::default()
            },
            ..CompileOptions::default()
        };
        assert!(matches!(
            compile(&c, &net, &bad),
            Err(CompileError::Options(_))
        ));
    }

    #[test]
    fn capacity_error() {
        let net = preset("2x-ibmqx2-linked").unwrap();
        let c = Circuit::new(9, 0);
        assert_eq!(
            compile(&c, &net, &CompileOptions::default()).unwrap_err(),
            CompileError::Capacity {
                needed: 9,
                available: 8
            }
        );
    }

    #[test]
    fn single_device_uses_no_pairs() {
        let net = preset("2x-ibmqx2-linked").unwrap();
        let c = Circuit::with_gates(3, 0, cnots(&[(0, 1), (1, 2), (0, 2)]));
        let plan = compile(&c, &net, &CompileOptions::default()).unwrap();
        assert_eq!(plan.metrics.epr_pairs_consumed, 0);
        assert_eq!(plan.metrics.remote_op_count, 0);
        assert!(verify(&plan, &c, 0).unwrap().passed());
    }

    #[test]
    fn empty_circuit_verifies() {
        let net = preset("2x-ibmqx2-linked").unwrap();
        let c = Circuit::new(0, 0);
        let plan = compile(&c, &net, &CompileOptions::default()).unwrap();
        let r = verify(&plan, &c, 0).unwrap();
        assert!(r.passed());
        assert_eq!(r.inputs_checked, 1 + VERIFY_RANDOM_INPUTS);
    }

    #[test]
    fn dimensions() {
        let net = preset("2x-ibmqx2-linked").unwrap();
        assert_eq!(clustered_dimension(&net), BigUint::from(256u32));
        assert_eq!(isolated_dimension(&net), BigUint::from(64u32));
        let single = preset("ibmqx3").unwrap();
        assert_eq!(clustered_dimension(&single), isolated_dimension(&single));
        // comm qubits count toward isolated but not clustered, so tiny
        // devices can invert the usual ordering
        let tiny = crate::network::load_network(
            r#"{"devices":[{"id":"a","n_qubits":2,"edges":[[0,1]],"comm_qubits":[1]},
                           {"id":"b","n_qubits":2,"edges":[[0,1]],"comm_qubits":[0]}],
                "links":[{"a":["a",1],"b":["b",0]}]}"#,
        )
        .unwrap();
        assert_eq!(clustered_dimension(&tiny), BigUint::from(4u32));
        assert_eq!(isolated_dimension(&tiny), BigUint::from(8u32));
    }
}
