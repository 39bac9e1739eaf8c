//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dqc_core::compiler::{
    clustered_dimension, compile, isolated_dimension, verify, CompileOptions, VerifyStatus,
};
use dqc_core::device::{CouplingMap, Site};
use dqc_core::network::{preset, NetworkConfig};
use dqc_core::partition::{partition_devices, round_robin, Assignment};
use dqc_core::remote::{
    generate_epr, lower_teledata, lower_telegate, swap_entanglement, ClbitPool, EprLedger,
};
use dqc_core::router::{route, Layout, RoutingMode};
use dqc_core::sim::{random_qubit, run_exhaustive, StateVector};
use dqc_core::{load_network, qasm, Circuit, Gate};

const TOL: f64 = 1e-10;
const SAMPLES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../samples");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:?}, limit {limit:?}")
    })
}

fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr()
}

fn sample(name: &str) -> String {
    std::fs::read_to_string(format!("{SAMPLES}/{name}")).expect("sample exists")
}

/// Dense amplitudes with `q` in state `psi` at position `at`, every other
/// qubit of the `width`-qubit register in |0>.
fn single_at(psi: [Complex64; 2], at: usize, width: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << width];
    v[0] = psi[0];
    v[1 << at] = psi[1];
    v
}

fn two_at(
    c: [Complex64; 2],
    t: [Complex64; 2],
    (pc, pt): (usize, usize),
    width: usize,
) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << width];
    for (bc, ac) in c.iter().enumerate() {
        for (bt, at) in t.iter().enumerate() {
            v[(bc << pc) | (bt << pt)] = ac * at;
        }
    }
    v
}

fn basis_qubit(bit: usize) -> [Complex64; 2] {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if bit == 0 {
        [one, zero]
    } else {
        [zero, one]
    }
}

fn teleportation() -> Outcome {
    let start = Instant::now();
    let net = preset("2x-ibmqx2-linked").unwrap();
    let width = net.total_qubits();
    let src = 0;
    let mut ledger = EprLedger::new(&net);
    let (mut gates, pair) = generate_epr(&mut ledger, 0, 0).map_err(|e| e.to_string())?;
    gates.extend(lower_teledata(&mut ledger, src, &pair, (0, 1)).map_err(|e| e.to_string())?);
    let circuit = Circuit::with_gates(width, 2, gates);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let psi = random_qubit(&mut rng);
        let input =
            StateVector::from_amplitudes(single_at(psi, src, width)).map_err(|e| e.to_string())?;
        let expected = single_at(psi, pair.far, width);
        let branches = run_exhaustive(&circuit, &input).map_err(|e| e.to_string())?;
        ensure(branches.len() == 4, || {
            format!("trial {trial}: {} branches", branches.len())
        })?;
        for b in &branches {
            ensure((b.probability - 0.25).abs() < TOL, || {
                format!("trial {trial}: probability {}", b.probability)
            })?;
            // full-register fidelity also pins source and comm qubits to |0>
            worst = worst.max(1.0 - fidelity(&expected, b.final_state.amplitudes()));
        }
    }
    ensure(worst <= TOL, || format!("max infidelity {worst:e}"))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "100 states x 4 branches, max infidelity {worst:.1e}, {elapsed:.2?}"
    ))
}

fn telegate() -> Outcome {
    let start = Instant::now();
    let net = preset("2x-ibmqx2-linked").unwrap();
    let width = net.total_qubits();
    let (control, target) = (0, 5);
    let mut ledger = EprLedger::new(&net);
    let (mut gates, pair) = generate_epr(&mut ledger, 0, 0).map_err(|e| e.to_string())?;
    gates.extend(
        lower_telegate(&mut ledger, control, target, &pair, (0, 1)).map_err(|e| e.to_string())?,
    );
    let circuit = Circuit::with_gates(width, 2, gates);
    let mut inputs: Vec<([Complex64; 2], [Complex64; 2])> = (0..4)
        .map(|i| (basis_qubit(i & 1), basis_qubit(i >> 1)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        inputs.push((random_qubit(&mut rng), random_qubit(&mut rng)));
    }
    let mut worst: f64 = 0.0;
    for (i, &(c, t)) in inputs.iter().enumerate() {
        let amps = two_at(c, t, (control, target), width);
        // ideal CNOT: flip the target bit wherever the control bit is set
        let mut expected = amps.clone();
        for (idx, a) in amps.iter().enumerate() {
            if idx >> control & 1 == 1 {
                expected[idx ^ (1 << target)] = *a;
            }
        }
        let input = StateVector::from_amplitudes(amps).map_err(|e| e.to_string())?;
        let branches = run_exhaustive(&circuit, &input).map_err(|e| e.to_string())?;
        ensure(branches.len() == 4, || {
            format!("input {i}: {} branches", branches.len())
        })?;
        for b in &branches {
            worst = worst.max(1.0 - fidelity(&expected, b.final_state.amplitudes()));
        }
    }
    ensure(worst <= TOL, || format!("max infidelity {worst:e}"))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "4 basis + 100 random inputs x 4 branches, max infidelity {worst:.1e}, {elapsed:.2?}"
    ))
}

fn random_unitary_circuit(rng: &mut impl Rng, n: usize, len: usize) -> Circuit {
    let mut c = Circuit::new(n, 0);
    for _ in 0..len {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let g = match rng.gen_range(0..6) {
            0 => Gate::H(a),
            1 => Gate::X(a),
            2 => Gate::Z(a),
            3 => Gate::Swap(a, b),
            _ => Gate::cnot(a, b),
        };
        c.push(g);
    }
    c
}

fn routing() -> Outcome {
    let start = Instant::now();
    let net = preset("ibmqx3").unwrap();
    let map: &CouplingMap = &net.devices()[0].coupling;
    let width = map.n_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let n = rng.gen_range(2..=10);
        let len = rng.gen_range(1..=30);
        let c = random_unitary_circuit(&mut rng, n, len);
        let mode = if trial % 2 == 0 {
            RoutingMode::Restore
        } else {
            RoutingMode::Permute
        };
        let mut perm: Vec<usize> = (0..width).collect();
        for i in (1..width).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let initial = Layout::from_mapping(perm).map_err(|e| e.to_string())?;
        let (routed, fin) = route(&c, map, &initial, mode).map_err(|e| e.to_string())?;
        for g in &routed.gates {
            match *g {
                Gate::Cnot { control, target } => ensure(map.has_edge(control, target), || {
                    format!("trial {trial}: cnot {control}->{target} off the map")
                })?,
                Gate::Swap(..) => return Err(format!("trial {trial}: swap survived routing")),
                _ => {}
            }
        }
        if mode == RoutingMode::Restore {
            ensure(fin == initial, || {
                format!("trial {trial}: restore mode moved qubits")
            })?;
        }
        let qubits: Vec<[Complex64; 2]> = (0..n).map(|_| random_qubit(&mut rng)).collect();
        let input = StateVector::product(&qubits).map_err(|e| e.to_string())?;
        let ideal = run_exhaustive(&c, &input).map_err(|e| e.to_string())?;
        let place = |layout: &Layout| (0..n).map(|l| layout.physical(l)).collect::<Vec<_>>();
        let expected = ideal[0]
            .final_state
            .embed(&place(&fin), width)
            .map_err(|e| e.to_string())?;
        let start_state = input
            .embed(&place(&initial), width)
            .map_err(|e| e.to_string())?;
        let out = run_exhaustive(&routed, &start_state).map_err(|e| e.to_string())?;
        let f = fidelity(expected.amplitudes(), out[0].final_state.amplitudes());
        worst = worst.max(1.0 - f);
    }
    ensure(worst <= TOL, || format!("max infidelity {worst:e}"))?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "200 circuits, both modes, max infidelity {worst:.1e}, {elapsed:.2?}"
    ))
}

fn state_space() -> Outcome {
    let net = load_network(&sample("two_10q_devices.json")).map_err(|e| e.to_string())?;
    let c = compile(&Circuit::new(0, 0), &net, &CompileOptions::default())
        .map_err(|e| e.to_string())?;
    let two = |k: usize| num_bigint::BigUint::from(1u8) << k;
    ensure(c.metrics.clustered_dimension == two(18), || {
        format!("clustered {}", c.metrics.clustered_dimension)
    })?;
    ensure(c.metrics.isolated_dimension == two(11), || {
        format!("isolated {}", c.metrics.isolated_dimension)
    })?;
    // the gap widens with every added device of the same size
    let mut last = None;
    for devices in 2..=4 {
        let mut config: NetworkConfig =
            serde_json::from_str(&sample("two_10q_devices.json")).unwrap();
        let template = config.devices[1].clone();
        let link = config.links[0].clone();
        for d in 2..devices {
            let mut dev = template.clone();
            dev.id = format!("extra{d}");
            config.devices.push(dev);
            let mut l = link.clone();
            l.b.0 = format!("extra{d}");
            config.links.push(l);
        }
        let net = config.build().map_err(|e| e.to_string())?;
        let ratio = clustered_dimension(&net) / isolated_dimension(&net);
        if let Some(prev) = &last {
            ensure(&ratio > prev, || {
                format!("ratio did not grow at {devices} devices")
            })?;
        }
        last = Some(ratio);
    }
    Ok("clustered 2^18, isolated 2^11; ratio grows for 2, 3, 4 devices".into())
}

fn cut_of(edges: &[(usize, usize)], part: &[usize]) -> u64 {
    edges.iter().filter(|&&(a, b)| part[a] != part[b]).count() as u64
}

fn partition_quality() -> Outcome {
    let start = Instant::now();
    let mut edges = Vec::new();
    for base in [0, 4] {
        for a in base..base + 4 {
            for b in a + 1..base + 4 {
                edges.push((a, b));
            }
        }
    }
    edges.push((3, 4));
    let c = Circuit::with_gates(8, 0, edges.iter().map(|&(a, b)| Gate::cnot(a, b)).collect());
    let g = c.interaction_graph().map_err(|e| e.to_string())?;
    let part = partition_devices(&g, &[4, 4]).map_err(|e| e.to_string())?;
    let heuristic = cut_of(&edges, &part);
    let optimum = (0u32..256)
        .filter(|m| m.count_ones() == 4)
        .map(|m| {
            cut_of(
                &edges,
                &(0..8).map(|q| (m >> q & 1) as usize).collect::<Vec<_>>(),
            )
        })
        .min()
        .unwrap();
    ensure(heuristic == 1 && optimum == 1, || {
        format!("heuristic {heuristic}, optimum {optimum}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut not_worse, mut worst_ratio) = (0, 0.0f64);
    for trial in 0..50 {
        let edges: Vec<(usize, usize)> = (0..rng.gen_range(4..=24))
            .map(|_| {
                let a = rng.gen_range(0..8);
                (a, (a + rng.gen_range(1..8)) % 8)
            })
            .collect();
        let c = Circuit::with_gates(8, 0, edges.iter().map(|&(a, b)| Gate::cnot(a, b)).collect());
        let g = c.interaction_graph().map_err(|e| e.to_string())?;
        let h = cut_of(
            &edges,
            &partition_devices(&g, &[4, 4]).map_err(|e| e.to_string())?,
        );
        let rr = cut_of(&edges, &round_robin(8, &[4, 4]));
        if h <= rr {
            not_worse += 1;
        }
        ensure(h <= 2 * rr, || {
            format!("trial {trial}: heuristic {h} vs round-robin {rr}")
        })?;
        if rr > 0 {
            worst_ratio = worst_ratio.max(h as f64 / rr as f64);
        }
    }
    ensure(not_worse * 100 >= 95 * 50, || {
        format!("heuristic not worse in only {not_worse}/50")
    })?;
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "bridge cut 1 = optimum; not worse than round-robin in {not_worse}/50 (worst ratio {worst_ratio:.2}), {elapsed:.2?}"
    ))
}

fn entanglement_swapping() -> Outcome {
    let net = load_network(&sample("three_device_line.json")).map_err(|e| e.to_string())?;
    let width = net.total_qubits();
    let mut ledger = EprLedger::new(&net);
    let mut pool = ClbitPool::starting_at(0);
    let (gates, pair) =
        swap_entanglement(&mut ledger, &[0, 1], 0, &mut pool).map_err(|e| e.to_string())?;
    ensure(
        net.site(pair.near).device == 0 && net.site(pair.far).device == 2,
        || format!("pair ends {} and {}", pair.near, pair.far),
    )?;
    let circuit = Circuit::with_gates(width, pool.size(), gates);
    let branches =
        run_exhaustive(&circuit, &StateVector::zero(width).unwrap()).map_err(|e| e.to_string())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut phi_plus = vec![Complex64::new(0.0, 0.0); 1 << width];
    phi_plus[0] = Complex64::new(h, 0.0);
    phi_plus[(1 << pair.near) | (1 << pair.far)] = Complex64::new(h, 0.0);
    let worst = branches
        .iter()
        .map(|b| 1.0 - fidelity(&phi_plus, b.final_state.amplitudes()))
        .fold(0.0, f64::max);
    ensure(branches.len() == 4, || {
        format!("{} branches", branches.len())
    })?;
    ensure(worst <= TOL, || format!("max infidelity {worst:e}"))?;
    // using the end-to-end pair adds nothing: both hop pairs were already spent
    let control = net.global(Site {
        device: 0,
        local: 0,
    });
    let target = net.global(Site {
        device: 2,
        local: 1,
    });
    lower_telegate(
        &mut ledger,
        control,
        target,
        &pair,
        (pool.take(), pool.take()),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        ledger.pairs_consumed() == 2 && ledger.pairs_generated() == 2,
        || {
            format!(
                "consumed {}, generated {}",
                ledger.pairs_consumed(),
                ledger.pairs_generated()
            )
        },
    )?;
    Ok(format!(
        "4 branches at Phi+, max infidelity {worst:.1e}; 2 pairs consumed"
    ))
}

fn cli_report(seed: &str) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dqc"))
        .args([
            "compile",
            &format!("{SAMPLES}/remote_cnot.qasm"),
            "--network",
            "2x-ibmqx2-linked",
        ])
        .args(["--seed", seed, "--json"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn end_to_end() -> Outcome {
    let first = cli_report("42")?;
    let second = cli_report("42")?;
    ensure(first == second, || "reports differ between runs".into())?;
    let v: serde_json::Value = serde_json::from_str(&first).map_err(|e| e.to_string())?;
    let m = &v["metrics"];
    ensure(m["remote_op_count"] == 1, || {
        format!("remote_op_count {}", m["remote_op_count"])
    })?;
    ensure(m["epr_pairs_consumed"] == 1, || {
        format!("epr_pairs_consumed {}", m["epr_pairs_consumed"])
    })?;
    let status = &v["verification"]["status"];
    let infidelity = v["verification"]["max_infidelity"]
        .as_f64()
        .unwrap_or(f64::NAN);
    ensure(status == "passed" && infidelity < TOL, || {
        format!("verification {status}, {infidelity:e}")
    })?;
    Ok(format!(
        "remote ops 1, pairs 1, max infidelity {infidelity:.1e}, report byte-identical"
    ))
}

fn mutation() -> Outcome {
    let net = preset("2x-ibmqx2-linked").unwrap();
    let telegate = qasm::parse(&sample("remote_cnot.qasm")).map_err(|e| e.to_string())?;
    let mut burst = vec![Gate::H(0)];
    burst.extend([(0, 1), (1, 0), (0, 1)].map(|(a, b)| Gate::cnot(a, b)));
    let teledata = Circuit::with_gates(2, 0, burst);
    let cases = [
        (telegate, CompileOptions::default()),
        (
            teledata,
            CompileOptions {
                assignment: Some(Assignment {
                    sites: vec![
                        Site {
                            device: 0,
                            local: 2,
                        },
                        Site {
                            device: 1,
                            local: 2,
                        },
                    ],
                }),
                ..CompileOptions::default()
            },
        ),
    ];
    let mut mutants = 0;
    for (circuit, options) in &cases {
        let plan = compile(circuit, &net, options).map_err(|e| e.to_string())?;
        ensure(
            verify(&plan, circuit, 0)
                .map_err(|e| e.to_string())?
                .passed(),
            || "unmutated plan fails".into(),
        )?;
        for (i, g) in plan.circuit.gates.iter().enumerate() {
            if !matches!(g, Gate::IfBit { .. }) {
                continue;
            }
            let mut broken = plan.clone();
            broken.circuit.gates.remove(i);
            let r = verify(&broken, circuit, 0).map_err(|e| e.to_string())?;
            ensure(r.status == VerifyStatus::Failed, || {
                format!("dropping {g:?} at {i} went unnoticed")
            })?;
            mutants += 1;
        }
    }
    ensure(mutants == 2 + 4, || {
        format!("expected 6 corrections, found {mutants}")
    })?;
    Ok(format!("all {mutants} single-correction mutants rejected"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("teleportation correctness", teleportation),
        ("telegate correctness", telegate),
        ("routing correctness", routing),
        ("state-space accounting", state_space),
        ("partition quality", partition_quality),
        ("entanglement swapping", entanglement_swapping),
        ("end-to-end pipeline", end_to_end),
        ("mutation sensitivity", mutation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
