//! Exact statevector simulation with projective measurement, classical
//! control and reset.
//!
//! Qubit 0 is the least-significant bit of the amplitude index.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{is_unitary, Circuit, Gate, Matrix2, Pauli};
use crate::error::SimError;

pub const DEFAULT_QUBIT_CAP: usize = 22;
pub const NORM_TOL: f64 = 1e-10;
pub const MAX_EXHAUSTIVE_MEASUREMENTS: usize = 20;
/// Outcomes below this probability are treated as impossible.
pub const PRUNE_PROBABILITY: f64 = 1e-13;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self, SimError> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, SimError> {
        check_cap(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        if index >= amplitudes.len() {
            return Err(SimError::QubitOutOfRange(index));
        }
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(SimError::DimensionMismatch {
                state: len,
                circuit: len.next_power_of_two(),
            });
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_cap(n_qubits)?;
        let s = StateVector {
            n_qubits,
            amplitudes,
        };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// Tensor product of single-qubit states; `qubits[0]` is qubit 0.
    pub fn product(qubits: &[[Complex64; 2]]) -> Result<Self, SimError> {
        check_cap(qubits.len())?;
        let mut amplitudes = vec![Complex64::new(1.0, 0.0)];
        for q in qubits.iter().rev() {
            amplitudes = amplitudes
                .iter()
                .flat_map(|&a| [a * q[0], a * q[1]])
                .collect();
        }
        Self::from_amplitudes(amplitudes)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64, SimError> {
        if self.n_qubits != other.n_qubits {
            return Err(SimError::DimensionMismatch {
                state: self.n_qubits,
                circuit: other.n_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64, SimError> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Places qubit `i` of `self` at position `map[i]` of a `width`-qubit
    /// register whose other qubits are `|0>`.
    pub fn embed(&self, map: &[usize], width: usize) -> Result<StateVector, SimError> {
        check_cap(width)?;
        if map.len() != self.n_qubits {
            return Err(SimError::DimensionMismatch {
                state: self.n_qubits,
                circuit: map.len(),
            });
        }
        if let Some(&q) = map.iter().find(|&&q| q >= width) {
            return Err(SimError::QubitOutOfRange(q));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << width];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let mut target = 0usize;
            for (bit, &pos) in map.iter().enumerate() {
                if idx >> bit & 1 == 1 {
                    target |= 1 << pos;
                }
            }
            out[target] = amp;
        }
        Ok(StateVector {
            n_qubits: width,
            amplitudes: out,
        })
    }

    fn check_qubit(&self, q: usize) -> Result<(), SimError> {
        if q >= self.n_qubits {
            Err(SimError::QubitOutOfRange(q))
        } else {
            Ok(())
        }
    }

    fn apply_matrix(&mut self, q: usize, m: &Matrix2) {
        let stride = 1usize << q;
        let len = self.amplitudes.len();
        let mut base = 0;
        while base < len {
            for i in base..base + stride {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i + stride];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
            base += stride << 1;
        }
    }

    fn apply_x(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                self.amplitudes.swap(i, i | bit);
            }
        }
    }

    fn apply_z(&mut self, q: usize) {
        let bit = 1usize << q;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = -*a;
            }
        }
    }

    fn apply_h(&mut self, q: usize) {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        self.apply_matrix(q, &[[s, s], [s, -s]]);
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let c = 1usize << control;
        let t = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & c != 0 && i & t == 0 {
                self.amplitudes.swap(i, i | t);
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let (ba, bb) = (1usize << a, 1usize << b);
        for i in 0..self.amplitudes.len() {
            if i & ba != 0 && i & bb == 0 {
                self.amplitudes.swap(i, (i & !ba) | bb);
            }
        }
    }

    /// Applies a unitary gate. Measure, Reset and IfBit need classical
    /// context and are rejected here; use [`StateVector::apply`].
    pub fn apply_unitary(&mut self, gate: &Gate) -> Result<(), SimError> {
        for q in gate.qubits() {
            self.check_qubit(q)?;
        }
        match *gate {
            Gate::H(q) => self.apply_h(q),
            Gate::X(q) => self.apply_x(q),
            Gate::Z(q) => self.apply_z(q),
            Gate::U1q(q, ref m) => {
                if !is_unitary(m) {
                    return Err(SimError::NonUnitary);
                }
                self.apply_matrix(q, m);
            }
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::Swap(a, b) => self.apply_swap(a, b),
            Gate::Measure { .. } | Gate::Reset(_) | Gate::IfBit { .. } => {
                return Err(SimError::NeedsClassicalContext)
            }
        }
        Ok(())
    }

    /// Probability that measuring `q` yields 1.
    pub fn probability_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects qubit `q` onto `outcome` and renormalizes. `probability` must
    /// be the (nonzero) probability of that outcome.
    fn collapse(&mut self, q: usize, outcome: bool, probability: f64) {
        let bit = 1usize << q;
        let scale = 1.0 / probability.sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Applies any gate, sampling measurement outcomes from `rng`. Returns
    /// the probability of the sampled outcome (1 for deterministic gates).
    pub fn apply<R: Rng + ?Sized>(
        &mut self,
        gate: &Gate,
        bits: &mut [bool],
        rng: &mut R,
    ) -> Result<f64, SimError> {
        match *gate {
            Gate::Measure { qubit, clbit } => {
                self.check_qubit(qubit)?;
                if clbit >= bits.len() {
                    return Err(SimError::ClbitOutOfRange(clbit));
                }
                let (outcome, p) = self.sample(qubit, rng);
                bits[clbit] = outcome;
                Ok(p)
            }
            Gate::Reset(q) => {
                self.check_qubit(q)?;
                let (outcome, p) = self.sample(q, rng);
                if outcome {
                    self.apply_x(q);
                }
                Ok(p)
            }
            Gate::IfBit { clbit, body, qubit } => {
                self.check_qubit(qubit)?;
                let set = *bits.get(clbit).ok_or(SimError::ClbitOutOfRange(clbit))?;
                if set {
                    match body {
                        Pauli::X => self.apply_x(qubit),
                        Pauli::Z => self.apply_z(qubit),
                    }
                }
                Ok(1.0)
            }
            ref g => self.apply_unitary(g).map(|_| 1.0),
        }
    }

    fn sample<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> (bool, f64) {
        let p1 = self.probability_one(q).clamp(0.0, 1.0);
        let outcome = if p1 < PRUNE_PROBABILITY {
            false
        } else if 1.0 - p1 < PRUNE_PROBABILITY {
            true
        } else {
            rng.gen::<f64>() < p1
        };
        let p = if outcome { p1 } else { 1.0 - p1 };
        self.collapse(q, outcome, p);
        (outcome, p)
    }
}

fn check_cap(n: usize) -> Result<(), SimError> {
    if n > DEFAULT_QUBIT_CAP {
        Err(SimError::TooManyQubits {
            requested: n,
            cap: DEFAULT_QUBIT_CAP,
        })
    } else {
        Ok(())
    }
}

/// True iff `|<a|b>| >= 1 - tol`.
pub fn equal_up_to_global_phase(
    a: &StateVector,
    b: &StateVector,
    tol: f64,
) -> Result<bool, SimError> {
    Ok(a.inner(b)?.norm() >= 1.0 - tol)
}

/// One measurement trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub classical_bits: Vec<bool>,
    pub probability: f64,
    pub final_state: StateVector,
}

impl Branch {
    /// Classical bits as a string, bit 0 first.
    pub fn bit_string(&self) -> String {
        self.classical_bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

fn check_dims(circuit: &Circuit, initial: &StateVector) -> Result<(), SimError> {
    circuit.ensure_valid()?;
    if circuit.n_qubits != initial.n_qubits {
        return Err(SimError::DimensionMismatch {
            state: initial.n_qubits,
            circuit: circuit.n_qubits,
        });
    }
    Ok(())
}

/// Runs one trajectory with Born-rule sampling from a ChaCha generator
/// seeded with `seed`.
pub fn run_sampled(
    circuit: &Circuit,
    initial: &StateVector,
    seed: u64,
) -> Result<Branch, SimError> {
    check_dims(circuit, initial)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial.clone();
    let mut bits = vec![false; circuit.n_clbits];
    let mut probability = 1.0;
    for gate in &circuit.gates {
        probability *= state.apply(gate, &mut bits, &mut rng)?;
    }
    Ok(Branch {
        classical_bits: bits,
        probability,
        final_state: state,
    })
}

/// Enumerates every nonzero-probability measurement branch, handing each to
/// `visit` in depth-first order (outcome 0 before 1). Reset is a hidden
/// measurement: when it splits, both halves are reported with the same
/// classical bits.
pub fn for_each_branch(
    circuit: &Circuit,
    initial: &StateVector,
    mut visit: impl FnMut(Branch),
) -> Result<(), SimError> {
    check_dims(circuit, initial)?;
    let count = circuit.measure_count();
    if count > MAX_EXHAUSTIVE_MEASUREMENTS {
        return Err(SimError::TooManyMeasurements {
            count,
            limit: MAX_EXHAUSTIVE_MEASUREMENTS,
        });
    }
    let bits = vec![false; circuit.n_clbits];
    explore(&circuit.gates, initial.clone(), bits, 1.0, &mut visit);
    Ok(())
}

fn explore(
    gates: &[Gate],
    mut state: StateVector,
    mut bits: Vec<bool>,
    probability: f64,
    visit: &mut dyn FnMut(Branch),
) {
    for (i, gate) in gates.iter().enumerate() {
        let (qubit, clbit) = match *gate {
            Gate::Measure { qubit, clbit } => (qubit, Some(clbit)),
            Gate::Reset(q) => (q, None),
            Gate::IfBit { clbit, body, qubit } => {
                if bits[clbit] {
                    match body {
                        Pauli::X => state.apply_x(qubit),
                        Pauli::Z => state.apply_z(qubit),
                    }
                }
                continue;
            }
            ref g => {
                state
                    .apply_unitary(g)
                    .expect("validated circuit on matching state");
                continue;
            }
        };
        let p1 = state.probability_one(qubit).clamp(0.0, 1.0);
        let outcomes: Vec<(bool, f64)> = [(false, 1.0 - p1), (true, p1)]
            .into_iter()
            .filter(|&(_, p)| p >= PRUNE_PROBABILITY)
            .collect();
        let rest = &gates[i + 1..];
        let last = outcomes.len() - 1;
        for (k, (outcome, p)) in outcomes.into_iter().enumerate() {
            let (mut s, mut b) = if k == last {
                (
                    std::mem::replace(
                        &mut state,
                        StateVector {
                            n_qubits: 0,
                            amplitudes: Vec::new(),
                        },
                    ),
                    std::mem::take(&mut bits),
                )
            } else {
                (state.clone(), bits.clone())
            };
            s.collapse(qubit, outcome, p);
            match clbit {
                Some(c) => b[c] = outcome,
                None if outcome => s.apply_x(qubit),
                None => {}
            }
            explore(rest, s, b, probability * p, visit);
        }
        return;
    }
    visit(Branch {
        classical_bits: bits,
        probability,
        final_state: state,
    });
}

/// Collects every branch of [`for_each_branch`].
pub fn run_exhaustive(circuit: &Circuit, initial: &StateVector) -> Result<Vec<Branch>, SimError> {
    let mut out = Vec::new();
    for_each_branch(circuit, initial, |b| out.push(b))?;
    Ok(out)
}

/// Haar-random single-qubit state.
pub fn random_qubit<R: Rng + ?Sized>(rng: &mut R) -> [Complex64; 2] {
    // normalized complex Gaussian vector is Haar-distributed
    let mut g = || {
        let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(f64::MIN_POSITIVE), rng.gen());
        let r = (-2.0 * u1.ln()).sqrt();
        Complex64::new(
            r * (2.0 * std::f64::consts::PI * u2).cos(),
            r * (2.0 * std::f64::consts::PI * u2).sin(),
        )
    };
    let (a, b) = (g(), g());
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    [a / n, b / n]
}
