//! Line-oriented reader and writer for the OpenQASM 2.0 subset used by
//! the toolchain.
//!
//! Supported statements, one per line, `//` comments allowed:
//!
//! ```text
//! OPENQASM 2.0;
//! include "qelib1.inc";
//! qreg q[n];
//! creg c[m];
//! h q[i];  x q[i];  z q[i];
//! cx q[i],q[j];
//! swap q[i],q[j];
//! measure q[i] -> c[j];
//! reset q[i];
//! if(c[j]==1) x q[i];   // or z
//! u1q(a_re,a_im,b_re,b_im,c_re,c_im,d_re,d_im) q[i];
//! ```
//!
//! `u1q` is a local extension carrying a row-major 2x2 matrix so that any
//! [`Circuit`] can be written out and read back unchanged.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::circuit::{Circuit, Gate, Pauli};
use crate::error::CircuitError;

struct Parser {
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
    gates: Vec<Gate>,
}

fn err(line: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `name[idx]`, returning both parts.
fn parse_indexed(tok: &str, line: usize) -> Result<(&str, usize), CircuitError> {
    let tok = tok.trim();
    let open = tok
        .find('[')
        .ok_or_else(|| err(line, format!("expected register access, found `{tok}`")))?;
    if !tok.ends_with(']') {
        return Err(err(line, format!("unterminated index in `{tok}`")));
    }
    let name = tok[..open].trim();
    let idx = tok[open + 1..tok.len() - 1]
        .trim()
        .parse::<usize>()
        .map_err(|_| err(line, format!("bad index in `{tok}`")))?;
    if name.is_empty() {
        return Err(err(line, format!("missing register name in `{tok}`")));
    }
    Ok((name, idx))
}

impl Parser {
    fn qubit(&self, tok: &str, line: usize) -> Result<usize, CircuitError> {
        let (name, idx) = parse_indexed(tok, line)?;
        match &self.qreg {
            Some((reg, size)) if reg == name => {
                if idx < *size {
                    Ok(idx)
                } else {
                    Err(err(
                        line,
                        format!("qubit index {idx} out of range for {reg}[{size}]"),
                    ))
                }
            }
            Some((reg, _)) => Err(err(
                line,
                format!("unknown quantum register `{name}` (declared `{reg}`)"),
            )),
            None => Err(err(line, "gate before qreg declaration")),
        }
    }

    fn clbit(&self, tok: &str, line: usize) -> Result<usize, CircuitError> {
        let (name, idx) = parse_indexed(tok, line)?;
        match &self.creg {
            Some((reg, size)) if reg == name => {
                if idx < *size {
                    Ok(idx)
                } else {
                    Err(err(
                        line,
                        format!("clbit index {idx} out of range for {reg}[{size}]"),
                    ))
                }
            }
            Some((reg, _)) => Err(err(
                line,
                format!("unknown classical register `{name}` (declared `{reg}`)"),
            )),
            None => Err(err(line, "classical bit used before creg declaration")),
        }
    }

    fn two_qubits(&self, args: &str, line: usize) -> Result<(usize, usize), CircuitError> {
        let mut parts = args.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(line, "expected two qubit operands"));
        };
        Ok((self.qubit(a, line)?, self.qubit(b, line)?))
    }

    fn statement(&mut self, stmt: &str, line: usize) -> Result<(), CircuitError> {
        if stmt.starts_with("OPENQASM") || stmt.starts_with("include") {
            return Ok(());
        }
        if let Some(rest) = stmt.strip_prefix("if") {
            let rest = rest.trim_start();
            let rest = rest
                .strip_prefix('(')
                .ok_or_else(|| err(line, "expected `(` after if"))?;
            let close = rest
                .find(')')
                .ok_or_else(|| err(line, "expected `)` in if condition"))?;
            let (cond, body) = (&rest[..close], rest[close + 1..].trim());
            let (bit, value) = cond
                .split_once("==")
                .ok_or_else(|| err(line, "condition must be `c[j]==1`"))?;
            if value.trim() != "1" {
                return Err(err(line, "only `==1` conditions are supported"));
            }
            let clbit = self.clbit(bit, line)?;
            let (op, arg) = body
                .split_once(char::is_whitespace)
                .ok_or_else(|| err(line, "missing conditional body"))?;
            let pauli = match op {
                "x" => Pauli::X,
                "z" => Pauli::Z,
                other => {
                    return Err(err(
                        line,
                        format!("conditional body must be x or z, found `{other}`"),
                    ))
                }
            };
            let qubit = self.qubit(arg, line)?;
            self.gates.push(Gate::if_bit(clbit, pauli, qubit));
            return Ok(());
        }
        if let Some(rest) = stmt.strip_prefix("u1q") {
            let rest = rest.trim_start();
            let rest = rest
                .strip_prefix('(')
                .ok_or_else(|| err(line, "expected `(` after u1q"))?;
            let close = rest
                .find(')')
                .ok_or_else(|| err(line, "expected `)` in u1q parameters"))?;
            let params = rest[..close]
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| err(line, "u1q parameters must be numbers"))?;
            if params.len() != 8 {
                return Err(err(line, "u1q takes 8 parameters"));
            }
            let c = |i: usize| Complex64::new(params[2 * i], params[2 * i + 1]);
            let q = self.qubit(&rest[close + 1..], line)?;
            self.gates.push(Gate::U1q(q, [[c(0), c(1)], [c(2), c(3)]]));
            return Ok(());
        }

        let (op, args) = stmt
            .split_once(char::is_whitespace)
            .ok_or_else(|| err(line, format!("unrecognized statement `{stmt}`")))?;
        let args = args.trim();
        match op {
            "qreg" | "creg" => {
                let (name, size) = parse_indexed(args, line)?;
                let slot = if op == "qreg" {
                    &mut self.qreg
                } else {
                    &mut self.creg
                };
                if slot.is_some() {
                    return Err(err(line, format!("only one {op} is supported")));
                }
                *slot = Some((name.to_string(), size));
            }
            "h" => {
                let q = self.qubit(args, line)?;
                self.gates.push(Gate::H(q));
            }
            "x" => {
                let q = self.qubit(args, line)?;
                self.gates.push(Gate::X(q));
            }
            "z" => {
                let q = self.qubit(args, line)?;
                self.gates.push(Gate::Z(q));
            }
            "reset" => {
                let q = self.qubit(args, line)?;
                self.gates.push(Gate::Reset(q));
            }
            "cx" => {
                let (a, b) = self.two_qubits(args, line)?;
                self.gates.push(Gate::cnot(a, b));
            }
            "swap" => {
                let (a, b) = self.two_qubits(args, line)?;
                self.gates.push(Gate::Swap(a, b));
            }
            "measure" => {
                let (q, c) = args
                    .split_once("->")
                    .ok_or_else(|| err(line, "measure needs `->`"))?;
                let q = self.qubit(q, line)?;
                let c = self.clbit(c, line)?;
                self.gates.push(Gate::measure(q, c));
            }
            other => return Err(err(line, format!("unsupported gate `{other}`"))),
        }
        Ok(())
    }
}

/// Parses circuit text. Errors carry the 1-based line number.
pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
    let mut p = Parser {
        qreg: None,
        creg: None,
        gates: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let code = raw.split("//").next().unwrap_or("").trim();
        if code.is_empty() {
            continue;
        }
        let stmt = code
            .strip_suffix(';')
            .ok_or_else(|| err(line, "missing `;`"))?
            .trim();
        if stmt.contains(';') {
            return Err(err(line, "one statement per line"));
        }
        p.statement(stmt, line)?;
    }
    let n_qubits = p.qreg.map(|(_, n)| n).unwrap_or(0);
    let n_clbits = p.creg.map(|(_, n)| n).unwrap_or(0);
    Ok(Circuit::with_gates(n_qubits, n_clbits, p.gates))
}

/// Writes a circuit with registers named `q` and `c`.
pub fn emit(circuit: &Circuit) -> String {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits);
    if circuit.n_clbits > 0 {
        let _ = writeln!(out, "creg c[{}];", circuit.n_clbits);
    }
    for gate in &circuit.gates {
        let _ = match gate {
            Gate::H(q) => writeln!(out, "h q[{q}];"),
            Gate::X(q) => writeln!(out, "x q[{q}];"),
            Gate::Z(q) => writeln!(out, "z q[{q}];"),
            Gate::U1q(q, m) => {
                let p: Vec<String> = m
                    .iter()
                    .flatten()
                    .flat_map(|z| [format!("{:?}", z.re), format!("{:?}", z.im)])
                    .collect();
                writeln!(out, "u1q({}) q[{q}];", p.join(","))
            }
            Gate::Cnot { control, target } => writeln!(out, "cx q[{control}],q[{target}];"),
            Gate::Swap(a, b) => writeln!(out, "swap q[{a}],q[{b}];"),
            Gate::Measure { qubit, clbit } => writeln!(out, "measure q[{qubit}] -> c[{clbit}];"),
            Gate::Reset(q) => writeln!(out, "reset q[{q}];"),
            Gate::IfBit { clbit, body, qubit } => {
                let op = match body {
                    Pauli::X => "x",
                    Pauli::Z => "z",
                };
                writeln!(out, "if(c[{clbit}]==1) {op} q[{qubit}];")
            }
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TELEPORT: &str = "\
OPENQASM 2.0;
include \"qelib1.inc\";
// source, epr half, destination
qreg q[3];
creg c[2];
h q[1];
cx q[1],q[2];
cx q[0],q[1];
h q[0];
measure q[1] -> c[0];
measure q[0] -> c[1];
if(c[0]==1) x q[2];
if(c[1]==1) z q[2];  // phase fix
";

    #[test]
    fn parses_teleport_program() {
        let c = parse(TELEPORT).unwrap();
        assert_eq!(c.n_qubits, 3);
        assert_eq!(c.n_clbits, 2);
        assert_eq!(c.gates.len(), 8);
        assert_eq!(c.gates[6], Gate::if_bit(0, Pauli::X, 2));
        assert!(c.validate().is_empty());
    }

    #[test]
    fn error_reports_line_number() {
        let text = "qreg q[2];\nh q[0];\nfoo q[1];\n";
        match parse(text) {
            Err(CircuitError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let text = "qreg q[2];\ncx q[0],q[5];\n";
        assert!(matches!(
            parse(text),
            Err(CircuitError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse("qreg q[2];\nh q[0]\n"),
            Err(CircuitError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn round_trip_includes_u1q() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = [
            [Complex64::new(s, 0.0), Complex64::new(0.0, s)],
            [Complex64::new(0.0, s), Complex64::new(s, 0.0)],
        ];
        let mut c = parse(TELEPORT).unwrap();
        c.push(Gate::U1q(1, m))
            .push(Gate::Swap(0, 2))
            .push(Gate::Reset(1));
        let back = parse(&emit(&c)).unwrap();
        assert_eq!(back, c);
    }
}
