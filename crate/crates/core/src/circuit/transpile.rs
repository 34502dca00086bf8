//! Rewriting of textbook gates into `{Rx, Rz, CZ}`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::{normalize_turns, schedule, Circuit, GateKind, GateOp};
use crate::error::{arg_err, Result};

/// Gates accepted by [`transpile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum SourceGate {
    H { q: usize },
    X { q: usize },
    /// `diag(1, e^{iθ})`
    U1 { q: usize, theta: f64 },
    /// Controlled `U1(θ)`.
    Cu1 { control: usize, target: usize, theta: f64 },
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
    Rx { q: usize, theta: f64 },
    Rz { q: usize, theta: f64 },
    Cz { a: usize, b: usize },
    /// Representable so that callers get a clear error; decompose before
    /// transpiling.
    Toffoli { c0: usize, c1: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceCircuit {
    pub n_qubits: usize,
    pub gates: Vec<SourceGate>,
}

impl SourceCircuit {
    pub fn new(n_qubits: usize) -> Self {
        SourceCircuit { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, g: SourceGate) -> &mut Self {
        self.gates.push(g);
        self
    }

    /// Appends the six-CNOT Toffoli decomposition.
    pub fn toffoli(&mut self, c0: usize, c1: usize, target: usize) -> &mut Self {
        use SourceGate::*;
        let t = PI / 4.0;
        for g in [
            H { q: target },
            Cnot { control: c1, target },
            U1 { q: target, theta: -t },
            Cnot { control: c0, target },
            U1 { q: target, theta: t },
            Cnot { control: c1, target },
            U1 { q: target, theta: -t },
            Cnot { control: c0, target },
            U1 { q: c1, theta: t },
            U1 { q: target, theta: t },
            H { q: target },
            Cnot { control: c0, target: c1 },
            U1 { q: c0, theta: t },
            U1 { q: c1, theta: -t },
            Cnot { control: c0, target: c1 },
        ] {
            self.gates.push(g);
        }
        self
    }
}

fn hadamard(q: usize, out: &mut Vec<GateOp>) {
    out.extend([GateOp::rz(q, FRAC_PI_2), GateOp::rx(q, FRAC_PI_2), GateOp::rz(q, FRAC_PI_2)]);
}

fn cnot(c: usize, t: usize, out: &mut Vec<GateOp>) {
    hadamard(t, out);
    out.push(GateOp::cz(c, t));
    hadamard(t, out);
}

fn lower(g: &SourceGate, out: &mut Vec<GateOp>) -> Result<()> {
    match *g {
        SourceGate::H { q } => hadamard(q, out),
        SourceGate::X { q } => out.push(GateOp::rx(q, PI)),
        SourceGate::U1 { q, theta } | SourceGate::Rz { q, theta } => out.push(GateOp::rz(q, theta)),
        SourceGate::Rx { q, theta } => out.push(GateOp::rx(q, theta)),
        SourceGate::Cz { a, b } => out.push(GateOp::cz(a, b)),
        SourceGate::Cnot { control, target } => cnot(control, target, out),
        SourceGate::Cu1 { control, target, theta } => {
            // CP(θ) ≅ Rz_c(θ/2) Rz_t(θ/2) · CNOT · Rz_t(-θ/2) · CNOT, with the
            // CNOT-conjugated Rz folded into an Rx between two CZs.
            out.push(GateOp::rz(control, theta / 2.0));
            hadamard(target, out);
            out.push(GateOp::cz(control, target));
            out.push(GateOp::rx(target, -theta / 2.0));
            out.push(GateOp::cz(control, target));
            hadamard(target, out);
            out.push(GateOp::rz(target, theta / 2.0));
        }
        SourceGate::Swap { a, b } => {
            cnot(a, b, out);
            cnot(b, a, out);
            cnot(a, b, out);
        }
        SourceGate::Toffoli { .. } => {
            return arg_err("Toffoli is not a supported source gate; decompose it first");
        }
    }
    Ok(())
}

const FUSE_TOL: f64 = 1e-12;

/// Folds consecutive same-axis rotations on a qubit and drops identity
/// rotations.
fn fuse_rotations(gates: Vec<GateOp>, n_qubits: usize) -> Vec<GateOp> {
    let mut out: Vec<GateOp> = Vec::with_capacity(gates.len());
    // index into `out` of the last gate touching each qubit
    let mut last: Vec<Option<usize>> = vec![None; n_qubits];
    for g in gates {
        if g.kind() != GateKind::Cz {
            let q = g.qubits()[0];
            if let Some(i) = last[q] {
                if out[i].kind() == g.kind() {
                    let t = normalize_turns(out[i].turns + g.turns());
                    // snap round-off from cancelling pairs back to the identity
                    out[i].turns = if !(FUSE_TOL..=1.0 - FUSE_TOL).contains(&t) { 0.0 } else { t };
                    continue;
                }
            }
        }
        for &q in g.qubits() {
            last[q] = Some(out.len());
        }
        out.push(g);
    }
    out.into_iter().filter(|g| g.kind() == GateKind::Cz || g.turns() != 0.0).collect()
}

/// Lowers a source circuit to native gates (equal up to global phase) and
/// schedules it ASAP.
pub fn transpile(src: &SourceCircuit) -> Result<Circuit> {
    let mut native = Vec::new();
    for g in &src.gates {
        lower(g, &mut native)?;
    }
    let native = fuse_rotations(native, src.n_qubits);
    schedule(&native, src.n_qubits)
}

/// Radians to the `[0, 2π)` range used by native gates.
pub fn wrap_angle(theta: f64) -> f64 {
    normalize_turns(theta / TAU) * TAU
}
