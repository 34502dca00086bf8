//! Random circuit generators for datasets and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::clifford::Tableau;
use super::{Circuit, GateOp, Moment};
use crate::error::{arg_err, Result};

/// How the rotation angle of a generated gate is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Angles {
    /// Uniform in `[0, 2π)`.
    Continuous,
    /// A non-zero multiple of π/2.
    Quarter,
}

fn random_rotation<R: Rng + ?Sized>(q: usize, angles: Angles, rng: &mut R) -> GateOp {
    let turns = match angles {
        Angles::Continuous => rng.random::<f64>(),
        Angles::Quarter => f64::from(rng.random_range(1..4u8)) / 4.0,
    };
    if rng.random::<bool>() {
        GateOp::rx_turns(q, turns)
    } else {
        GateOp::rz_turns(q, turns)
    }
}

fn random_layered<R: Rng + ?Sized>(n_qubits: usize, n_moments: usize, angles: Angles, rng: &mut R) -> Result<Circuit> {
    if n_moments == 0 {
        return arg_err("circuit needs at least one moment");
    }
    let mut c = Circuit::new(n_qubits)?;
    let mut order: Vec<usize> = (0..n_qubits).collect();
    for _ in 0..n_moments {
        let mut m = Moment::new(n_qubits);
        order.shuffle(rng);
        let mut rest = order.as_slice();
        // with two or more qubits, half of the moments carry one CZ
        if n_qubits >= 2 && rng.random::<bool>() {
            m.add_gate(GateOp::cz(order[0].min(order[1]), order[0].max(order[1])))?;
            rest = &order[2..];
        }
        for &q in rest {
            m.add_gate(random_rotation(q, angles, rng))?;
        }
        c.push_moment(m)?;
    }
    Ok(c)
}

/// `n_moments` moments in which every qubit is busy: either part of a CZ or
/// carrying an `Rx`/`Rz` with a uniform random angle.
pub fn random_circuit<R: Rng + ?Sized>(n_qubits: usize, n_moments: usize, rng: &mut R) -> Result<Circuit> {
    random_layered(n_qubits, n_moments, Angles::Continuous, rng)
}

/// Like [`random_circuit`] but every rotation is a non-trivial multiple of
/// π/2, so the circuit is Clifford.
pub fn random_clifford_native_circuit<R: Rng + ?Sized>(n_qubits: usize, n_moments: usize, rng: &mut R) -> Result<Circuit> {
    random_layered(n_qubits, n_moments, Angles::Quarter, rng)
}

/// Single-qubit Clifford circuit with one native Clifford rotation per moment.
pub fn random_clifford_circuit_1q<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> Result<Circuit> {
    random_clifford_native_circuit(1, depth, rng)
}

/// A uniformly random `n`-qubit Clifford unitary synthesised into native
/// gates. The depth varies; the identity element is redrawn so the circuit
/// is never empty.
pub fn random_clifford_unitary_circuit<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Circuit> {
    if n_qubits == 0 || n_qubits > 4 {
        return arg_err(format!("qubit count must be in 1..=4, got {n_qubits}"));
    }
    loop {
        let c = Tableau::random(n_qubits, rng).to_circuit()?;
        if c.depth() > 0 {
            return Ok(c);
        }
    }
}
