//! Textbook algorithm circuits, lowered to native gates.

use std::f64::consts::TAU;

use super::transpile::{transpile, SourceCircuit, SourceGate};
use super::Circuit;
use crate::error::Result;

/// Quantum Fourier transform on `n` qubits without the final swap layer.
/// Controlled phases use `U1(2π / 2^k)`.
pub fn qft_source(n_qubits: usize) -> SourceCircuit {
    let mut s = SourceCircuit::new(n_qubits);
    for j in 0..n_qubits {
        s.push(SourceGate::H { q: j });
        for c in j + 1..n_qubits {
            let k = (c - j + 1) as i32;
            s.push(SourceGate::Cu1 { control: c, target: j, theta: TAU / 2f64.powi(k) });
        }
    }
    s
}

pub fn build_qft(n_qubits: usize) -> Result<Circuit> {
    transpile(&qft_source(n_qubits))
}

/// One Grover iteration marking `|11⟩` on qubits 0 and 1, with qubit 2 as
/// the phase-kickback ancilla prepared in `|−⟩`.
pub fn grover_source() -> SourceCircuit {
    use SourceGate::*;
    let mut s = SourceCircuit::new(3);
    s.push(X { q: 2 }).push(H { q: 2 }).push(H { q: 0 }).push(H { q: 1 });
    // oracle
    s.toffoli(0, 1, 2);
    // diffusion about the uniform state
    for q in [0, 1] {
        s.push(H { q }).push(X { q });
    }
    s.push(Cz { a: 0, b: 1 });
    for q in [0, 1] {
        s.push(X { q }).push(H { q });
    }
    s
}

pub fn build_grover_11() -> Result<Circuit> {
    transpile(&grover_source())
}
