//! Tensor encoding of a circuit, `[qubits × moments × 8]`.
//!
//! Per (qubit, moment) the eight entries are
//! `[Rz, Rx, CZ, θ/2π, Dep, Damp, Coh_z, Coh_x]`.

use serde::{Deserialize, Serialize};

use super::{Circuit, GateKind, GateOp, Moment, NoiseParams};
use crate::error::{arg_err, data_err, Result};

pub const ENCODING_LEN: usize = 8;

const RZ: usize = 0;
const RX: usize = 1;
const CZ: usize = 2;
const THETA: usize = 3;
const NOISE: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qcr {
    n_qubits: usize,
    depth: usize,
    data: Vec<f64>,
}

impl Qcr {
    pub fn zeros(n_qubits: usize, depth: usize) -> Self {
        Qcr { n_qubits, depth, data: vec![0.0; n_qubits * depth * ENCODING_LEN] }
    }

    pub fn from_raw(n_qubits: usize, depth: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_qubits * depth * ENCODING_LEN {
            return arg_err(format!(
                "QCR of shape [{n_qubits} × {depth} × {ENCODING_LEN}] needs {} values, got {}",
                n_qubits * depth * ENCODING_LEN,
                data.len()
            ));
        }
        Ok(Qcr { n_qubits, depth, data })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Flat `[qubit][moment][entry]` storage.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, qubit: usize, moment: usize) -> usize {
        (qubit * self.depth + moment) * ENCODING_LEN
    }

    /// The eight-entry row for one qubit at one moment.
    pub fn entry(&self, qubit: usize, moment: usize) -> &[f64] {
        let o = self.offset(qubit, moment);
        &self.data[o..o + ENCODING_LEN]
    }

    fn entry_mut(&mut self, qubit: usize, moment: usize) -> &mut [f64] {
        let o = self.offset(qubit, moment);
        &mut self.data[o..o + ENCODING_LEN]
    }

    /// Moments `m - (k-1)/2 ..= m + (k-1)/2` as a `[qubits × k × 8]` array,
    /// zero-padded past either end of the circuit.
    pub fn window(&self, moment: usize, k: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_qubits * k * ENCODING_LEN];
        self.window_into(moment, k, &mut out)?;
        Ok(out)
    }

    pub fn window_into(&self, moment: usize, k: usize, out: &mut [f64]) -> Result<()> {
        if k == 0 || k.is_multiple_of(2) {
            return arg_err(format!("window size must be odd and positive, got {k}"));
        }
        if moment >= self.depth {
            return arg_err(format!("moment {moment} out of range for depth {}", self.depth));
        }
        if out.len() != self.n_qubits * k * ENCODING_LEN {
            return arg_err("window buffer has the wrong size");
        }
        let half = (k - 1) / 2;
        for q in 0..self.n_qubits {
            for j in 0..k {
                let dst = &mut out[(q * k + j) * ENCODING_LEN..(q * k + j + 1) * ENCODING_LEN];
                let src = (moment + j).checked_sub(half).filter(|&m| m < self.depth);
                match src {
                    Some(m) => dst.copy_from_slice(self.entry(q, m)),
                    None => dst.fill(0.0),
                }
            }
        }
        Ok(())
    }

    /// Overwrites the noise entries of one moment.
    pub fn set_noise(&mut self, moment: usize, noise: &[NoiseParams]) {
        for (q, n) in noise.iter().enumerate() {
            self.entry_mut(q, moment)[NOISE..].copy_from_slice(&n.to_array());
        }
    }
}

/// Encodes gates as one-hot flags plus normalised angle, and copies the
/// noise slots.
pub fn encode_qcr(c: &Circuit) -> Qcr {
    let mut t = Qcr::zeros(c.n_qubits(), c.depth());
    for (m, moment) in c.moments().iter().enumerate() {
        for g in moment.gates() {
            for &q in g.qubits() {
                let e = t.entry_mut(q, m);
                match g.kind() {
                    GateKind::Rz => {
                        e[RZ] = 1.0;
                        e[THETA] = g.turns();
                    }
                    GateKind::Rx => {
                        e[RX] = 1.0;
                        e[THETA] = g.turns();
                    }
                    GateKind::Cz => e[CZ] = 1.0,
                }
            }
        }
        t.set_noise(m, moment.noise());
    }
    t
}

/// Inverse of [`encode_qcr`]. CZ partners are recovered by pairing the two
/// CZ-flagged qubits of a moment, so at most one CZ per moment is allowed.
pub fn decode_qcr(t: &Qcr) -> Result<Circuit> {
    let mut c = Circuit::new(t.n_qubits())?;
    for m in 0..t.depth() {
        let mut moment = Moment::new(t.n_qubits());
        let mut cz_qubits = Vec::new();
        for q in 0..t.n_qubits() {
            let e = t.entry(q, m);
            if e.iter().any(|v| !v.is_finite()) {
                return data_err(format!("non-finite entry at qubit {q}, moment {m}"));
            }
            let flags = [e[RZ], e[RX], e[CZ]];
            if flags.iter().any(|&f| f != 0.0 && f != 1.0) {
                return data_err(format!("gate flags must be 0 or 1 at qubit {q}, moment {m}"));
            }
            if flags.iter().sum::<f64>() > 1.0 {
                return data_err(format!("more than one gate flag set at qubit {q}, moment {m}"));
            }
            let theta = e[THETA];
            if !(0.0..1.0).contains(&theta) {
                return data_err(format!("normalised angle {theta} outside [0, 1) at qubit {q}, moment {m}"));
            }
            if theta != 0.0 && flags[RZ] == 0.0 && flags[RX] == 0.0 {
                return data_err(format!("angle set without a rotation gate at qubit {q}, moment {m}"));
            }
            if e[NOISE..].iter().any(|v| !v.is_finite()) || e[NOISE] < 0.0 || e[NOISE + 1] < 0.0 {
                return data_err(format!("invalid noise entry at qubit {q}, moment {m}"));
            }
            if flags[RZ] == 1.0 {
                moment.add_gate(GateOp::rz_turns(q, theta))?;
            } else if flags[RX] == 1.0 {
                moment.add_gate(GateOp::rx_turns(q, theta))?;
            } else if flags[CZ] == 1.0 {
                cz_qubits.push(q);
            }
            moment.noise_mut()[q] =
                NoiseParams::from_array([e[NOISE], e[NOISE + 1], e[NOISE + 2], e[NOISE + 3]]);
        }
        match cz_qubits.as_slice() {
            [] => {}
            [a, b] => moment.add_gate(GateOp::cz(*a, *b))?,
            other => return data_err(format!("cannot pair CZ flags on qubits {other:?} at moment {m}")),
        }
        c.push_moment(moment)?;
    }
    Ok(c)
}
