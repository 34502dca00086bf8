//! Scheduled circuits over the native gate set `{Rx, Rz, CZ}`.
//!
//! A [`Circuit`] is a list of [`Moment`]s. Each moment holds at most one gate
//! per qubit plus a per-qubit [`NoiseParams`] slot describing the noise
//! channels that follow the moment's gates.

pub mod builders;
pub mod clifford;
pub mod generate;
pub mod qcr;
pub mod transpile;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg_err, data_err, Result};
use crate::qdm::{square_matmul, Unitary, MAX_QUBITS, ONE, ZERO};

pub use builders::{build_grover_11, build_qft, grover_source, qft_source};
pub use generate::{random_circuit, random_clifford_circuit_1q, random_clifford_native_circuit, random_clifford_unitary_circuit};
pub use qcr::{decode_qcr, encode_qcr, Qcr, ENCODING_LEN};
pub use transpile::{transpile, SourceCircuit, SourceGate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Rz,
    Cz,
}

/// One native gate. Rotation angles are stored as turns in `[0, 1)`, so the
/// normalised angle `θ / 2π` used by the circuit encoding is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    kind: GateKind,
    turns: f64,
    qubits: Vec<usize>,
}

pub(crate) fn normalize_turns(turns: f64) -> f64 {
    let t = turns.rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

impl GateOp {
    /// `Rx(angle)` with `angle` in radians.
    pub fn rx(qubit: usize, angle: f64) -> Self {
        Self::rx_turns(qubit, angle / TAU)
    }

    pub fn rz(qubit: usize, angle: f64) -> Self {
        Self::rz_turns(qubit, angle / TAU)
    }

    pub fn rx_turns(qubit: usize, turns: f64) -> Self {
        GateOp { kind: GateKind::Rx, turns: normalize_turns(turns), qubits: vec![qubit] }
    }

    pub fn rz_turns(qubit: usize, turns: f64) -> Self {
        GateOp { kind: GateKind::Rz, turns: normalize_turns(turns), qubits: vec![qubit] }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        GateOp { kind: GateKind::Cz, turns: 0.0, qubits: vec![a, b] }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    /// Rotation angle in radians, within `[0, 2π)`; zero for CZ.
    pub fn angle(&self) -> f64 {
        self.turns * TAU
    }

    /// Rotation angle as a fraction of a full turn.
    pub fn turns(&self) -> f64 {
        self.turns
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    /// True for rotations by a multiple of π/2 and for CZ.
    pub fn is_clifford(&self) -> bool {
        let quarter = self.turns * 4.0;
        quarter == quarter.round()
    }

    pub fn unitary(&self) -> Unitary {
        match self.kind {
            GateKind::Rx => Unitary::rx(self.angle()),
            GateKind::Rz => Unitary::rz(self.angle()),
            GateKind::Cz => Unitary::cz(),
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let expected = if self.kind == GateKind::Cz { 2 } else { 1 };
        if self.qubits.len() != expected {
            return arg_err(format!("{:?} needs {expected} qubit(s), got {:?}", self.kind, self.qubits));
        }
        if let Some(q) = self.qubits.iter().find(|&&q| q >= n_qubits) {
            return arg_err(format!("gate qubit {q} out of range for {n_qubits} qubits"));
        }
        if expected == 2 && self.qubits[0] == self.qubits[1] {
            return arg_err(format!("CZ needs two distinct qubits, got {:?}", self.qubits));
        }
        if !self.turns.is_finite() {
            return arg_err("gate angle must be finite");
        }
        Ok(())
    }
}

/// Noise channel parameters attached to one qubit of one moment.
/// A zero entry means the channel is absent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub dep: f64,
    pub damp: f64,
    pub coh_z: f64,
    pub coh_x: f64,
}

impl NoiseParams {
    /// `[dep, damp, coh_z, coh_x]`, the encoding and action order.
    pub fn to_array(self) -> [f64; 4] {
        [self.dep, self.damp, self.coh_z, self.coh_x]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        NoiseParams { dep: a[0], damp: a[1], coh_z: a[2], coh_x: a[3] }
    }

    pub fn is_zero(&self) -> bool {
        self.to_array().iter().all(|&v| v == 0.0)
    }
}

/// Gates that execute in parallel, plus the noise that follows them.
#[derive(Debug, Clone, PartialEq)]
pub struct Moment {
    gates: Vec<GateOp>,
    noise: Vec<NoiseParams>,
}

impl Moment {
    pub fn new(n_qubits: usize) -> Self {
        Moment { gates: Vec::new(), noise: vec![NoiseParams::default(); n_qubits] }
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn noise(&self) -> &[NoiseParams] {
        &self.noise
    }

    pub fn noise_mut(&mut self) -> &mut [NoiseParams] {
        &mut self.noise
    }

    pub fn is_free(&self, qubit: usize) -> bool {
        !self.gates.iter().any(|g| g.qubits.contains(&qubit))
    }

    /// Gate occupying `qubit`, if any.
    pub fn occupant(&self, qubit: usize) -> Option<&GateOp> {
        self.gates.iter().find(|g| g.qubits.contains(&qubit))
    }

    /// Adds a gate, refusing to double-book a qubit.
    pub fn add_gate(&mut self, gate: GateOp) -> Result<()> {
        gate.validate(self.noise.len())?;
        if let Some(q) = gate.qubits.iter().find(|&&q| !self.is_free(q)) {
            return arg_err(format!("qubit {q} already occupied in this moment"));
        }
        self.gates.push(gate);
        self.gates.sort_by_key(|g| g.qubits[0]);
        Ok(())
    }

    pub fn clear_noise(&mut self) {
        self.noise.iter_mut().for_each(|n| *n = NoiseParams::default());
    }
}

/// An ordered list of moments on a fixed qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    moments: Vec<Moment>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return arg_err(format!("qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"));
        }
        Ok(Circuit { n_qubits, moments: Vec::new() })
    }

    /// Empty circuit with `depth` blank moments.
    pub fn with_depth(n_qubits: usize, depth: usize) -> Result<Self> {
        let mut c = Circuit::new(n_qubits)?;
        c.moments = vec![Moment::new(n_qubits); depth];
        Ok(c)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.moments.len()
    }

    pub fn moments(&self) -> &[Moment] {
        &self.moments
    }

    pub fn moments_mut(&mut self) -> &mut [Moment] {
        &mut self.moments
    }

    pub fn push_moment(&mut self, moment: Moment) -> Result<()> {
        if moment.noise.len() != self.n_qubits {
            return arg_err("moment width does not match circuit");
        }
        self.moments.push(moment);
        Ok(())
    }

    pub fn gates(&self) -> impl Iterator<Item = &GateOp> {
        self.moments.iter().flat_map(|m| m.gates.iter())
    }

    pub fn gate_count(&self) -> usize {
        self.gates().count()
    }

    pub fn cz_count(&self) -> usize {
        self.gates().filter(|g| g.kind == GateKind::Cz).count()
    }

    /// Copy with every noise slot cleared.
    pub fn noiseless(&self) -> Circuit {
        let mut c = self.clone();
        c.moments.iter_mut().for_each(Moment::clear_noise);
        c
    }

    pub fn has_noise(&self) -> bool {
        self.moments.iter().any(|m| m.noise.iter().any(|n| !n.is_zero()))
    }

    /// Gates in time order: moment by moment, ascending first qubit.
    pub fn gate_list(&self) -> Vec<GateOp> {
        self.gates().cloned().collect()
    }

    /// Composite `2^n × 2^n` unitary of the gates (noise slots ignored),
    /// row-major.
    pub fn unitary(&self) -> Vec<Complex64> {
        let d = 1 << self.n_qubits;
        let mut total = vec![ZERO; d * d];
        for i in 0..d {
            total[i * d + i] = ONE;
        }
        for g in self.gates() {
            let full = embed(&g.unitary(), g.qubits(), self.n_qubits);
            total = square_matmul(&full, &total, d);
        }
        total
    }
}

/// Embeds a 1- or 2-qubit unitary into the full register.
pub fn embed(u: &Unitary, targets: &[usize], n_qubits: usize) -> Vec<Complex64> {
    let d = 1 << n_qubits;
    let bit = |i: usize, q: usize| (i >> (n_qubits - 1 - q)) & 1;
    let local = |i: usize| targets.iter().fold(0, |acc, &q| (acc << 1) | bit(i, q));
    let rest_equal = |r: usize, c: usize| {
        (0..n_qubits).filter(|q| !targets.contains(q)).all(|q| bit(r, q) == bit(c, q))
    };
    let mut out = vec![ZERO; d * d];
    for r in 0..d {
        for c in 0..d {
            if rest_equal(r, c) {
                out[r * d + c] = u.get(local(r), local(c));
            }
        }
    }
    out
}

/// ASAP scheduling: each gate lands in the first moment after the last one
/// used by any of its qubits.
pub fn schedule(gates: &[GateOp], n_qubits: usize) -> Result<Circuit> {
    let mut circuit = Circuit::new(n_qubits)?;
    let mut frontier = vec![0usize; n_qubits];
    for g in gates {
        g.validate(n_qubits)?;
        let slot = g.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
        while circuit.moments.len() <= slot {
            circuit.moments.push(Moment::new(n_qubits));
        }
        circuit.moments[slot].add_gate(g.clone())?;
        for &q in &g.qubits {
            frontier[q] = slot + 1;
        }
    }
    Ok(circuit)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GateRepr {
    gate: GateKind,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    turns: Option<f64>,
    /// Radians; accepted on input as an alternative to `turns`.
    #[serde(default, skip_serializing)]
    angle: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct NoiseRepr {
    qubit: usize,
    #[serde(flatten)]
    params: NoiseParams,
}

#[derive(Serialize, Deserialize)]
struct MomentRepr {
    gates: Vec<GateRepr>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    noise: Vec<NoiseRepr>,
}

#[derive(Serialize, Deserialize)]
struct CircuitRepr {
    n_qubits: usize,
    moments: Vec<MomentRepr>,
}

impl Serialize for Circuit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let moments = self
            .moments
            .iter()
            .map(|m| MomentRepr {
                gates: m
                    .gates
                    .iter()
                    .map(|g| GateRepr {
                        gate: g.kind,
                        qubits: g.qubits.clone(),
                        turns: (g.kind != GateKind::Cz).then_some(g.turns),
                        angle: None,
                    })
                    .collect(),
                noise: m
                    .noise
                    .iter()
                    .enumerate()
                    .filter(|(_, n)| !n.is_zero())
                    .map(|(qubit, n)| NoiseRepr { qubit, params: *n })
                    .collect(),
            })
            .collect();
        CircuitRepr { n_qubits: self.n_qubits, moments }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CircuitRepr::deserialize(d)?;
        circuit_from_repr(repr).map_err(serde::de::Error::custom)
    }
}

fn circuit_from_repr(repr: CircuitRepr) -> Result<Circuit> {
    let mut c = Circuit::new(repr.n_qubits)?;
    for m in repr.moments {
        let mut moment = Moment::new(repr.n_qubits);
        for g in m.gates {
            let turns = match (g.turns, g.angle) {
                (Some(t), _) => t,
                (None, Some(a)) => a / TAU,
                (None, None) => 0.0,
            };
            let op = match (g.gate, g.qubits.as_slice()) {
                (GateKind::Rx, [q]) => GateOp::rx_turns(*q, turns),
                (GateKind::Rz, [q]) => GateOp::rz_turns(*q, turns),
                (GateKind::Cz, [a, b]) => GateOp::cz(*a, *b),
                (kind, qs) => return data_err(format!("{kind:?} cannot act on qubits {qs:?}")),
            };
            moment.add_gate(op)?;
        }
        for n in m.noise {
            if n.qubit >= repr.n_qubits {
                return data_err(format!("noise on qubit {} out of range", n.qubit));
            }
            moment.noise[n.qubit] = n.params;
        }
        c.moments.push(moment);
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disjoint_gates_share_a_moment() {
        let c = schedule(&[GateOp::rx(0, PI / 2.0), GateOp::rz(1, 0.3)], 2).unwrap();
        assert_eq!(c.depth(), 1);
    }

    #[test]
    fn same_qubit_gates_are_sequential() {
        let c = schedule(&[GateOp::rx(0, PI / 2.0), GateOp::rz(0, 0.3)], 1).unwrap();
        assert_eq!(c.depth(), 2);
    }

    #[test]
    fn cz_blocks_both_qubits() {
        let gates = [GateOp::rx(0, 1.0), GateOp::cz(0, 1), GateOp::rz(1, 1.0), GateOp::rz(2, 1.0)];
        let c = schedule(&gates, 3).unwrap();
        assert_eq!(c.depth(), 3);
        assert_eq!(c.moments()[0].gates().len(), 2);
        assert!(!c.moments()[1].is_free(0) && !c.moments()[1].is_free(1));
    }

    #[test]
    fn schedule_rejects_bad_qubits() {
        assert!(schedule(&[GateOp::rx(3, 0.0)], 2).is_err());
        assert!(schedule(&[GateOp::cz(1, 1)], 2).is_err());
    }

    #[test]
    fn angles_are_normalised() {
        let g = GateOp::rz(0, -PI / 2.0);
        assert!((g.angle() - 1.5 * PI).abs() < 1e-12);
        assert_eq!(GateOp::rx(0, 2.0 * PI).turns(), 0.0);
        assert_eq!(GateOp::rx_turns(0, -1e-18).turns(), 0.0);
    }

    #[test]
    fn double_booking_is_refused() {
        let mut m = Moment::new(2);
        m.add_gate(GateOp::cz(0, 1)).unwrap();
        assert!(m.add_gate(GateOp::rx(1, 0.0)).is_err());
    }

    #[test]
    fn json_round_trip_is_byte_stable() {
        let mut c = schedule(&[GateOp::rx(0, 0.123), GateOp::cz(0, 1), GateOp::rz(1, 4.0)], 2).unwrap();
        c.moments_mut()[1].noise_mut()[1].damp = 0.2;
        let a = serde_json::to_string(&c).unwrap();
        let back: Circuit = serde_json::from_str(&a).unwrap();
        assert_eq!(back, c);
        assert_eq!(serde_json::to_string(&back).unwrap(), a);
    }

    #[test]
    fn json_accepts_radians() {
        let c: Circuit =
            serde_json::from_str(r#"{"n_qubits":1,"moments":[{"gates":[{"gate":"rx","qubits":[0],"angle":3.141592653589793}]}]}"#)
                .unwrap();
        assert!((c.moments()[0].gates()[0].turns() - 0.5).abs() < 1e-15);
    }
}
