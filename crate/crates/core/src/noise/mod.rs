//! Noise models that decorate a noiseless circuit with channel parameters,
//! and the simulator that turns a decorated circuit into a density matrix.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateKind, NoiseParams};
use crate::error::{arg_err, Result};
use crate::qdm::{zero_state, DensityMatrix, KrausChannel};

/// Action entries below this value insert no channel.
pub const ZERO_THRESHOLD: f64 = 1e-4;

/// Anything that maps a noiseless circuit to a noisy one.
pub trait NoiseModel {
    fn name(&self) -> &str;
    fn apply(&self, c: &Circuit) -> Result<Circuit>;
}

/// Channels inserted after every gate of one kind. Coherent angles scale
/// with the gate's own rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateNoiseRule {
    pub gate: GateKind,
    #[serde(default)]
    pub dep: f64,
    #[serde(default)]
    pub damp: f64,
    #[serde(default)]
    pub coh_x_factor: f64,
    #[serde(default)]
    pub coh_z_factor: f64,
}

impl GateNoiseRule {
    pub fn new(gate: GateKind, dep: f64, damp: f64, coh_x_factor: f64, coh_z_factor: f64) -> Self {
        GateNoiseRule { gate, dep, damp, coh_x_factor, coh_z_factor }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("dep", self.dep), ("damp", self.damp)] {
            if !(0.0..=1.0).contains(&v) {
                return arg_err(format!("{name} for {:?} must lie in [0, 1], got {v}", self.gate));
            }
        }
        for (name, v) in [("coh_x_factor", self.coh_x_factor), ("coh_z_factor", self.coh_z_factor)] {
            if !v.is_finite() || v.abs() > 0.5 {
                return arg_err(format!("{name} for {:?} must be finite with |f| <= 0.5, got {v}", self.gate));
            }
        }
        if self.gate == GateKind::Cz && (self.coh_x_factor != 0.0 || self.coh_z_factor != 0.0) {
            return arg_err("CZ rules carry no coherent error");
        }
        Ok(())
    }

    /// Noise following a gate with the given angle in radians.
    fn params(&self, angle: f64) -> NoiseParams {
        NoiseParams { dep: self.dep, damp: self.damp, coh_z: self.coh_z_factor * angle, coh_x: self.coh_x_factor * angle }
    }
}

/// A named set of per-gate rules, at most one per gate kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModelSpec {
    pub name: String,
    pub rules: Vec<GateNoiseRule>,
}

impl NoiseModelSpec {
    pub fn new(name: impl Into<String>, rules: Vec<GateNoiseRule>) -> Result<Self> {
        let spec = NoiseModelSpec { name: name.into(), rules };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            r.validate()?;
            if self.rules[..i].iter().any(|o| o.gate == r.gate) {
                return arg_err(format!("duplicate rule for {:?} in noise model '{}'", r.gate, self.name));
            }
        }
        Ok(())
    }

    pub fn rule(&self, kind: GateKind) -> Option<&GateNoiseRule> {
        self.rules.iter().find(|r| r.gate == kind)
    }

    /// Single-qubit model: damping and an Rx over-rotation on Rx, depolarizing
    /// and an Rz over-rotation on Rz.
    pub fn one_qubit() -> Self {
        NoiseModelSpec {
            name: "1q".into(),
            rules: vec![
                GateNoiseRule::new(GateKind::Rx, 0.0, 0.03, 0.04, 0.0),
                GateNoiseRule::new(GateKind::Rz, 0.02, 0.0, 0.0, 0.02),
            ],
        }
    }

    pub fn three_qubit_high() -> Self {
        NoiseModelSpec {
            name: "3q-high".into(),
            rules: vec![
                GateNoiseRule::new(GateKind::Rx, 0.0, 0.03, 0.04, 0.0),
                GateNoiseRule::new(GateKind::Rz, 0.02, 0.0, 0.0, 0.03),
                GateNoiseRule::new(GateKind::Cz, 0.02, 0.03, 0.0, 0.0),
            ],
        }
    }

    pub fn three_qubit_low() -> Self {
        NoiseModelSpec {
            name: "3q-low".into(),
            rules: vec![
                GateNoiseRule::new(GateKind::Rx, 0.0, 0.01, 0.015, 0.0),
                GateNoiseRule::new(GateKind::Rz, 0.015, 0.0, 0.0, 0.02),
                GateNoiseRule::new(GateKind::Cz, 0.015, 0.01, 0.0, 0.0),
            ],
        }
    }

    /// Depolarizing `λ` after every gate on every qubit it touches.
    pub fn uniform_depolarizing(lambda: f64) -> Result<Self> {
        let rules = [GateKind::Rx, GateKind::Rz, GateKind::Cz].map(|g| GateNoiseRule::new(g, lambda, 0.0, 0.0, 0.0));
        NoiseModelSpec::new(format!("dep-{lambda}"), rules.to_vec())
    }

    /// Built-in presets: `1q`, `3q-high`, `3q-low`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "1q" => Some(Self::one_qubit()),
            "3q-high" => Some(Self::three_qubit_high()),
            "3q-low" => Some(Self::three_qubit_low()),
            _ => None,
        }
    }

    pub const PRESETS: [&'static str; 3] = ["1q", "3q-high", "3q-low"];
}

impl NoiseModel for NoiseModelSpec {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, c: &Circuit) -> Result<Circuit> {
        apply_ground_truth(c, self)
    }
}

/// Fills every gate's noise slot according to `spec`. Slots of idle qubits
/// are cleared.
pub fn apply_ground_truth(c: &Circuit, spec: &NoiseModelSpec) -> Result<Circuit> {
    spec.validate()?;
    let mut out = c.noiseless();
    for m in out.moments_mut() {
        let fills: Vec<(usize, NoiseParams)> = m
            .gates()
            .iter()
            .filter_map(|g| spec.rule(g.kind()).map(|r| (g, r.params(g.angle()))))
            .flat_map(|(g, p)| g.qubits().iter().map(move |&q| (q, p)).collect::<Vec<_>>())
            .collect();
        for (q, p) in fills {
            m.noise_mut()[q] = p;
        }
    }
    Ok(out)
}

/// Depolarizing baseline derived from a benchmarking decay `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbModel {
    p: f64,
}

impl RbModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return arg_err(format!("decay parameter must lie in (0, 1], got {p}"));
        }
        Ok(RbModel { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Per-gate depolarizing strength `1 - p`.
    pub fn strength(&self) -> f64 {
        1.0 - self.p
    }
}

impl NoiseModel for RbModel {
    fn name(&self) -> &str {
        "rb"
    }

    fn apply(&self, c: &Circuit) -> Result<Circuit> {
        Ok(apply_rb_model(c, self))
    }
}

/// Inserts `Dep(1 - p)` after every gate on each qubit it acts on.
pub fn apply_rb_model(c: &Circuit, m: &RbModel) -> Circuit {
    let mut out = c.noiseless();
    let lambda = m.strength();
    if lambda == 0.0 {
        return out;
    }
    for moment in out.moments_mut() {
        let qubits: Vec<usize> = moment.gates().iter().flat_map(|g| g.qubits().to_vec()).collect();
        for q in qubits {
            moment.noise_mut()[q] = NoiseParams { dep: lambda, ..NoiseParams::default() };
        }
    }
    out
}

/// Per-qubit channel parameters chosen for one moment, `[qubit][Dep, Damp,
/// Coh_z, Coh_x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseAction {
    pub params: Vec<[f64; 4]>,
}

impl NoiseAction {
    pub fn zeros(n_qubits: usize) -> Self {
        NoiseAction { params: vec![[0.0; 4]; n_qubits] }
    }

    /// From a flat `[qubit × 4]` vector.
    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if !values.len().is_multiple_of(4) {
            return arg_err(format!("action length {} is not a multiple of 4", values.len()));
        }
        Ok(NoiseAction { params: values.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect() })
    }
}

fn threshold(v: f64) -> f64 {
    if v < ZERO_THRESHOLD {
        0.0
    } else {
        v
    }
}

/// Writes the action into moment `m`'s noise slots in place, overwriting
/// whatever was there.
pub fn apply_action_in_place(c: &mut Circuit, m: usize, a: &NoiseAction) -> Result<()> {
    write_slots(c, m, a, threshold)
}

/// Like [`apply_action_in_place`] but without the zero threshold, for
/// replaying known parameters exactly.
pub fn set_noise_in_place(c: &mut Circuit, m: usize, a: &NoiseAction) -> Result<()> {
    write_slots(c, m, a, |v| v)
}

fn write_slots(c: &mut Circuit, m: usize, a: &NoiseAction, f: fn(f64) -> f64) -> Result<()> {
    if m >= c.depth() {
        return arg_err(format!("moment {m} out of range for depth {}", c.depth()));
    }
    if a.params.len() != c.n_qubits() {
        return arg_err(format!("action covers {} qubits, circuit has {}", a.params.len(), c.n_qubits()));
    }
    if a.params.iter().flatten().any(|v| !v.is_finite()) {
        return arg_err("action entries must be finite");
    }
    let slots = c.moments_mut()[m].noise_mut();
    for (slot, p) in slots.iter_mut().zip(&a.params) {
        *slot = NoiseParams::from_array(p.map(f));
    }
    Ok(())
}

pub fn apply_action(c: &Circuit, m: usize, a: &NoiseAction) -> Result<Circuit> {
    let mut out = c.clone();
    apply_action_in_place(&mut out, m, a)?;
    Ok(out)
}

/// Runs the circuit from `|0…0⟩`: each moment applies its gates, then per
/// qubit in ascending order the channels Dep, Damp, Coh_z, Coh_x.
pub fn simulate(c: &Circuit) -> Result<DensityMatrix> {
    let mut rho = zero_state(c.n_qubits())?;
    for moment in c.moments() {
        for g in moment.gates() {
            match (g.kind(), g.qubits()) {
                (GateKind::Cz, &[a, b]) => rho.cz_in_place(a, b),
                (_, &[q]) => {
                    let u = g.unitary();
                    let d = u.data();
                    rho.apply_local_1q(&[d[0], d[1], d[2], d[3]], q);
                }
                _ => unreachable!("gate arity is checked on construction"),
            }
        }
        for (q, n) in moment.noise().iter().enumerate() {
            if n.dep != 0.0 {
                check_probability("depolarizing", n.dep)?;
                rho.depolarize_in_place(n.dep, q);
            }
            if n.damp != 0.0 {
                check_probability("damping", n.damp)?;
                rho.damp_in_place(n.damp, q);
            }
            if n.coh_z != 0.0 {
                let ch = KrausChannel::coherent_z(n.coh_z)?;
                rho.apply_local_1q(&ch.operators()[0], q);
            }
            if n.coh_x != 0.0 {
                let ch = KrausChannel::coherent_x(n.coh_x)?;
                rho.apply_local_1q(&ch.operators()[0], q);
            }
        }
    }
    Ok(rho)
}

fn check_probability(what: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return arg_err(format!("{what} parameter must lie in [0, 1], got {v}"));
    }
    Ok(())
}

/// Simulates the noiseless circuit after decorating it with `model`.
pub fn simulate_with<M: NoiseModel + ?Sized>(c: &Circuit, model: &M) -> Result<DensityMatrix> {
    simulate(&model.apply(c)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{schedule, GateOp};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn one_qubit_rules_on_rz_and_rx() {
        let spec = NoiseModelSpec::one_qubit();
        let c = schedule(&[GateOp::rz(0, PI), GateOp::rx(0, FRAC_PI_2)], 1).unwrap();
        let noisy = apply_ground_truth(&c, &spec).unwrap();
        let n0 = noisy.moments()[0].noise()[0];
        assert_eq!(n0.dep, 0.02);
        assert_abs_diff_eq!(n0.coh_z, 0.02 * PI, epsilon = 1e-15);
        let n1 = noisy.moments()[1].noise()[0];
        assert_eq!(n1.damp, 0.03);
        assert_abs_diff_eq!(n1.coh_x, 0.04 * FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(n1.dep, 0.0);
    }

    #[test]
    fn cz_rule_hits_both_qubits() {
        let c = schedule(&[GateOp::cz(0, 2)], 3).unwrap();
        let noisy = apply_ground_truth(&c, &NoiseModelSpec::three_qubit_high()).unwrap();
        let n = noisy.moments()[0].noise();
        assert_eq!((n[0].dep, n[0].damp), (0.02, 0.03));
        assert_eq!((n[2].dep, n[2].damp), (0.02, 0.03));
        assert!(n[1].is_zero());
    }

    #[test]
    fn empty_circuit_is_unchanged() {
        let c = Circuit::with_depth(2, 3).unwrap();
        assert_eq!(apply_ground_truth(&c, &NoiseModelSpec::three_qubit_low()).unwrap(), c);
    }

    #[test]
    fn rb_model_inserts_one_minus_p() {
        let c = schedule(&[GateOp::rx(0, 1.0), GateOp::rz(0, 1.0), GateOp::rx(0, 2.0)], 1).unwrap();
        let noisy = apply_rb_model(&c, &RbModel::new(0.96).unwrap());
        assert!(noisy.moments().iter().all(|m| (m.noise()[0].dep - 0.04).abs() < 1e-15));
        assert_eq!(apply_rb_model(&c, &RbModel::new(1.0).unwrap()), c);
        assert!(RbModel::new(0.0).is_err());
    }

    #[test]
    fn action_worked_example() {
        let c = Circuit::with_depth(2, 1).unwrap();
        let a = NoiseAction { params: vec![[0.1, 0.0, 0.0, 0.2], [0.0, 0.05, 0.3, 0.0]] };
        let out = apply_action(&c, 0, &a).unwrap();
        let n = out.moments()[0].noise();
        assert_eq!(n[0], NoiseParams { dep: 0.1, damp: 0.0, coh_z: 0.0, coh_x: 0.2 });
        assert_eq!(n[1], NoiseParams { dep: 0.0, damp: 0.05, coh_z: 0.3, coh_x: 0.0 });
        // overwrite, not accumulate
        assert_eq!(apply_action(&out, 0, &a).unwrap(), out);
        assert_eq!(apply_action(&c, 0, &NoiseAction::zeros(2)).unwrap(), c);
        assert!(apply_action(&c, 1, &a).is_err());
    }

    #[test]
    fn tiny_entries_are_dropped() {
        let c = Circuit::with_depth(1, 1).unwrap();
        let out = apply_action(&c, 0, &NoiseAction { params: vec![[5e-5, 0.0, 0.0, 0.0]] }).unwrap();
        assert!(!out.has_noise());
    }

    #[test]
    fn rx_pi_flips_the_qubit() {
        let c = schedule(&[GateOp::rx(0, PI)], 1).unwrap();
        let rho = simulate(&c).unwrap();
        assert_abs_diff_eq!(rho.get(1, 1).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn simulation_is_deterministic_and_valid() {
        let c = schedule(&[GateOp::rx(0, 0.3), GateOp::cz(0, 1), GateOp::rz(1, 2.0), GateOp::rx(2, 1.1)], 3).unwrap();
        let noisy = apply_ground_truth(&c, &NoiseModelSpec::three_qubit_high()).unwrap();
        let a = simulate(&noisy).unwrap();
        assert_eq!(a, simulate(&noisy).unwrap());
        a.validate().unwrap();
    }

    #[test]
    fn presets_validate_and_reject_duplicates() {
        for p in NoiseModelSpec::PRESETS {
            NoiseModelSpec::preset(p).unwrap().validate().unwrap();
        }
        let r = GateNoiseRule::new(GateKind::Rx, 0.1, 0.0, 0.0, 0.0);
        assert!(NoiseModelSpec::new("dup", vec![r, r]).is_err());
        assert!(NoiseModelSpec::new("cz", vec![GateNoiseRule::new(GateKind::Cz, 0.0, 0.0, 0.1, 0.0)]).is_err());
    }
}
