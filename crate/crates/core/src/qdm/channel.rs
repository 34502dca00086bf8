use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::unitary::{Unitary, ONE, ZERO};
use crate::error::{arg_err, Result};

/// The four single-qubit noise channels the agent can insert, in encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    Depolarizing,
    AmplitudeDamping,
    CoherentZ,
    CoherentX,
}

impl ChannelKind {
    /// Channel order used by the circuit encoding, noise slots and actions.
    pub const ALL: [ChannelKind; 4] = [
        ChannelKind::Depolarizing,
        ChannelKind::AmplitudeDamping,
        ChannelKind::CoherentZ,
        ChannelKind::CoherentX,
    ];

    pub fn is_coherent(self) -> bool {
        matches!(self, ChannelKind::CoherentX | ChannelKind::CoherentZ)
    }
}

/// A single-qubit CPTP map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    kind: ChannelKind,
    param: f64,
    operators: Vec<[Complex64; 4]>,
}

impl KrausChannel {
    pub fn new(kind: ChannelKind, param: f64) -> Result<Self> {
        match kind {
            ChannelKind::Depolarizing => Self::depolarizing(param),
            ChannelKind::AmplitudeDamping => Self::amplitude_damping(param),
            ChannelKind::CoherentZ => Self::coherent_z(param),
            ChannelKind::CoherentX => Self::coherent_x(param),
        }
    }

    /// Local depolarization `(1-λ)ρ + λ I/2` on one qubit, realised with
    /// Kraus operators `√(1-3λ/4) I` and `√(λ/4) {X, Y, Z}`.
    pub fn depolarizing(lambda: f64) -> Result<Self> {
        check_probability("depolarizing λ", lambda)?;
        let a0 = (1.0 - 0.75 * lambda).sqrt();
        let a = (lambda / 4.0).sqrt();
        let scale = |u: Unitary, s: f64| -> [Complex64; 4] {
            let d = u.data();
            [d[0] * s, d[1] * s, d[2] * s, d[3] * s]
        };
        Ok(KrausChannel {
            kind: ChannelKind::Depolarizing,
            param: lambda,
            operators: vec![
                scale(Unitary::identity(1), a0),
                scale(Unitary::pauli_x(), a),
                scale(Unitary::pauli_y(), a),
                scale(Unitary::pauli_z(), a),
            ],
        })
    }

    /// Energy relaxation `|1> → |0>` with probability γ.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_probability("amplitude damping γ", gamma)?;
        let keep = Complex64::new((1.0 - gamma).sqrt(), 0.0);
        let decay = Complex64::new(gamma.sqrt(), 0.0);
        Ok(KrausChannel {
            kind: ChannelKind::AmplitudeDamping,
            param: gamma,
            operators: vec![[ONE, ZERO, ZERO, keep], [ZERO, decay, ZERO, ZERO]],
        })
    }

    /// Over-rotation `Rz(ε)`.
    pub fn coherent_z(angle: f64) -> Result<Self> {
        check_angle(angle)?;
        Ok(Self::unitary_channel(ChannelKind::CoherentZ, angle, Unitary::rz(angle)))
    }

    /// Over-rotation `Rx(ε)`.
    pub fn coherent_x(angle: f64) -> Result<Self> {
        check_angle(angle)?;
        Ok(Self::unitary_channel(ChannelKind::CoherentX, angle, Unitary::rx(angle)))
    }

    fn unitary_channel(kind: ChannelKind, param: f64, u: Unitary) -> Self {
        let d = u.data();
        KrausChannel { kind, param, operators: vec![[d[0], d[1], d[2], d[3]]] }
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn param(&self) -> f64 {
        self.param
    }

    /// Row-major 2×2 Kraus operators.
    pub fn operators(&self) -> &[[Complex64; 4]] {
        &self.operators
    }

    /// Largest element-wise deviation of `Σ A†A` from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        let mut sum = [ZERO; 4];
        for a in &self.operators {
            for r in 0..2 {
                for c in 0..2 {
                    // (A†A)[r][c] = Σ_k conj(A[k][r]) A[k][c]
                    sum[r * 2 + c] += a[r].conj() * a[c] + a[2 + r].conj() * a[2 + c];
                }
            }
        }
        let id = [ONE, ZERO, ZERO, ONE];
        sum.iter().zip(id).map(|(s, i)| (s - i).norm()).fold(0.0, f64::max)
    }
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return arg_err(format!("{what} must lie in [0, 1], got {p}"));
    }
    Ok(())
}

fn check_angle(angle: f64) -> Result<()> {
    if !angle.is_finite() || !(-PI..=PI).contains(&angle) {
        return arg_err(format!("coherent error angle must lie in [-π, π], got {angle}"));
    }
    Ok(())
}
