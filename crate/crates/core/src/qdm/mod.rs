//! Dense density-matrix simulation for circuits of up to four qubits.
//!
//! Qubit 0 is the most significant bit of a basis index, so `|q0 q1 q2>`
//! maps to row `4·q0 + 2·q1 + q2`.

mod channel;
mod metrics;
mod unitary;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use channel::{ChannelKind, KrausChannel};
pub use metrics::{fidelity, hermitian_eigenvalues, trace_distance};
pub use unitary::{equal_up_to_phase, overlap_magnitude, Unitary};

pub(crate) use unitary::{square_matmul, ONE, ZERO};

use crate::error::{arg_err, data_err, Error, Result};

pub const MAX_QUBITS: usize = 4;

const TRACE_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues down to `-PSD_TOL` are treated as numerical noise.
pub const PSD_TOL: f64 = 1e-9;

/// A `2^n × 2^n` Hermitian, positive semidefinite, unit-trace matrix.
///
/// Serialized as nested rows of `[re, im]` pairs; deserialization checks
/// the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return arg_err(format!("qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"));
    }
    Ok(())
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let rows: Vec<Vec<[f64; 2]>> = self.data.chunks(d).map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let dim = rows.len();
        if !dim.is_power_of_two() || dim < 2 || rows.iter().any(|r| r.len() != dim) {
            return Err(serde::de::Error::custom(format!("density matrix must be square with a power-of-two side, got {dim} rows")));
        }
        let data = rows.into_iter().flatten().map(|[re, im]| Complex64::new(re, im)).collect();
        DensityMatrix::from_matrix(dim.trailing_zeros() as usize, data).map_err(serde::de::Error::custom)
    }
}

/// `|0…0><0…0|`.
pub fn zero_state(n_qubits: usize) -> Result<DensityMatrix> {
    check_qubit_count(n_qubits)?;
    let d = 1 << n_qubits;
    let mut data = vec![ZERO; d * d];
    data[0] = ONE;
    Ok(DensityMatrix { n_qubits, data })
}

/// `I / 2^n`.
pub fn maximally_mixed(n_qubits: usize) -> Result<DensityMatrix> {
    check_qubit_count(n_qubits)?;
    let d = 1 << n_qubits;
    let mut data = vec![ZERO; d * d];
    let w = Complex64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        data[i * d + i] = w;
    }
    Ok(DensityMatrix { n_qubits, data })
}

impl DensityMatrix {
    /// Validates and wraps row-major matrix entries.
    pub fn from_matrix(n_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let d = 1 << n_qubits;
        if data.len() != d * d {
            return Err(Error::Dimension { expected: d * d, got: data.len() });
        }
        let rho = DensityMatrix { n_qubits, data };
        rho.validate()?;
        Ok(rho)
    }

    /// Pure state `|ψ><ψ|` from a normalised amplitude vector.
    pub fn from_pure(n_qubits: usize, psi: &[Complex64]) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let d = 1 << n_qubits;
        if psi.len() != d {
            return Err(Error::Dimension { expected: d, got: psi.len() });
        }
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[r * d + c] = psi[r] * psi[c].conj();
            }
        }
        DensityMatrix::from_matrix(n_qubits, data)
    }

    /// Checks the trace, Hermiticity and positivity invariants.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return data_err(format!("trace is {tr}, expected 1"));
        }
        for r in 0..d {
            for c in r..d {
                let dev = (self.get(r, c) - self.get(c, r).conj()).norm();
                if dev > HERMITIAN_TOL {
                    return data_err(format!("not Hermitian at ({r}, {c}): deviation {dev:.3e}"));
                }
            }
        }
        let min_eig = hermitian_eigenvalues(&self.data, d).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return data_err(format!("not positive semidefinite: eigenvalue {min_eig:.3e}"));
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Row-major entries.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Element-wise `|self - other|`.
    pub fn abs_difference(&self, other: &DensityMatrix) -> Result<Vec<f64>> {
        same_dims(self, other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).collect())
    }

    pub(crate) fn apply_local_1q(&mut self, op: &[Complex64; 4], target: usize) {
        let d = self.dim();
        let mask = 1 << (self.n_qubits - 1 - target);
        // rows: A ρ
        for i0 in (0..d).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            for c in 0..d {
                let (x0, x1) = (self.data[i0 * d + c], self.data[i1 * d + c]);
                self.data[i0 * d + c] = op[0] * x0 + op[1] * x1;
                self.data[i1 * d + c] = op[2] * x0 + op[3] * x1;
            }
        }
        // columns: (Aρ) A†
        let adj = [op[0].conj(), op[1].conj(), op[2].conj(), op[3].conj()];
        for r in 0..d {
            let row = &mut self.data[r * d..(r + 1) * d];
            for j0 in (0..d).filter(|j| j & mask == 0) {
                let j1 = j0 | mask;
                let (x0, x1) = (row[j0], row[j1]);
                row[j0] = x0 * adj[0] + x1 * adj[1];
                row[j1] = x0 * adj[2] + x1 * adj[3];
            }
        }
    }

    pub(crate) fn apply_local_2q(&mut self, op: &[Complex64], a: usize, b: usize) {
        let n = self.n_qubits;
        let d = self.dim();
        let ma = 1 << (n - 1 - a);
        let mb = 1 << (n - 1 - b);
        let bases: Vec<usize> = (0..d).filter(|i| i & ma == 0 && i & mb == 0).collect();
        for &base in &bases {
            let idx = [base, base | mb, base | ma, base | ma | mb];
            for c in 0..d {
                let x: [Complex64; 4] = std::array::from_fn(|k| self.data[idx[k] * d + c]);
                for (r, &ir) in idx.iter().enumerate() {
                    self.data[ir * d + c] =
                        op[r * 4] * x[0] + op[r * 4 + 1] * x[1] + op[r * 4 + 2] * x[2] + op[r * 4 + 3] * x[3];
                }
            }
        }
        for r in 0..d {
            for &base in &bases {
                let idx = [base, base | mb, base | ma, base | ma | mb];
                let x: [Complex64; 4] = std::array::from_fn(|k| self.data[r * d + idx[k]]);
                for (cc, &ic) in idx.iter().enumerate() {
                    // (ρ U†)[r, c] = Σ_k ρ[r, k] conj(U[c, k])
                    let mut acc = ZERO;
                    for k in 0..4 {
                        acc += x[k] * op[cc * 4 + k].conj();
                    }
                    self.data[r * d + ic] = acc;
                }
            }
        }
    }

    /// Visits every `(row, col)` pair of 2×2 blocks on `target`, passing the
    /// four block entries `[ρ00, ρ01, ρ10, ρ11]`.
    fn for_each_block(&mut self, target: usize, mut f: impl FnMut(&mut [Complex64; 4])) {
        let d = self.dim();
        let mask = 1 << (self.n_qubits - 1 - target);
        for i0 in (0..d).filter(|i| i & mask == 0) {
            for j0 in (0..d).filter(|j| j & mask == 0) {
                let idx = [i0 * d + j0, i0 * d + (j0 | mask), (i0 | mask) * d + j0, (i0 | mask) * d + (j0 | mask)];
                let mut b = idx.map(|k| self.data[k]);
                f(&mut b);
                for (k, v) in idx.iter().zip(b) {
                    self.data[*k] = v;
                }
            }
        }
    }

    /// Local depolarizing in closed form: `(1-λ)ρ + λ·Tr_q(ρ) ⊗ I/2`.
    pub(crate) fn depolarize_in_place(&mut self, lambda: f64, target: usize) {
        let (keep, mix) = (1.0 - 0.5 * lambda, 0.5 * lambda);
        self.for_each_block(target, |b| {
            let (p00, p11) = (b[0], b[3]);
            b[0] = p00 * keep + p11 * mix;
            b[3] = p11 * keep + p00 * mix;
            b[1] *= 1.0 - lambda;
            b[2] *= 1.0 - lambda;
        });
    }

    /// Amplitude damping in closed form.
    pub(crate) fn damp_in_place(&mut self, gamma: f64, target: usize) {
        let s = (1.0 - gamma).sqrt();
        self.for_each_block(target, |b| {
            b[0] += b[3] * gamma;
            b[3] *= 1.0 - gamma;
            b[1] *= s;
            b[2] *= s;
        });
    }

    /// CZ is diagonal with ±1 entries, so it only flips signs.
    pub(crate) fn cz_in_place(&mut self, a: usize, b: usize) {
        let d = self.dim();
        let m = (1 << (self.n_qubits - 1 - a)) | (1 << (self.n_qubits - 1 - b));
        let sign = |i: usize| i & m == m;
        for r in 0..d {
            for c in 0..d {
                if sign(r) != sign(c) {
                    self.data[r * d + c] = -self.data[r * d + c];
                }
            }
        }
    }

    fn check_target(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return arg_err(format!("qubit {q} out of range for {} qubits", self.n_qubits));
        }
        Ok(())
    }

    pub(crate) fn apply_channel_in_place(&mut self, ch: &KrausChannel, target: usize) {
        let ops = ch.operators();
        if ops.len() == 1 {
            self.apply_local_1q(&ops[0], target);
            return;
        }
        let mut acc = vec![ZERO; self.data.len()];
        for op in ops {
            let mut term = self.clone();
            term.apply_local_1q(op, target);
            for (a, t) in acc.iter_mut().zip(term.data) {
                *a += t;
            }
        }
        self.data = acc;
    }
}

fn same_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.n_qubits != b.n_qubits {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    Ok(())
}

/// `U ρ U†` with `u` embedded on `targets`.
pub fn apply_unitary(rho: &DensityMatrix, u: &Unitary, targets: &[usize]) -> Result<DensityMatrix> {
    if targets.len() != u.n_targets() {
        return Err(Error::Dimension { expected: u.n_targets(), got: targets.len() });
    }
    for &t in targets {
        rho.check_target(t)?;
    }
    let mut out = rho.clone();
    match targets {
        [t] => {
            let d = u.data();
            out.apply_local_1q(&[d[0], d[1], d[2], d[3]], *t);
        }
        [a, b] => {
            if a == b {
                return arg_err(format!("targets must be distinct, got {a} twice"));
            }
            out.apply_local_2q(u.data(), *a, *b);
        }
        _ => unreachable!("unitaries act on one or two targets"),
    }
    Ok(out)
}

/// `Σ_i A_i ρ A_i†` with the channel embedded on `target`.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel, target: usize) -> Result<DensityMatrix> {
    rho.check_target(target)?;
    let mut out = rho.clone();
    out.apply_channel_in_place(ch, target);
    Ok(out)
}

/// Diagonal of `ρ`: the computational-basis outcome distribution.
pub fn computational_probabilities(rho: &DensityMatrix) -> Vec<f64> {
    (0..rho.dim()).map(|i| rho.get(i, i).re).collect()
}
