use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

const UNITARITY_TOL: f64 = 1e-10;

/// A 1- or 2-qubit unitary stored row-major.
///
/// For two targets the basis order is `|t0 t1>`, with the first target as the
/// more significant bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unitary {
    n_targets: usize,
    data: Vec<Complex64>,
}

impl Unitary {
    /// Builds a unitary from row-major entries, checking `U U† = I`.
    pub fn from_matrix(n_targets: usize, data: Vec<Complex64>) -> Result<Self> {
        if !(1..=2).contains(&n_targets) {
            return arg_err(format!("unitary must act on 1 or 2 targets, got {n_targets}"));
        }
        let dim = 1 << n_targets;
        if data.len() != dim * dim {
            return arg_err(format!(
                "a {n_targets}-target unitary needs {} entries, got {}",
                dim * dim,
                data.len()
            ));
        }
        let u = Unitary { n_targets, data };
        let dev = u.unitarity_deviation();
        if dev > UNITARITY_TOL {
            return arg_err(format!("matrix is not unitary (max |UU†-I| = {dev:.3e})"));
        }
        Ok(u)
    }

    pub(crate) fn new_unchecked(n_targets: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), (1 << n_targets) * (1 << n_targets));
        Unitary { n_targets, data }
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn dim(&self) -> usize {
        1 << self.n_targets
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    /// Largest element-wise deviation of `U U†` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += self.get(r, k) * self.get(c, k).conj();
                }
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    pub fn identity(n_targets: usize) -> Self {
        let d = 1 << n_targets;
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            data[i * d + i] = ONE;
        }
        Unitary::new_unchecked(n_targets, data)
    }

    /// `exp(-i θ X / 2)`.
    pub fn rx(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        let c = Complex64::new(c, 0.0);
        let ms = Complex64::new(0.0, -s);
        Unitary::new_unchecked(1, vec![c, ms, ms, c])
    }

    /// `exp(-i θ Y / 2)`.
    pub fn ry(theta: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Unitary::new_unchecked(
            1,
            vec![
                Complex64::new(c, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(c, 0.0),
            ],
        )
    }

    /// `exp(-i θ Z / 2)`.
    pub fn rz(theta: f64) -> Self {
        let h = theta / 2.0;
        Unitary::new_unchecked(
            1,
            vec![Complex64::from_polar(1.0, -h), ZERO, ZERO, Complex64::from_polar(1.0, h)],
        )
    }

    /// Phase gate `diag(1, e^{iθ})`.
    pub fn u1(theta: f64) -> Self {
        Unitary::new_unchecked(1, vec![ONE, ZERO, ZERO, Complex64::from_polar(1.0, theta)])
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Unitary::new_unchecked(1, vec![h, h, h, -h])
    }

    pub fn pauli_x() -> Self {
        Unitary::new_unchecked(1, vec![ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_y() -> Self {
        Unitary::new_unchecked(1, vec![ZERO, -I, I, ZERO])
    }

    pub fn pauli_z() -> Self {
        Unitary::new_unchecked(1, vec![ONE, ZERO, ZERO, -ONE])
    }

    pub fn cz() -> Self {
        let mut u = Unitary::identity(2);
        u.data[15] = -ONE;
        u
    }

    /// Controlled-NOT with the first target as control.
    pub fn cnot() -> Self {
        let mut data = vec![ZERO; 16];
        data[0] = ONE;
        data[5] = ONE;
        data[4 * 2 + 3] = ONE;
        data[4 * 3 + 2] = ONE;
        Unitary::new_unchecked(2, data)
    }

    /// Controlled phase `diag(1, 1, 1, e^{iθ})`.
    pub fn cu1(theta: f64) -> Self {
        let mut u = Unitary::identity(2);
        u.data[15] = Complex64::from_polar(1.0, theta);
        u
    }

    pub fn swap() -> Self {
        let mut data = vec![ZERO; 16];
        data[0] = ONE;
        data[4 + 2] = ONE;
        data[2 * 4 + 1] = ONE;
        data[15] = ONE;
        Unitary::new_unchecked(2, data)
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim();
        let mut data = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                data[c * d + r] = self.get(r, c).conj();
            }
        }
        Unitary::new_unchecked(self.n_targets, data)
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Unitary) -> Self {
        assert_eq!(self.n_targets, other.n_targets, "unitary sizes differ");
        Unitary::new_unchecked(self.n_targets, square_matmul(&self.data, &other.data, self.dim()))
    }
}

pub(crate) fn square_matmul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; d * d];
    for r in 0..d {
        for k in 0..d {
            let ark = a[r * d + k];
            if ark == ZERO {
                continue;
            }
            for c in 0..d {
                out[r * d + c] += ark * b[k * d + c];
            }
        }
    }
    out
}

/// `|Tr(A† B)|` for two square matrices of equal size.
pub fn overlap_magnitude(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

/// True when `a` and `b` (both `d × d`) agree up to a global phase,
/// judged by `|Tr(A†B)| = d` within `tol`.
pub fn equal_up_to_phase(a: &[Complex64], b: &[Complex64], d: usize, tol: f64) -> bool {
    (overlap_magnitude(a, b) - d as f64).abs() <= tol
}
