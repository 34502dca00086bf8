use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{same_dims, DensityMatrix, PSD_TOL};
use crate::error::Result;

fn to_nalgebra(data: &[Complex64], d: usize) -> DMatrix<Complex64> {
    // symmetrise so round-off never leaves the Hermitian manifold
    DMatrix::from_fn(d, d, |r, c| 0.5 * (data[r * d + c] + data[c * d + r].conj()))
}

/// Eigenvalues of the Hermitian part of a row-major `d × d` matrix.
pub fn hermitian_eigenvalues(data: &[Complex64], d: usize) -> Vec<f64> {
    SymmetricEigen::new(to_nalgebra(data, d)).eigenvalues.iter().copied().collect()
}

fn clamp_eigenvalue(lambda: f64, what: &str) -> f64 {
    if lambda < -PSD_TOL {
        log::warn!("{what}: eigenvalue {lambda:.3e} below tolerance, clamped to 0");
    }
    lambda.max(0.0)
}

/// `½ Σ |eig(a − b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dims(a, b)?;
    let diff: Vec<Complex64> = a.data().iter().zip(b.data()).map(|(x, y)| x - y).collect();
    let td = 0.5 * hermitian_eigenvalues(&diff, a.dim()).iter().map(|l| l.abs()).sum::<f64>();
    Ok(td.clamp(0.0, 1.0))
}

/// Eigenvalues below this are taken to be exact zeros before square
/// roots are formed; otherwise round-off of order 1e-17 turns into errors
/// of order 1e-9 in the fidelity of rank-deficient states.
const ZERO_EIGENVALUE: f64 = 1e-12;

fn psd_sqrt(rho: &DensityMatrix) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(to_nalgebra(rho.data(), rho.dim()));
    let roots = eig.eigenvalues.map(|l| {
        let l = clamp_eigenvalue(l, "fidelity");
        Complex64::new(if l < ZERO_EIGENVALUE { 0.0 } else { l.sqrt() }, 0.0)
    });
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Uhlmann fidelity `(Tr √(√a · b · √a))²`, evaluated as the squared sum
/// of singular values of `√a √b`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    same_dims(a, b)?;
    let s: f64 = (psd_sqrt(a) * psd_sqrt(b)).singular_values().iter().sum();
    Ok((s * s).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::super::{maximally_mixed, zero_state, DensityMatrix};
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn one_state() -> DensityMatrix {
        let z = Complex64::new(0.0, 0.0);
        DensityMatrix::from_matrix(1, vec![z, z, z, Complex64::new(1.0, 0.0)]).unwrap()
    }

    fn plus_state() -> DensityMatrix {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        DensityMatrix::from_pure(1, &[h, h]).unwrap()
    }

    #[test]
    fn trace_distance_examples() {
        let zero = zero_state(1).unwrap();
        assert_eq!(trace_distance(&zero, &zero).unwrap(), 0.0);
        assert_abs_diff_eq!(trace_distance(&zero, &one_state()).unwrap(), 1.0, epsilon = 1e-12);
        // |0><0| - |+><+| = [[1/2, -1/2], [-1/2, -1/2]], eigenvalues ±1/√2
        assert_abs_diff_eq!(trace_distance(&zero, &plus_state()).unwrap(), 0.707_106_781_186_547_5, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let zero = zero_state(1).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &zero).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&zero, &one_state()).unwrap(), 0.0, epsilon = 1e-12);
        // pure vs mixed: <0| I/2 |0> = 1/2
        assert_abs_diff_eq!(fidelity(&zero, &maximally_mixed(1).unwrap()).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&maximally_mixed(1).unwrap(), &zero).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn metrics_reject_mismatched_dimensions() {
        let a = zero_state(1).unwrap();
        let b = zero_state(2).unwrap();
        assert!(trace_distance(&a, &b).is_err());
        assert!(fidelity(&a, &b).is_err());
    }
}
