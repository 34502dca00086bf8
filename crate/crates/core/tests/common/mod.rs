//! Dense reference implementations shared by the integration tests. They
//! deliberately avoid the crate's own kernels.
#![allow(dead_code)]

use noisim::qdm::DensityMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub d: usize,
    pub a: Vec<C>,
}

impl Mat {
    pub fn zeros(d: usize) -> Self {
        Mat { d, a: vec![C::new(0.0, 0.0); d * d] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Mat::zeros(d);
        for i in 0..d {
            m.a[i * d + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn from2(x: [C; 4]) -> Self {
        Mat { d: 2, a: x.to_vec() }
    }

    pub fn at(&self, r: usize, col: usize) -> C {
        self.a[r * self.d + col]
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let x = self.at(r, k);
                for col in 0..d {
                    out.a[r * d + col] += x * o.at(k, col);
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        for r in 0..d {
            for col in 0..d {
                out.a[col * d + r] = self.at(r, col).conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Mat {
        Mat { d: self.d, a: self.a.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C) -> Mat {
        Mat { d: self.d, a: self.a.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, o: &Mat) -> Mat {
        Mat { d: self.d, a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect() }
    }

    pub fn kron(&self, o: &Mat) -> Mat {
        let d = self.d * o.d;
        let mut out = Mat::zeros(d);
        for r1 in 0..self.d {
            for c1 in 0..self.d {
                for r2 in 0..o.d {
                    for c2 in 0..o.d {
                        out.a[(r1 * o.d + r2) * d + c1 * o.d + c2] = self.at(r1, c1) * o.at(r2, c2);
                    }
                }
            }
        }
        out
    }

    pub fn max_diff(&self, o: &Mat) -> f64 {
        self.a.iter().zip(&o.a).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C {
        (0..self.d).map(|i| self.at(i, i)).sum()
    }
}

pub fn pauli_x() -> Mat {
    Mat::from2([c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}
pub fn pauli_y() -> Mat {
    Mat::from2([c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}
pub fn pauli_z() -> Mat {
    Mat::from2([c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}
pub fn rx(t: f64) -> Mat {
    let (s, co) = (t / 2.0).sin_cos();
    Mat::from2([c(co, 0.), c(0., -s), c(0., -s), c(co, 0.)])
}
pub fn rz(t: f64) -> Mat {
    Mat::from2([C::from_polar(1.0, -t / 2.0), c(0., 0.), c(0., 0.), C::from_polar(1.0, t / 2.0)])
}
pub fn hadamard() -> Mat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Mat::from2([c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)])
}

/// `op` on `target` of `n` qubits, qubit 0 leftmost in the tensor product.
pub fn on_qubit(op: &Mat, target: usize, n: usize) -> Mat {
    (0..n).fold(Mat::identity(1), |acc, q| acc.kron(if q == target { op } else { &IDENTITY2 }))
}

static IDENTITY2: std::sync::LazyLock<Mat> = std::sync::LazyLock::new(|| Mat::identity(2));

pub fn cz(a: usize, b: usize, n: usize) -> Mat {
    let d = 1 << n;
    let mut m = Mat::identity(d);
    for i in 0..d {
        if (i >> (n - 1 - a)) & 1 == 1 && (i >> (n - 1 - b)) & 1 == 1 {
            m.a[i * d + i] = c(-1.0, 0.0);
        }
    }
    m
}

pub fn depolarizing_kraus(l: f64) -> Vec<Mat> {
    let a = (l / 4.0).sqrt();
    vec![Mat::identity(2).scale(c((1.0 - 0.75 * l).sqrt(), 0.)), pauli_x().scale(c(a, 0.)), pauli_y().scale(c(a, 0.)), pauli_z().scale(c(a, 0.))]
}

pub fn damping_kraus(g: f64) -> Vec<Mat> {
    vec![
        Mat::from2([c(1., 0.), c(0., 0.), c(0., 0.), c((1.0 - g).sqrt(), 0.)]),
        Mat::from2([c(0., 0.), c(g.sqrt(), 0.), c(0., 0.), c(0., 0.)]),
    ]
}

/// Row-major vectorisation: `vec(A ρ B) = (A ⊗ Bᵀ) vec(ρ)`.
pub fn superop_of_kraus(ks: &[Mat]) -> Mat {
    let d = ks[0].d;
    ks.iter().fold(Mat::zeros(d * d), |acc, k| acc.add(&k.kron(&k.conj())))
}

pub fn apply_superop(s: &Mat, rho: &Mat) -> Mat {
    let d = rho.d;
    let mut out = Mat::zeros(d);
    for i in 0..d * d {
        out.a[i] = (0..d * d).map(|j| s.at(i, j) * rho.a[j]).sum();
    }
    out
}

pub fn to_mat(rho: &DensityMatrix) -> Mat {
    Mat { d: rho.dim(), a: rho.data().to_vec() }
}

/// Random mixed state from a Ginibre matrix `G G† / Tr`.
pub fn random_dm<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityMatrix {
    let d = 1 << n;
    let rank = rng.random_range(1..=d);
    let g: Vec<C> = (0..d * rank).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let mut a = vec![c(0., 0.); d * d];
    for r in 0..d {
        for col in 0..d {
            a[r * d + col] = (0..rank).map(|k| g[r * rank + k] * g[col * rank + k].conj()).sum();
        }
    }
    let tr: f64 = (0..d).map(|i| a[i * d + i].re).sum();
    a.iter_mut().for_each(|z| *z /= tr);
    for i in 0..d {
        a[i * d + i].im = 0.0;
    }
    DensityMatrix::from_matrix(n, a).expect("Ginibre state is valid")
}

/// Random normalised pure-state amplitudes.
pub fn random_ket<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C> {
    let v: Vec<C> = (0..1 << n).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Eigenvalues of a Hermitian matrix via nalgebra, independent of the
/// crate's metric code path.
pub fn eigenvalues(m: &Mat) -> Vec<f64> {
    let h = nalgebra::DMatrix::from_fn(m.d, m.d, |r, col| m.at(r, col));
    nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().collect()
}
