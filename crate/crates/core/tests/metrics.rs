mod common;

use common::*;
use noisim::circuit::{random_circuit, Circuit, GateKind, NoiseParams};
use noisim::noise::simulate;
use noisim::qdm::{fidelity, trace_distance, DensityMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn axioms_and_fuchs_van_de_graaf_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.random_range(1..=3);
        let (a, b) = (random_dm(n, &mut rng), random_dm(n, &mut rng));
        let td = trace_distance(&a, &b).unwrap();
        let f = fidelity(&a, &b).unwrap();
        assert!((td - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
        assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-9);
        assert!(trace_distance(&a, &a).unwrap() < 1e-12);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&td) && (0.0..=1.0).contains(&f));
        // squared fidelity: 1 - √F ≤ TD ≤ √(1 - F)
        assert!(1.0 - f.sqrt() <= td + 1e-9, "1-sqrt(F) {} > TD {td}", 1.0 - f.sqrt());
        assert!(td <= (1.0 - f).sqrt() + 1e-9, "TD {td} > sqrt(1-F) {}", (1.0 - f).sqrt());
    }
}

#[test]
fn triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.random_range(1..=3);
        let (a, b, x) = (random_dm(n, &mut rng), random_dm(n, &mut rng), random_dm(n, &mut rng));
        let direct = trace_distance(&a, &b).unwrap();
        assert!(direct <= trace_distance(&a, &x).unwrap() + trace_distance(&x, &b).unwrap() + 1e-9);
    }
}

#[test]
fn closed_forms_for_pure_and_diagonal_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (u, v) = (random_ket(2, &mut rng), random_ket(2, &mut rng));
        let overlap: C = u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
        let (a, b) = (DensityMatrix::from_pure(2, &u).unwrap(), DensityMatrix::from_pure(2, &v).unwrap());
        let f = overlap.norm_sqr();
        assert!((fidelity(&a, &b).unwrap() - f).abs() < 1e-9);
        assert!((trace_distance(&a, &b).unwrap() - (1.0 - f).sqrt()).abs() < 1e-9);

        let p: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let q: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
        let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
        let diag = |w: &[f64], s: f64| {
            let mut m = vec![c(0., 0.); 16];
            (0..4).for_each(|i| m[i * 5] = c(w[i] / s, 0.));
            DensityMatrix::from_matrix(2, m).unwrap()
        };
        let td: f64 = 0.5 * (0..4).map(|i| (p[i] / sp - q[i] / sq).abs()).sum::<f64>();
        let bc: f64 = (0..4).map(|i| (p[i] / sp * q[i] / sq).sqrt()).sum();
        assert!((trace_distance(&diag(&p, sp), &diag(&q, sq)).unwrap() - td).abs() < 1e-12);
        assert!((fidelity(&diag(&p, sp), &diag(&q, sq)).unwrap() - bc * bc).abs() < 1e-9);
    }
}

fn random_noise(rng: &mut ChaCha8Rng) -> NoiseParams {
    let mut pick = |hi: f64| if rng.random_bool(0.5) { rng.random_range(0.0..hi) } else { 0.0 };
    NoiseParams { dep: pick(1.0), damp: pick(1.0), coh_z: pick(0.5), coh_x: pick(0.5) }
}

/// Full-circuit superoperator built from dense gate matrices and Kraus
/// products, applied to `|0…0><0…0|`.
fn superoperator_oracle(c: &Circuit) -> Mat {
    let n = c.n_qubits();
    let d = 1 << n;
    let mut rho = Mat::zeros(d);
    rho.a[0] = common::c(1.0, 0.0);
    for m in c.moments() {
        for g in m.gates() {
            let u = match (g.kind(), g.qubits()) {
                (GateKind::Cz, &[a, b]) => cz(a, b, n),
                (GateKind::Rx, &[q]) => on_qubit(&rx(g.angle()), q, n),
                (GateKind::Rz, &[q]) => on_qubit(&rz(g.angle()), q, n),
                _ => unreachable!(),
            };
            rho = apply_superop(&superop_of_kraus(&[u]), &rho);
        }
        for (q, p) in m.noise().iter().enumerate() {
            let stages: [Vec<Mat>; 4] = [depolarizing_kraus(p.dep), damping_kraus(p.damp), vec![rz(p.coh_z)], vec![rx(p.coh_x)]];
            for ks in stages {
                let full: Vec<Mat> = ks.iter().map(|k| on_qubit(k, q, n)).collect();
                rho = apply_superop(&superop_of_kraus(&full), &rho);
            }
        }
    }
    rho
}

#[test]
fn simulation_matches_superoperator_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.random_range(1..=2);
        let depth = rng.random_range(1..=6);
        let mut c = random_circuit(n, depth, &mut rng).unwrap();
        for m in c.moments_mut() {
            for p in m.noise_mut() {
                *p = random_noise(&mut rng);
            }
        }
        let ours = to_mat(&simulate(&c).unwrap());
        assert!(ours.max_diff(&superoperator_oracle(&c)) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_bounds_hold(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_dm(n, &mut rng), random_dm(n, &mut rng));
        let td = trace_distance(&a, &b).unwrap();
        let f = fidelity(&a, &b).unwrap();
        prop_assert!(1.0 - f.sqrt() <= td + 1e-9);
        prop_assert!(td <= (1.0 - f).sqrt() + 1e-9);
    }
}
