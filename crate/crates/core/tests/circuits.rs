mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use common::*;
use noisim::circuit::{
    build_grover_11, build_qft, decode_qcr, encode_qcr, grover_source, qft_source, random_circuit, random_clifford_native_circuit,
    random_clifford_unitary_circuit, schedule, transpile, Circuit, GateKind, GateOp, Moment, NoiseParams, SourceCircuit, SourceGate,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn worked_example() -> Circuit {
    let mut c = Circuit::new(2).unwrap();
    let mut m1 = Moment::new(2);
    m1.add_gate(GateOp::rx(0, PI)).unwrap();
    m1.noise_mut()[1].coh_x = 0.1;
    let mut m2 = Moment::new(2);
    m2.add_gate(GateOp::cz(0, 1)).unwrap();
    m2.noise_mut()[0].dep = 0.1;
    m2.noise_mut()[1].damp = 0.2;
    let mut m3 = Moment::new(2);
    m3.add_gate(GateOp::rz(1, FRAC_PI_2)).unwrap();
    m3.noise_mut()[1].coh_z = 0.05;
    for m in [m1, m2, m3] {
        c.push_moment(m).unwrap();
    }
    c
}

#[test]
fn worked_example_encodes_exactly() {
    let t = encode_qcr(&worked_example());
    let expected: [[[f64; 8]; 3]; 2] = [
        [[0., 1., 0., 0.5, 0., 0., 0., 0.], [0., 0., 1., 0., 0.1, 0., 0., 0.], [0.; 8]],
        [[0., 0., 0., 0., 0., 0., 0., 0.1], [0., 0., 1., 0., 0., 0.2, 0., 0.], [1., 0., 0., 0.25, 0., 0., 0.05, 0.]],
    ];
    for (q, rows) in expected.iter().enumerate() {
        for (m, row) in rows.iter().enumerate() {
            assert_eq!(t.entry(q, m), row, "qubit {q} moment {m}");
        }
    }
    assert_eq!(decode_qcr(&t).unwrap(), worked_example());
}

fn with_random_noise(mut c: Circuit, rng: &mut ChaCha8Rng) -> Circuit {
    for m in c.moments_mut() {
        for p in m.noise_mut() {
            if rng.random_bool(0.5) {
                *p = NoiseParams {
                    dep: rng.random_range(0.0..1.0),
                    damp: rng.random_range(0.0..1.0),
                    coh_z: rng.random_range(-PI..PI),
                    coh_x: rng.random_range(-PI..PI),
                };
            }
        }
    }
    c
}

#[test]
fn qcr_round_trip_on_random_circuits() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let n = if i % 2 == 0 { 1 } else { 3 };
        let depth = rng.random_range(1..=20);
        let c = with_random_noise(random_circuit(n, depth, &mut rng).unwrap(), &mut rng);
        assert_eq!(decode_qcr(&encode_qcr(&c)).unwrap(), c);
    }
}

#[test]
fn theta_encoding_is_angle_over_two_pi() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let theta = rng.random_range(0.0..TAU);
        let mut c = Circuit::new(1).unwrap();
        let mut m = Moment::new(1);
        m.add_gate(GateOp::rz(0, theta)).unwrap();
        c.push_moment(m).unwrap();
        let t = encode_qcr(&c);
        assert_eq!(t.entry(0, 0)[3], theta / TAU);
        let back = decode_qcr(&t).unwrap();
        assert!((back.gate_list()[0].angle() - theta).abs() < 1e-12);
    }
}

#[test]
fn unit_windows_tile_the_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let c = with_random_noise(random_circuit(3, rng.random_range(1..=12), &mut rng).unwrap(), &mut rng);
        let t = encode_qcr(&c);
        for m in 0..t.depth() {
            let w = t.window(m, 1).unwrap();
            for q in 0..3 {
                assert_eq!(&w[q * 8..q * 8 + 8], t.entry(q, m));
            }
        }
    }
}

#[test]
fn scheduling_keeps_qubits_exclusive() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..200 {
        let n = rng.random_range(1..=4);
        let gates: Vec<GateOp> = (0..rng.random_range(0..30))
            .map(|_| {
                let q = rng.random_range(0..n);
                match rng.random_range(0..3) {
                    0 if n > 1 => {
                        let r = (q + rng.random_range(1..n)) % n;
                        GateOp::cz(q.min(r), q.max(r))
                    }
                    1 => GateOp::rx(q, rng.random_range(0.0..TAU)),
                    _ => GateOp::rz(q, rng.random_range(0.0..TAU)),
                }
            })
            .collect();
        let c = schedule(&gates, n).unwrap();
        assert_eq!(c.gate_count(), gates.len());
        for m in c.moments() {
            let mut busy = vec![0; n];
            for g in m.gates() {
                g.qubits().iter().for_each(|&q| busy[q] += 1);
            }
            assert!(busy.iter().all(|&b| b <= 1));
        }
    }
}

/// Dense gate from a basis-state map `i -> (j, phase)`.
fn permutation_gate(n: usize, f: impl Fn(usize) -> (usize, C)) -> Mat {
    let d = 1 << n;
    let mut m = Mat::zeros(d);
    for i in 0..d {
        let (j, ph) = f(i);
        m.a[j * d + i] = ph;
    }
    m
}

fn bit(i: usize, q: usize, n: usize) -> usize {
    (i >> (n - 1 - q)) & 1
}

fn dense_source_gate(g: SourceGate, n: usize) -> Mat {
    let phase = |t: f64| C::from_polar(1.0, t);
    match g {
        SourceGate::H { q } => on_qubit(&hadamard(), q, n),
        SourceGate::X { q } => on_qubit(&pauli_x(), q, n),
        SourceGate::Rx { q, theta } => on_qubit(&rx(theta), q, n),
        SourceGate::Rz { q, theta } => on_qubit(&rz(theta), q, n),
        SourceGate::U1 { q, theta } => permutation_gate(n, |i| (i, if bit(i, q, n) == 1 { phase(theta) } else { c(1., 0.) })),
        SourceGate::Cu1 { control, target, theta } => permutation_gate(n, |i| {
            (i, if bit(i, control, n) & bit(i, target, n) == 1 { phase(theta) } else { c(1., 0.) })
        }),
        SourceGate::Cnot { control, target } => {
            permutation_gate(n, |i| (if bit(i, control, n) == 1 { i ^ (1 << (n - 1 - target)) } else { i }, c(1., 0.)))
        }
        SourceGate::Swap { a, b } => permutation_gate(n, |i| {
            let j = if bit(i, a, n) != bit(i, b, n) { i ^ (1 << (n - 1 - a)) ^ (1 << (n - 1 - b)) } else { i };
            (j, c(1., 0.))
        }),
        SourceGate::Cz { a, b } => cz(a, b, n),
        SourceGate::Toffoli { .. } => unreachable!(),
    }
}

fn dense_source_unitary(s: &SourceCircuit) -> Mat {
    s.gates.iter().fold(Mat::identity(1 << s.n_qubits), |u, &g| dense_source_gate(g, s.n_qubits).mul(&u))
}

fn native_unitary(c: &Circuit) -> Mat {
    let d = 1 << c.n_qubits();
    let mut u = Mat::identity(d);
    for g in c.gates() {
        let n = c.n_qubits();
        let gm = match (g.kind(), g.qubits()) {
            (GateKind::Cz, &[a, b]) => cz(a, b, n),
            (GateKind::Rx, &[q]) => on_qubit(&rx(g.angle()), q, n),
            (GateKind::Rz, &[q]) => on_qubit(&rz(g.angle()), q, n),
            _ => unreachable!(),
        };
        u = gm.mul(&u);
    }
    u
}

fn equal_up_to_phase(a: &Mat, b: &Mat) -> bool {
    (a.dagger().mul(b).trace().norm() - a.d as f64).abs() < 1e-9
}

fn random_source(n: usize, len: usize, rng: &mut ChaCha8Rng) -> SourceCircuit {
    let mut s = SourceCircuit::new(n);
    for _ in 0..len {
        let q = rng.random_range(0..n);
        let r = (q + rng.random_range(1..n.max(2))) % n;
        let theta = rng.random_range(-TAU..TAU);
        let g = match rng.random_range(0..9) {
            0 => SourceGate::H { q },
            1 => SourceGate::X { q },
            2 => SourceGate::U1 { q, theta },
            3 => SourceGate::Rx { q, theta },
            4 => SourceGate::Rz { q, theta },
            _ if n == 1 => SourceGate::H { q },
            5 => SourceGate::Cu1 { control: q, target: r, theta },
            6 => SourceGate::Cnot { control: q, target: r },
            7 => SourceGate::Swap { a: q, b: r },
            _ => SourceGate::Cz { a: q.min(r), b: q.max(r) },
        };
        s.push(g);
    }
    s
}

#[test]
fn transpilation_preserves_the_unitary() {
    for n in 1..=4 {
        let src = qft_source(n);
        let native = build_qft(n).unwrap();
        assert!(equal_up_to_phase(&dense_source_unitary(&src), &native_unitary(&native)), "qft {n}");
        assert!(equal_up_to_phase(&native_unitary(&native), &Mat { d: 1 << n, a: native.unitary() }));
    }
    assert!(equal_up_to_phase(&dense_source_unitary(&grover_source()), &native_unitary(&build_grover_11().unwrap())));
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let n = rng.random_range(1..=3);
        let len = rng.random_range(0..12);
        let src = random_source(n, len, &mut rng);
        let native = transpile(&src).unwrap();
        assert!(equal_up_to_phase(&dense_source_unitary(&src), &native_unitary(&native)), "{src:?}");
    }
}

#[test]
fn qft_on_zero_is_uniform_superposition() {
    let u = native_unitary(&build_qft(3).unwrap());
    for r in 0..8 {
        assert!((u.at(r, 0).norm_sqr() - 0.125).abs() < 1e-12);
    }
}

#[test]
fn toffoli_needs_decomposition() {
    let mut s = SourceCircuit::new(3);
    s.push(SourceGate::Toffoli { c0: 0, c1: 1, target: 2 });
    assert!(transpile(&s).is_err());
}

#[test]
fn generated_cliffords_are_unitary_cliffords() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..50 {
        let c = random_clifford_unitary_circuit(3, &mut rng).unwrap();
        assert!(c.gates().all(|g| g.is_clifford()));
        let c = random_clifford_native_circuit(2, 5, &mut rng).unwrap();
        assert_eq!(c.depth(), 5);
        assert!(c.gates().all(|g| g.is_clifford()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn encode_decode_is_identity(seed in any::<u64>(), n in 1usize..=3, depth in 1usize..=15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = with_random_noise(random_circuit(n, depth, &mut rng).unwrap(), &mut rng);
        let t = encode_qcr(&c);
        prop_assert_eq!(t.data().len(), n * depth * 8);
        prop_assert_eq!(decode_qcr(&t).unwrap(), c);
    }

    #[test]
    fn transpile_matches_dense_product(seed in any::<u64>(), n in 1usize..=3, len in 0usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = random_source(n, len, &mut rng);
        prop_assert!(equal_up_to_phase(&dense_source_unitary(&src), &native_unitary(&transpile(&src).unwrap())));
    }
}
