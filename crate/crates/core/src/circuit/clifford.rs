//! Clifford group tools: stabilizer tableaux, uniform sampling, synthesis
//! into native gates, and the 24-element single-qubit group.

use std::sync::OnceLock;

use rand::Rng;

use super::transpile::{transpile, SourceCircuit, SourceGate};
use super::{schedule, Circuit, GateKind, GateOp};
use crate::error::{arg_err, Result};

/// A signed Pauli string; bit `q` of `x`/`z` is the X/Z component on qubit `q`.
/// `(x, z) = (1, 1)` denotes `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliRow {
    pub x: u32,
    pub z: u32,
    pub negative: bool,
}

impl PauliRow {
    fn x_bit(&self, q: usize) -> bool {
        self.x >> q & 1 == 1
    }

    fn z_bit(&self, q: usize) -> bool {
        self.z >> q & 1 == 1
    }

    /// Symplectic inner product: true when the two strings anticommute.
    pub fn anticommutes(&self, other: &PauliRow) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 1
    }
}

/// Clifford gates used by synthesis, before lowering to native gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Z(usize),
    Cx(usize, usize),
}

impl CliffordGate {
    pub fn inverse(self) -> Self {
        match self {
            CliffordGate::S(q) => CliffordGate::Sdg(q),
            CliffordGate::Sdg(q) => CliffordGate::S(q),
            g => g,
        }
    }

    fn to_source(self) -> SourceGate {
        use std::f64::consts::{FRAC_PI_2, PI};
        match self {
            CliffordGate::H(q) => SourceGate::H { q },
            CliffordGate::S(q) => SourceGate::U1 { q, theta: FRAC_PI_2 },
            CliffordGate::Sdg(q) => SourceGate::U1 { q, theta: -FRAC_PI_2 },
            CliffordGate::X(q) => SourceGate::X { q },
            CliffordGate::Z(q) => SourceGate::U1 { q, theta: PI },
            CliffordGate::Cx(c, t) => SourceGate::Cnot { control: c, target: t },
        }
    }
}

/// Images of `X_q` (rows `0..n`) and `Z_q` (rows `n..2n`) under conjugation
/// by a Clifford unitary `C`, i.e. `C P C†`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tableau {
    n_qubits: usize,
    rows: Vec<PauliRow>,
}

impl Tableau {
    pub fn identity(n_qubits: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * n_qubits);
        for q in 0..n_qubits {
            rows.push(PauliRow { x: 1 << q, z: 0, negative: false });
        }
        for q in 0..n_qubits {
            rows.push(PauliRow { x: 0, z: 1 << q, negative: false });
        }
        Tableau { n_qubits, rows }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Image of `X_q`.
    pub fn x_image(&self, q: usize) -> PauliRow {
        self.rows[q]
    }

    /// Image of `Z_q`.
    pub fn z_image(&self, q: usize) -> PauliRow {
        self.rows[self.n_qubits + q]
    }

    pub fn is_identity(&self) -> bool {
        *self == Tableau::identity(self.n_qubits)
    }

    fn h(&mut self, q: usize) {
        let m = 1 << q;
        for r in &mut self.rows {
            let (x, z) = (r.x & m, r.z & m);
            r.negative ^= x != 0 && z != 0;
            r.x = (r.x & !m) | z;
            r.z = (r.z & !m) | x;
        }
    }

    fn s(&mut self, q: usize) {
        let m = 1 << q;
        for r in &mut self.rows {
            r.negative ^= r.x & m != 0 && r.z & m != 0;
            r.z ^= r.x & m;
        }
    }

    fn pauli_x(&mut self, q: usize) {
        for r in &mut self.rows {
            r.negative ^= r.z_bit(q);
        }
    }

    fn pauli_z(&mut self, q: usize) {
        for r in &mut self.rows {
            r.negative ^= r.x_bit(q);
        }
    }

    fn cx(&mut self, c: usize, t: usize) {
        for r in &mut self.rows {
            let (xc, zc, xt, zt) = (r.x_bit(c), r.z_bit(c), r.x_bit(t), r.z_bit(t));
            r.negative ^= xc && zt && (xt == zc);
            if xc {
                r.x ^= 1 << t;
            }
            if zt {
                r.z ^= 1 << c;
            }
        }
    }

    /// Conjugates every row by `g` (appends `g` after the current Clifford).
    pub fn apply(&mut self, g: CliffordGate) {
        match g {
            CliffordGate::H(q) => self.h(q),
            CliffordGate::S(q) => self.s(q),
            CliffordGate::Sdg(q) => {
                self.s(q);
                self.s(q);
                self.s(q);
            }
            CliffordGate::X(q) => self.pauli_x(q),
            CliffordGate::Z(q) => self.pauli_z(q),
            CliffordGate::Cx(c, t) => self.cx(c, t),
        }
    }

    /// Appends a native gate; rotations must be multiples of π/2.
    pub fn apply_native(&mut self, g: &GateOp) -> Result<()> {
        if !g.is_clifford() {
            return arg_err(format!("{:?} by {} turns is not a Clifford gate", g.kind(), g.turns()));
        }
        let quarters = (g.turns() * 4.0).round() as usize % 4;
        match g.kind() {
            GateKind::Rz => (0..quarters).for_each(|_| self.s(g.qubits()[0])),
            GateKind::Rx => {
                let q = g.qubits()[0];
                self.h(q);
                (0..quarters).for_each(|_| self.s(q));
                self.h(q);
            }
            GateKind::Cz => {
                let (a, b) = (g.qubits()[0], g.qubits()[1]);
                self.h(b);
                self.cx(a, b);
                self.h(b);
            }
        }
        Ok(())
    }

    /// Tableau of a native Clifford circuit.
    pub fn from_circuit(c: &Circuit) -> Result<Self> {
        let mut t = Tableau::identity(c.n_qubits());
        for g in c.gates() {
            t.apply_native(g)?;
        }
        Ok(t)
    }

    /// Uniformly random Clifford (modulo global phase).
    ///
    /// Rows are drawn one at a time, in the order `X_0, Z_0, X_1, Z_1, …`, by
    /// rejection against the commutation relations with the rows already
    /// fixed. Every valid partial symplectic basis has the same number of
    /// completions, so the result is uniform over the symplectic group; the
    /// signs are independent fair coins.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let mask = (1u32 << n_qubits) - 1;
        let mut xs: Vec<PauliRow> = Vec::with_capacity(n_qubits);
        let mut zs: Vec<PauliRow> = Vec::with_capacity(n_qubits);
        let draw = |rng: &mut R| PauliRow { x: rng.random::<u32>() & mask, z: rng.random::<u32>() & mask, negative: rng.random() };
        for i in 0..n_qubits {
            let xi = loop {
                let cand = draw(rng);
                if (cand.x | cand.z) != 0
                    && xs.iter().chain(zs.iter()).all(|p| !p.anticommutes(&cand))
                {
                    break cand;
                }
            };
            let zi = loop {
                let cand = draw(rng);
                if cand.anticommutes(&xi) && xs.iter().chain(zs.iter()).all(|p| !p.anticommutes(&cand)) {
                    break cand;
                }
            };
            xs.push(xi);
            zs.push(zi);
            debug_assert!(i + 1 == xs.len());
        }
        let mut rows = xs;
        rows.extend(zs);
        Tableau { n_qubits, rows }
    }

    /// Gates that reduce this tableau to the identity. Applied in order they
    /// implement the inverse Clifford.
    pub fn inverse_gates(&self) -> Vec<CliffordGate> {
        let n = self.n_qubits;
        let mut t = self.clone();
        let mut gates = Vec::new();
        let mut emit = |t: &mut Tableau, g: CliffordGate| {
            t.apply(g);
            gates.push(g);
        };
        for i in 0..n {
            // X-image: bring to X_i
            let xr = t.rows[i];
            if (i..n).all(|k| !xr.x_bit(k)) {
                let k = (i..n).find(|&k| xr.z_bit(k)).expect("X image must be supported on qubits >= i");
                emit(&mut t, CliffordGate::H(k));
            }
            for k in i..n {
                let r = t.rows[i];
                match (r.x_bit(k), r.z_bit(k)) {
                    (true, true) => emit(&mut t, CliffordGate::S(k)),
                    (false, true) => emit(&mut t, CliffordGate::H(k)),
                    _ => {}
                }
            }
            if !t.rows[i].x_bit(i) {
                let k = (i + 1..n).find(|&k| t.rows[i].x_bit(k)).expect("X image has support");
                emit(&mut t, CliffordGate::Cx(k, i));
            }
            for k in i + 1..n {
                if t.rows[i].x_bit(k) {
                    emit(&mut t, CliffordGate::Cx(i, k));
                }
            }
            // Z-image: bring to Z_i without disturbing X_i
            for k in i + 1..n {
                let r = t.rows[n + i];
                if r.x_bit(k) {
                    if r.z_bit(k) {
                        emit(&mut t, CliffordGate::S(k));
                    }
                    emit(&mut t, CliffordGate::H(k));
                }
            }
            for k in i + 1..n {
                if t.rows[n + i].z_bit(k) {
                    emit(&mut t, CliffordGate::Cx(k, i));
                }
            }
            if t.rows[n + i].x_bit(i) {
                emit(&mut t, CliffordGate::H(i));
                emit(&mut t, CliffordGate::S(i));
                emit(&mut t, CliffordGate::H(i));
            }
        }
        for i in 0..n {
            if t.rows[i].negative {
                emit(&mut t, CliffordGate::Z(i));
            }
            if t.rows[n + i].negative {
                emit(&mut t, CliffordGate::X(i));
            }
        }
        debug_assert!(t.is_identity(), "reduction left {t:?}");
        gates
    }

    /// Time-ordered gates implementing this Clifford up to global phase.
    pub fn synthesize(&self) -> Vec<CliffordGate> {
        self.inverse_gates().into_iter().rev().map(CliffordGate::inverse).collect()
    }

    /// Native-gate circuit implementing this Clifford.
    pub fn to_circuit(&self) -> Result<Circuit> {
        clifford_gates_to_circuit(self.n_qubits, &self.synthesize())
    }

    /// Native-gate circuit implementing the inverse Clifford.
    pub fn inverse_circuit(&self) -> Result<Circuit> {
        clifford_gates_to_circuit(self.n_qubits, &self.inverse_gates())
    }
}

fn clifford_gates_to_circuit(n_qubits: usize, gates: &[CliffordGate]) -> Result<Circuit> {
    let src = SourceCircuit { n_qubits, gates: gates.iter().map(|g| g.to_source()).collect() };
    transpile(&src)
}

// ---------------------------------------------------------------------------
// Single-qubit Clifford group
// ---------------------------------------------------------------------------

/// One of the 24 single-qubit Cliffords as `Rz(a)·Rx(b)·Rz(c)` (time order)
/// with every angle a multiple of π/2.
#[derive(Debug, Clone, PartialEq)]
pub struct OneQubitClifford {
    /// Quarter turns of the three rotations, in time order.
    pub quarters: [u8; 3],
    pub tableau: Tableau,
}

impl OneQubitClifford {
    /// The three native gates on `qubit`; zero-angle rotations are kept so
    /// every element has the same length.
    pub fn gates(&self, qubit: usize) -> [GateOp; 3] {
        let t = |k: u8| f64::from(k) / 4.0;
        [
            GateOp::rz_turns(qubit, t(self.quarters[0])),
            GateOp::rx_turns(qubit, t(self.quarters[1])),
            GateOp::rz_turns(qubit, t(self.quarters[2])),
        ]
    }
}

/// The single-qubit Clifford group in a fixed canonical order; element 0 is
/// the identity.
pub fn clifford_group_1q() -> &'static [OneQubitClifford] {
    static TABLE: OnceLock<Vec<OneQubitClifford>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table: Vec<OneQubitClifford> = Vec::with_capacity(24);
        for a in 0..4u8 {
            for b in 0..4u8 {
                for c in 0..4u8 {
                    let mut el = OneQubitClifford { quarters: [a, b, c], tableau: Tableau::identity(1) };
                    for g in el.gates(0) {
                        el.tableau.apply_native(&g).expect("quarter-turn rotations are Clifford");
                    }
                    if !table.iter().any(|e| e.tableau == el.tableau) {
                        table.push(el);
                    }
                }
            }
        }
        table
    })
}

/// Index of the group element with the given tableau.
pub fn clifford_1q_index(t: &Tableau) -> Option<usize> {
    clifford_group_1q().iter().position(|e| &e.tableau == t)
}

/// Index of `second ∘ first` (apply `first`, then `second`).
pub fn compose_1q(first: usize, second: usize) -> usize {
    let group = clifford_group_1q();
    let mut t = group[first].tableau.clone();
    for g in group[second].gates(0) {
        t.apply_native(&g).expect("group elements are Clifford");
    }
    clifford_1q_index(&t).expect("group is closed")
}

/// Index of the inverse element, by table lookup.
pub fn inverse_1q(index: usize) -> usize {
    (0..clifford_group_1q().len()).find(|&j| compose_1q(index, j) == 0).expect("every element has an inverse")
}

/// Native circuit of the given group elements on qubit 0, one gate per moment.
pub fn circuit_from_1q_elements(indices: &[usize]) -> Result<Circuit> {
    let group = clifford_group_1q();
    let gates: Vec<GateOp> = indices.iter().flat_map(|&i| group[i].gates(0)).collect();
    schedule(&gates, 1)
}
