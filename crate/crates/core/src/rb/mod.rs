//! Randomized benchmarking: self-inverting Clifford sequences, survival
//! probabilities and the exponential decay fit `a·p^l + b`.
//!
//! The abscissa `l` of the fit is the number of native gates in a sequence,
//! so `p` is a per-gate decay that plugs directly into [`RbModel`].

mod fit;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::clifford::{circuit_from_1q_elements, clifford_group_1q, compose_1q, inverse_1q, Tableau};
use crate::circuit::{schedule, Circuit};
use crate::error::{arg_err, Result};
use crate::noise::{simulate_with, NoiseModel, RbModel};

pub use fit::{fit_decay, RbFit};

/// `m` random Clifford elements followed by the element that inverts them.
pub fn rb_sequence<R: Rng + ?Sized>(n_qubits: usize, m: usize, rng: &mut R) -> Result<Circuit> {
    if m == 0 {
        return arg_err("sequence needs at least one Clifford element");
    }
    match n_qubits {
        1 => {
            let n = clifford_group_1q().len();
            let mut elems: Vec<usize> = (0..m).map(|_| rng.random_range(0..n)).collect();
            let total = elems.iter().fold(0, |acc, &e| compose_1q(acc, e));
            elems.push(inverse_1q(total));
            circuit_from_1q_elements(&elems)
        }
        2..=4 => {
            let mut gates = Vec::new();
            for _ in 0..m {
                gates.extend(Tableau::random(n_qubits, rng).to_circuit()?.gate_list());
            }
            let composite = Tableau::from_circuit(&schedule(&gates, n_qubits)?)?;
            gates.extend(composite.inverse_circuit()?.gate_list());
            schedule(&gates, n_qubits)
        }
        _ => arg_err(format!("qubit count must be in 1..=4, got {n_qubits}")),
    }
}

/// Population of `|0…0⟩` after running `seq` under `model`.
pub fn survival_probability<M: NoiseModel + ?Sized>(seq: &Circuit, model: &M) -> Result<f64> {
    let rho = simulate_with(seq, model)?;
    Ok(rho.get(0, 0).re.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbConfig {
    /// Numbers of random Clifford elements per sequence.
    pub depths: Vec<usize>,
    pub replicates: usize,
    /// When set, survivals are estimated from this many simulated shots.
    pub shots: Option<u64>,
}

impl Default for RbConfig {
    fn default() -> Self {
        RbConfig { depths: vec![3, 5, 7, 10, 15, 20, 25, 30], replicates: 30, shots: None }
    }
}

impl RbConfig {
    pub fn validate(&self) -> Result<()> {
        let mut d = self.depths.clone();
        d.sort_unstable();
        d.dedup();
        if d.len() < 3 || d[0] == 0 {
            return arg_err("benchmarking needs at least three distinct positive depths");
        }
        if self.replicates == 0 {
            return arg_err("replicates must be positive");
        }
        if self.shots == Some(0) {
            return arg_err("shots must be positive when given");
        }
        Ok(())
    }
}

/// Per-depth summary of the benchmarking run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbPoint {
    pub depth: usize,
    pub mean_gates: f64,
    pub mean_survival: f64,
    pub std_survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbReport {
    pub n_qubits: usize,
    pub noise: String,
    pub replicates: usize,
    pub points: Vec<RbPoint>,
    pub fit: RbFit,
}

impl RbReport {
    pub fn model(&self) -> Result<RbModel> {
        RbModel::new(self.fit.p)
    }
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs the benchmarking protocol against `noise` and fits the decay.
///
/// Sequences are drawn serially from `rng`; their simulation runs in
/// parallel, so the result does not depend on the thread count.
pub fn rb_characterize<M, R>(n_qubits: usize, noise: &M, cfg: &RbConfig, rng: &mut R) -> Result<RbReport>
where
    M: NoiseModel + Sync + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut jobs = Vec::with_capacity(cfg.depths.len() * cfg.replicates);
    for &depth in &cfg.depths {
        for _ in 0..cfg.replicates {
            jobs.push((depth, rb_sequence(n_qubits, depth, rng)?, rng.random::<u64>()));
        }
    }
    let results: Vec<(usize, f64, f64)> = jobs
        .par_iter()
        .map(|(depth, seq, seed)| {
            let mut s = survival_probability(seq, noise)?;
            if let Some(shots) = cfg.shots {
                let mut r = ChaCha8Rng::seed_from_u64(*seed);
                let hits = Binomial::new(shots, s).expect("survival lies in [0, 1]").sample(&mut r);
                s = hits as f64 / shots as f64;
            }
            Ok((*depth, seq.gate_count() as f64, s))
        })
        .collect::<Result<_>>()?;

    let lengths: Vec<f64> = results.iter().map(|r| r.1).collect();
    let survivals: Vec<f64> = results.iter().map(|r| r.2).collect();
    let fit = fit_decay(&lengths, &survivals, n_qubits)?;
    let points = cfg
        .depths
        .iter()
        .map(|&depth| {
            let here: Vec<&(usize, f64, f64)> = results.iter().filter(|r| r.0 == depth).collect();
            let (mean_survival, std_survival) = mean_std(&here.iter().map(|r| r.2).collect::<Vec<_>>());
            RbPoint {
                depth,
                mean_gates: here.iter().map(|r| r.1).sum::<f64>() / here.len() as f64,
                mean_survival,
                std_survival,
            }
        })
        .collect();
    Ok(RbReport { n_qubits, noise: noise.name().to_string(), replicates: cfg.replicates, points, fit })
}
