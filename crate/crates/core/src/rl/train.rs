//! Training loop: batched rollouts, PPO updates and periodic evaluation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::env::{predict_noise, run_episode, StochasticAgent, Trajectory};
use super::policy::{PolicySpec, PolicyWeights};
use super::ppo::{ppo_update, Adam, PpoBatch, PpoConfig, UpdateStats};
use crate::circuit::Circuit;
use crate::error::{arg_err, Result};
use crate::noise::simulate;
use crate::qdm::{fidelity, trace_distance, DensityMatrix};
use crate::rb::mean_std;

/// A noiseless circuit and the density matrix it should produce.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub circuit: Circuit,
    pub target: DensityMatrix,
}

/// Shuffles `0..n` and splits off the first `train_fraction` for training.
pub fn split_indices<R: Rng + ?Sized>(n: usize, train_fraction: f64, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let cut = ((n as f64) * train_fraction).round() as usize;
    let test = idx.split_off(cut.min(n));
    (idx, test)
}

/// One row of the training curve: mean ± sample standard deviation of the
/// greedy policy's fidelity and trace distance on both splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub episode: usize,
    pub train_fid: f64,
    pub train_fid_std: f64,
    pub test_fid: f64,
    pub test_fid_std: f64,
    pub train_td: f64,
    pub train_td_std: f64,
    pub test_td: f64,
    pub test_td_std: f64,
}

/// Everything needed to continue a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub weights: PolicyWeights,
    pub adam: Adam,
    pub episodes: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Weights with the best test fidelity seen at an evaluation point.
    pub best: PolicyWeights,
    pub best_test_fidelity: f64,
    pub best_episode: usize,
    pub last: TrainState,
    pub history: Vec<HistoryRow>,
}

/// Per-sample fidelity and trace distance of the greedy policy.
pub fn evaluate_policy(w: &PolicyWeights, samples: &[TrainingSample]) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs: Vec<(f64, f64)> = samples
        .par_iter()
        .map(|s| {
            let rho = simulate(&predict_noise(&s.circuit, w)?)?;
            Ok((fidelity(&rho, &s.target)?, trace_distance(&rho, &s.target)?))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

fn history_row(episode: usize, w: &PolicyWeights, train: &[TrainingSample], test: &[TrainingSample]) -> Result<HistoryRow> {
    let (trf, trt) = evaluate_policy(w, train)?;
    let (tef, tet) = evaluate_policy(w, test)?;
    let (train_fid, train_fid_std) = mean_std(&trf);
    let (test_fid, test_fid_std) = mean_std(&tef);
    let (train_td, train_td_std) = mean_std(&trt);
    let (test_td, test_td_std) = mean_std(&tet);
    Ok(HistoryRow { episode, train_fid, train_fid_std, test_fid, test_fid_std, train_td, train_td_std, test_td, test_td_std })
}

/// Random generator for one episode: a dedicated stream of the run seed.
pub fn episode_rng(seed: u64, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode as u64);
    rng
}

/// Collects one batch of episodes `first..first + count` with a frozen
/// weight snapshot. The result does not depend on the thread count.
pub fn collect_batch(
    w: &PolicyWeights,
    train: &[TrainingSample],
    cfg: &PpoConfig,
    first: usize,
    count: usize,
) -> Result<Vec<Trajectory>> {
    (first..first + count)
        .into_par_iter()
        .map(|e| {
            let mut rng = episode_rng(cfg.seed, e);
            let s = &train[rng.random_range(0..train.len())];
            let mut agent = StochasticAgent { weights: w, rng };
            run_episode(&s.circuit, &s.target, w.spec().kernel_k, cfg.reward_alpha, cfg.reward_epsilon, &mut agent)
        })
        .collect()
}

/// Trains until `cfg.total_episodes` episodes have been played in total,
/// continuing from `resume` if given. `on_eval` sees every history row as
/// it is produced and `on_update` every PPO update.
pub fn train(
    train_set: &[TrainingSample],
    test_set: &[TrainingSample],
    spec: &PolicySpec,
    cfg: &PpoConfig,
    resume: Option<TrainState>,
    on_eval: &mut dyn FnMut(&HistoryRow),
    on_update: &mut dyn FnMut(usize, &UpdateStats),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    spec.validate()?;
    if train_set.is_empty() {
        return arg_err("training set is empty");
    }
    if let Some(s) = train_set.iter().chain(test_set).find(|s| s.circuit.n_qubits() != spec.n_qubits) {
        return arg_err(format!("sample with {} qubits does not fit a {}-qubit policy", s.circuit.n_qubits(), spec.n_qubits));
    }
    let mut state = match resume {
        Some(s) => {
            if s.weights.spec() != spec {
                return arg_err("resumed weights were built for a different policy spec");
            }
            s
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(u64::MAX);
            let weights = PolicyWeights::init(spec, cfg.init_std_frac, &mut rng)?;
            let adam = Adam::new(spec.n_params(), cfg.adam_beta1, cfg.adam_beta2);
            TrainState { weights, adam, episodes: 0 }
        }
    };
    let eval_set = if test_set.is_empty() { train_set } else { test_set };
    let mut history = Vec::new();
    let row = history_row(state.episodes, &state.weights, train_set, eval_set)?;
    on_eval(&row);
    history.push(row);
    let mut best = (state.weights.clone(), row.test_fid, state.episodes);

    while state.episodes < cfg.total_episodes {
        let count = cfg.batch_episodes.min(cfg.total_episodes - state.episodes);
        let trajs = collect_batch(&state.weights, train_set, cfg, state.episodes, count)?;
        let batch = PpoBatch::from_trajectories(&trajs, cfg)?;
        let stats = ppo_update(&mut state.weights, &mut state.adam, &batch, cfg)?;
        let before = state.episodes;
        state.episodes += count;
        on_update(state.episodes, &stats);
        let crossed = before / cfg.eval_interval != state.episodes / cfg.eval_interval;
        if crossed || state.episodes == cfg.total_episodes {
            let row = history_row(state.episodes, &state.weights, train_set, eval_set)?;
            on_eval(&row);
            history.push(row);
            if row.test_fid > best.1 {
                best = (state.weights.clone(), row.test_fid, state.episodes);
            }
        }
    }
    Ok(TrainOutcome { best: best.0, best_test_fidelity: best.1, best_episode: best.2, last: state, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_clifford_circuit_1q;
    use crate::noise::{apply_ground_truth, NoiseModelSpec};

    fn samples(n: usize) -> Vec<TrainingSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = NoiseModelSpec::one_qubit();
        (0..n)
            .map(|_| {
                let circuit = random_clifford_circuit_1q(5, &mut rng).unwrap();
                let target = simulate(&apply_ground_truth(&circuit, &spec).unwrap()).unwrap();
                TrainingSample { circuit, target }
            })
            .collect()
    }

    fn small_cfg(total: usize) -> PpoConfig {
        PpoConfig { total_episodes: total, eval_interval: 32, batch_episodes: 8, epochs_per_update: 2, seed: 4, ..PpoConfig::default() }
    }

    #[test]
    fn split_is_a_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (tr, te) = split_indices(100, 0.8, &mut rng);
        assert_eq!((tr.len(), te.len()), (80, 20));
        let mut all: Vec<usize> = tr.into_iter().chain(te).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn batches_are_reproducible() {
        let s = samples(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = PolicyWeights::init(&PolicySpec::for_qubits(1, 0.04), 0.25, &mut rng).unwrap();
        let cfg = small_cfg(8);
        assert_eq!(collect_batch(&w, &s, &cfg, 0, 8).unwrap(), collect_batch(&w, &s, &cfg, 0, 8).unwrap());
        assert_ne!(collect_batch(&w, &s, &cfg, 0, 8).unwrap(), collect_batch(&w, &s, &cfg, 8, 8).unwrap());
    }

    #[test]
    fn resuming_continues_the_same_run() {
        let s = samples(6);
        let spec = PolicySpec::for_qubits(1, 0.04);
        let full = train(&s[..4], &s[4..], &spec, &small_cfg(64), None, &mut |_| {}, &mut |_, _| {}).unwrap();
        let half = train(&s[..4], &s[4..], &spec, &small_cfg(32), None, &mut |_| {}, &mut |_, _| {}).unwrap();
        assert_eq!(half.last.episodes, 32);
        let mut episodes = Vec::new();
        let resumed =
            train(&s[..4], &s[4..], &spec, &small_cfg(64), Some(half.last), &mut |r| episodes.push(r.episode), &mut |_, _| {}).unwrap();
        assert_eq!(resumed.last, full.last);
        assert_eq!(episodes, vec![32, 64]);
        assert_eq!(full.history.iter().map(|r| r.episode).collect::<Vec<_>>(), vec![0, 32, 64]);
    }

    #[test]
    fn mismatched_samples_are_rejected() {
        let s = samples(2);
        let spec = PolicySpec::for_qubits(2, 0.04);
        assert!(train(&s, &[], &spec, &small_cfg(8), None, &mut |_| {}, &mut |_, _| {}).is_err());
        assert!(train(&[], &[], &PolicySpec::for_qubits(1, 0.04), &small_cfg(8), None, &mut |_| {}, &mut |_, _| {}).is_err());
    }
}
