//! Episode loop: walk the moments of a noiseless circuit, let an agent pick
//! the noise for each one, and score the final state.

use rand::Rng;

use super::policy::{policy_forward, PolicyWeights};
use super::ppo::{deterministic_action, reward_from_td, sample_action, SampledAction};
use crate::circuit::{encode_qcr, Circuit, Qcr};
use crate::error::{arg_err, Result};
use crate::noise::{apply_action_in_place, set_noise_in_place, simulate, NoiseAction, NoiseModel};
use crate::qdm::{fidelity, trace_distance, DensityMatrix};

/// What an agent decided at one moment.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub sampled: SampledAction,
    pub value: f64,
}

pub trait Agent {
    /// Chooses the `[qubit × 4]` noise parameters for `moment` given the
    /// observation window around it.
    fn act(&mut self, moment: usize, obs: &[f64]) -> Result<Decision>;

    /// Whether small entries are zeroed before they reach the circuit.
    fn thresholded(&self) -> bool {
        true
    }
}

/// Samples from the Gaussian policy.
pub struct StochasticAgent<'a, R: Rng> {
    pub weights: &'a PolicyWeights,
    pub rng: R,
}

impl<R: Rng> Agent for StochasticAgent<'_, R> {
    fn act(&mut self, _moment: usize, obs: &[f64]) -> Result<Decision> {
        let (means, value) = policy_forward(self.weights, obs)?;
        let sampled = sample_action(&means, self.weights.log_std(), self.weights.spec().p_max, &mut self.rng);
        Ok(Decision { sampled, value })
    }
}

/// Always takes the mean action.
pub struct GreedyAgent<'a> {
    pub weights: &'a PolicyWeights,
}

impl Agent for GreedyAgent<'_> {
    fn act(&mut self, _moment: usize, obs: &[f64]) -> Result<Decision> {
        let (means, value) = policy_forward(self.weights, obs)?;
        let sampled = deterministic_action(&means, self.weights.log_std(), self.weights.spec().p_max);
        Ok(Decision { sampled, value })
    }
}

/// Replays a fixed noise schedule, one action per moment.
pub struct ScriptedAgent {
    pub actions: Vec<Vec<f64>>,
}

impl ScriptedAgent {
    /// Replays the noise slots of an already-decorated circuit.
    pub fn replaying(noisy: &Circuit) -> Self {
        let actions = noisy.moments().iter().map(|m| m.noise().iter().flat_map(|n| n.to_array()).collect()).collect();
        ScriptedAgent { actions }
    }
}

impl Agent for ScriptedAgent {
    fn act(&mut self, moment: usize, _obs: &[f64]) -> Result<Decision> {
        let Some(a) = self.actions.get(moment) else {
            return arg_err(format!("no scripted action for moment {moment}"));
        };
        Ok(Decision { sampled: SampledAction { raw: a.clone(), action: a.clone(), log_prob: 0.0 }, value: 0.0 })
    }

    fn thresholded(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub raw_action: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub reward: f64,
    pub trace_distance: f64,
    pub fidelity: f64,
    /// The circuit with the agent's noise inserted.
    pub noisy: Circuit,
}

/// Runs one episode. Each window the agent sees includes the noise already
/// chosen for earlier moments.
pub fn run_episode<A: Agent + ?Sized>(
    circuit: &Circuit,
    target: &DensityMatrix,
    kernel_k: usize,
    alpha: f64,
    epsilon: f64,
    agent: &mut A,
) -> Result<Trajectory> {
    if target.n_qubits() != circuit.n_qubits() {
        return arg_err(format!("target has {} qubits, circuit {}", target.n_qubits(), circuit.n_qubits()));
    }
    let mut noisy = circuit.noiseless();
    let mut qcr: Qcr = encode_qcr(&noisy);
    let obs_len = circuit.n_qubits() * kernel_k * crate::circuit::ENCODING_LEN;
    let mut steps = Vec::with_capacity(circuit.depth());
    for m in 0..circuit.depth() {
        let mut obs = vec![0.0; obs_len];
        qcr.window_into(m, kernel_k, &mut obs)?;
        let d = agent.act(m, &obs)?;
        let action = NoiseAction::from_flat(&d.sampled.action)?;
        if agent.thresholded() {
            apply_action_in_place(&mut noisy, m, &action)?;
        } else {
            set_noise_in_place(&mut noisy, m, &action)?;
        }
        qcr.set_noise(m, noisy.moments()[m].noise());
        steps.push(Step { obs, raw_action: d.sampled.raw, action: d.sampled.action, log_prob: d.sampled.log_prob, value: d.value });
    }
    let rho = simulate(&noisy)?;
    let td = trace_distance(&rho, target)?;
    Ok(Trajectory { steps, reward: reward_from_td(td, alpha, epsilon), trace_distance: td, fidelity: fidelity(&rho, target)?, noisy })
}

/// Inserts the policy's mean-action noise into every moment.
pub fn predict_noise(circuit: &Circuit, w: &PolicyWeights) -> Result<Circuit> {
    if circuit.n_qubits() != w.spec().n_qubits {
        return arg_err(format!("policy is for {} qubits, circuit has {}", w.spec().n_qubits, circuit.n_qubits()));
    }
    let mut noisy = circuit.noiseless();
    let mut qcr = encode_qcr(&noisy);
    let mut agent = GreedyAgent { weights: w };
    for m in 0..circuit.depth() {
        let obs = qcr.window(m, w.spec().kernel_k)?;
        let d = agent.act(m, &obs)?;
        apply_action_in_place(&mut noisy, m, &NoiseAction::from_flat(&d.sampled.action)?)?;
        qcr.set_noise(m, noisy.moments()[m].noise());
    }
    Ok(noisy)
}

/// A trained policy used as a noise model.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub weights: PolicyWeights,
}

impl NoiseModel for LearnedModel {
    fn name(&self) -> &str {
        "learned"
    }

    fn apply(&self, c: &Circuit) -> Result<Circuit> {
        predict_noise(c, &self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_circuit, random_clifford_circuit_1q};
    use crate::noise::{apply_ground_truth, NoiseModelSpec};
    use crate::rl::policy::PolicySpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn replaying_ground_truth_reproduces_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = NoiseModelSpec::three_qubit_high();
        for _ in 0..5 {
            let c = random_circuit(3, 8, &mut rng).unwrap();
            let noisy = apply_ground_truth(&c, &spec).unwrap();
            let target = simulate(&noisy).unwrap();
            let t = run_episode(&c, &target, 3, 1.0, 0.01, &mut ScriptedAgent::replaying(&noisy)).unwrap();
            assert!(t.trace_distance < 1e-9);
            assert!((t.reward - 100.0).abs() < 1e-6);
            assert_eq!(t.steps.len(), c.depth());
        }
    }

    #[test]
    fn zero_actions_give_noiseless_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = random_clifford_circuit_1q(10, &mut rng).unwrap();
        let target = simulate(&c.noiseless()).unwrap();
        let mut agent = ScriptedAgent { actions: vec![vec![0.0; 4]; c.depth()] };
        let t = run_episode(&c, &target, 3, 1.0, 0.01, &mut agent).unwrap();
        assert!(t.trace_distance < 1e-12);
        assert_eq!(t.noisy, c.noiseless());
    }

    #[test]
    fn short_script_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = random_clifford_circuit_1q(4, &mut rng).unwrap();
        let target = simulate(&c).unwrap();
        let mut agent = ScriptedAgent { actions: vec![vec![0.0; 4]; 2] };
        assert!(run_episode(&c, &target, 3, 1.0, 0.01, &mut agent).is_err());
    }

    #[test]
    fn greedy_prediction_matches_greedy_episode() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = PolicyWeights::init(&PolicySpec::for_qubits(1, 0.04), 0.25, &mut rng).unwrap();
        let c = random_clifford_circuit_1q(6, &mut rng).unwrap();
        let target = simulate(&c).unwrap();
        let t = run_episode(&c, &target, 3, 1.0, 0.01, &mut GreedyAgent { weights: &w }).unwrap();
        assert_eq!(t.noisy, predict_noise(&c, &w).unwrap());
        assert!(t.noisy.moments().iter().flat_map(|m| m.noise()).all(|n| n.to_array().iter().all(|&p| p <= 0.04)));
    }
}
