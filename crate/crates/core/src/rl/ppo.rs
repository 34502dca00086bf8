//! Proximal policy optimisation on terminal-reward episodes.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::env::Trajectory;
use super::policy::{backward, forward_batch, PolicyWeights};
use crate::error::{arg_err, Error, Result};
use crate::qdm::{trace_distance, DensityMatrix};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_ratio: f64,
    pub learning_rate: f64,
    pub discount: f64,
    pub gae_lambda: f64,
    pub epochs_per_update: usize,
    pub batch_episodes: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm cap; `None` disables clipping.
    pub max_grad_norm: Option<f64>,
    pub total_episodes: usize,
    /// Episodes between evaluations of the deterministic policy.
    pub eval_interval: usize,
    pub reward_alpha: f64,
    pub reward_epsilon: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    /// Initial action standard deviation as a fraction of `p_max`.
    pub init_std_frac: f64,
    pub seed: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_ratio: 0.2,
            learning_rate: 3e-4,
            discount: 0.99,
            gae_lambda: 0.95,
            epochs_per_update: 10,
            batch_episodes: 16,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: Some(0.5),
            total_episodes: 50_000,
            eval_interval: 1_000,
            reward_alpha: 1.0,
            reward_epsilon: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            init_std_frac: 0.25,
            seed: 0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_ratio > 0.0) {
            return arg_err("clip_ratio must be positive");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return arg_err("discount must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return arg_err("gae_lambda must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0) || self.epochs_per_update == 0 || self.batch_episodes == 0 || self.eval_interval == 0 {
            return arg_err("learning_rate, epochs_per_update, batch_episodes and eval_interval must be positive");
        }
        if !(self.reward_alpha > 0.0 && self.reward_epsilon > 0.0) {
            return arg_err("reward_alpha and reward_epsilon must be positive");
        }
        if self.entropy_coef < 0.0 || self.value_coef < 0.0 {
            return arg_err("loss coefficients must be non-negative");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return arg_err("Adam betas must lie in [0, 1)");
        }
        if !(self.init_std_frac > 0.0) {
            return arg_err("init_std_frac must be positive");
        }
        if let Some(g) = self.max_grad_norm {
            if !(g > 0.0) {
                return arg_err("max_grad_norm must be positive when set");
            }
        }
        Ok(())
    }
}

/// `1 / (α·TD² + ε_r)`.
pub fn reward_from_td(td: f64, alpha: f64, epsilon: f64) -> f64 {
    1.0 / (alpha * td * td + epsilon)
}

pub fn reward(rho_agent: &DensityMatrix, rho_true: &DensityMatrix, alpha: f64, epsilon: f64) -> Result<f64> {
    if !(alpha > 0.0 && epsilon > 0.0) {
        return arg_err("reward constants must be positive");
    }
    Ok(reward_from_td(trace_distance(rho_agent, rho_true)?, alpha, epsilon))
}

/// Diagonal Gaussian log-density of `x` around `means`.
pub fn gaussian_log_prob(x: &[f64], means: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(means)
        .zip(log_std)
        .map(|((&x, &m), &ls)| {
            let z = (x - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

/// A sampled action: `raw` is the Gaussian draw, `action` its clip to
/// `[0, p_max]`, and `log_prob` the density of `raw`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    pub raw: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
}

pub fn sample_action<R: Rng + ?Sized>(means: &[f64], log_std: &[f64], p_max: f64, rng: &mut R) -> SampledAction {
    let raw: Vec<f64> = means
        .iter()
        .zip(log_std)
        .map(|(&m, &ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let action = raw.iter().map(|&u| u.clamp(0.0, p_max)).collect();
    let log_prob = gaussian_log_prob(&raw, means, log_std);
    SampledAction { raw, action, log_prob }
}

/// The deterministic action: the means themselves.
pub fn deterministic_action(means: &[f64], log_std: &[f64], p_max: f64) -> SampledAction {
    let action = means.iter().map(|&m| m.clamp(0.0, p_max)).collect();
    SampledAction { raw: means.to_vec(), action, log_prob: gaussian_log_prob(means, means, log_std) }
}

/// Flattened training data for one update.
#[derive(Debug, Clone, PartialEq)]
pub struct PpoBatch {
    pub n: usize,
    pub obs: Vec<f64>,
    pub raw_actions: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl PpoBatch {
    /// Terminal rewards, scaled by `ε_r` so they lie in `(0, 1]`, are
    /// propagated with GAE; advantages are then standardised over the batch.
    pub fn from_trajectories(trajs: &[Trajectory], cfg: &PpoConfig) -> Result<Self> {
        let mut b = PpoBatch { n: 0, obs: vec![], raw_actions: vec![], old_log_probs: vec![], advantages: vec![], returns: vec![] };
        for t in trajs {
            let len = t.steps.len();
            let mut adv = vec![0.0; len];
            let mut next_adv = 0.0;
            for i in (0..len).rev() {
                let (r, next_v) = if i + 1 == len { (t.reward * cfg.reward_epsilon, 0.0) } else { (0.0, t.steps[i + 1].value) };
                let delta = r + cfg.discount * next_v - t.steps[i].value;
                next_adv = delta + cfg.discount * cfg.gae_lambda * next_adv;
                adv[i] = next_adv;
            }
            for (s, a) in t.steps.iter().zip(adv) {
                b.obs.extend_from_slice(&s.obs);
                b.raw_actions.extend_from_slice(&s.raw_action);
                b.old_log_probs.push(s.log_prob);
                b.advantages.push(a);
                b.returns.push(a + s.value);
            }
            b.n += len;
        }
        if b.n == 0 {
            return arg_err("batch contains no steps");
        }
        normalize(&mut b.advantages);
        Ok(b)
    }
}

/// Centres, and scales to unit (population) deviation unless the spread
/// is negligible.
fn normalize(xs: &mut [f64]) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 1e-8 { 1.0 / std } else { 1.0 };
    xs.iter_mut().for_each(|x| *x = (*x - mean) * scale);
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Clipped-surrogate loss plus value and entropy terms, and its gradient
/// with respect to every weight.
pub fn ppo_loss(w: &PolicyWeights, batch: &PpoBatch, cfg: &PpoConfig) -> Result<(LossStats, Vec<f64>)> {
    let spec = w.spec();
    let a = spec.action_dim();
    let n = batch.n;
    let nf = n as f64;
    let cache = forward_batch(w, &batch.obs, n)?;
    let log_std = w.log_std().to_vec();
    let inv_var: Vec<f64> = log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();

    let mut d_means = DMatrix::<f64>::zeros(n, a);
    let mut d_values = vec![0.0; n];
    let mut d_log_std = vec![0.0; a];
    let mut st = LossStats::default();
    let mut clipped = 0usize;
    for i in 0..n {
        let raw = &batch.raw_actions[i * a..(i + 1) * a];
        let means = cache.mean_row(i);
        let logp = gaussian_log_prob(raw, &means, &log_std);
        let ratio = (logp - batch.old_log_probs[i]).exp();
        let adv = batch.advantages[i];
        let unclipped = ratio * adv;
        let clipped_term = ratio.clamp(1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * adv;
        st.policy -= unclipped.min(clipped_term) / nf;
        st.approx_kl += (batch.old_log_probs[i] - logp) / nf;
        if unclipped <= clipped_term {
            let d_logp = -adv * ratio / nf;
            for j in 0..a {
                let diff = raw[j] - means[j];
                d_means[(i, j)] = d_logp * diff * inv_var[j];
                d_log_std[j] += d_logp * (diff * diff * inv_var[j] - 1.0);
            }
        } else {
            clipped += 1;
        }
        let err = cache.values[i] - batch.returns[i];
        st.value += err * err / nf;
        d_values[i] = cfg.value_coef * 2.0 * err / nf;
    }
    st.entropy = log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum();
    d_log_std.iter_mut().for_each(|g| *g -= cfg.entropy_coef);
    st.total = st.policy + cfg.value_coef * st.value - cfg.entropy_coef * st.entropy;
    st.clip_fraction = clipped as f64 / nf;
    let grad = backward(w, &cache, &d_means, &d_values, &d_log_std);
    Ok((st, grad))
}

/// Adam optimiser state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(n_params: usize, beta1: f64, beta2: f64) -> Self {
        Adam { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0, beta1, beta2, eps: 1e-8 }
    }

    /// Rebuilds a saved optimiser from its moment estimates and step count.
    pub fn from_parts(m: Vec<f64>, v: Vec<f64>, t: u64, beta1: f64, beta2: f64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::Dimension { expected: m.len(), got: v.len() });
        }
        Ok(Adam { m, v, t, beta1, beta2, eps: 1e-8 })
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub first_epoch: LossStats,
    pub last_epoch: LossStats,
    pub grad_norm: f64,
}

/// `epochs_per_update` full-batch Adam steps. On a non-finite loss or
/// weight the previous weights and optimiser state are restored.
pub fn ppo_update(w: &mut PolicyWeights, adam: &mut Adam, batch: &PpoBatch, cfg: &PpoConfig) -> Result<UpdateStats> {
    let saved = (w.clone(), adam.clone());
    let mut stats = UpdateStats::default();
    for epoch in 0..cfg.epochs_per_update {
        let result = ppo_loss(w, batch, cfg).and_then(|(st, mut g)| {
            if !st.total.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite PPO loss at epoch {epoch}")));
            }
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if let Some(cap) = cfg.max_grad_norm {
                if norm > cap {
                    g.iter_mut().for_each(|v| *v *= cap / norm);
                }
            }
            adam.step(w.params_mut(), &g, cfg.learning_rate);
            if !w.is_finite() {
                return Err(Error::Numerical("update produced non-finite weights".into()));
            }
            Ok((st, norm))
        });
        match result {
            Ok((st, norm)) => {
                if epoch == 0 {
                    stats.first_epoch = st;
                    stats.grad_norm = norm;
                }
                stats.last_epoch = st;
            }
            Err(e) => {
                (*w, *adam) = saved;
                return Err(e);
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::rl::env::Step;
    use crate::rl::policy::PolicySpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_spec() -> PolicySpec {
        PolicySpec { n_qubits: 1, kernel_k: 3, conv_filters: 2, conv_width: 3, feature_dim: 8, hidden_dim: 16, p_max: 0.1 }
    }

    fn random_batch(w: &PolicyWeights, n: usize, rng: &mut ChaCha8Rng) -> PpoBatch {
        let spec = w.spec();
        let obs: Vec<f64> = (0..n * spec.obs_len()).map(|_| rng.random_range(0.0..1.0)).collect();
        let cache = forward_batch(w, &obs, n).unwrap();
        let mut raw = Vec::new();
        let mut old = Vec::new();
        for i in 0..n {
            let s = sample_action(&cache.mean_row(i), w.log_std(), spec.p_max, rng);
            old.push(s.log_prob + rng.random_range(-0.1..0.1));
            raw.extend(s.raw);
        }
        let advantages = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let returns = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        PpoBatch { n, obs, raw_actions: raw, old_log_probs: old, advantages, returns }
    }

    #[test]
    fn reward_examples() {
        assert!((reward_from_td(0.0, 1.0, 0.01) - 100.0).abs() < 1e-12);
        assert!((reward_from_td(1.0, 1.0, 0.01) - 1.0 / 1.01).abs() < 1e-12);
        let rho = crate::qdm::zero_state(1).unwrap();
        assert!(reward(&rho, &rho, 0.0, 0.01).is_err());
    }

    #[test]
    fn samples_stay_in_action_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let s = sample_action(&[0.0, 0.05, 0.1, -0.3], &[0.0; 4], 0.1, &mut rng);
            assert!(s.action.iter().all(|&x| (0.0..=0.1).contains(&x)));
        }
    }

    #[test]
    fn infinite_clip_equals_unclipped_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = PolicyWeights::init(&tiny_spec(), 0.25, &mut rng).unwrap();
        let b = random_batch(&w, 12, &mut rng);
        let cfg = PpoConfig { clip_ratio: f64::INFINITY, ..PpoConfig::default() };
        let (st, _) = ppo_loss(&w, &b, &cfg).unwrap();
        let cache = forward_batch(&w, &b.obs, b.n).unwrap();
        let a = tiny_spec().action_dim();
        let surrogate: f64 = (0..b.n)
            .map(|i| {
                let lp = gaussian_log_prob(&b.raw_actions[i * a..(i + 1) * a], &cache.mean_row(i), w.log_std());
                (lp - b.old_log_probs[i]).exp() * b.advantages[i]
            })
            .sum::<f64>()
            / b.n as f64;
        assert!((st.policy + surrogate).abs() < 1e-12);
        assert_eq!(st.clip_fraction, 0.0);
    }

    #[test]
    fn duplicated_batch_gives_same_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w0 = PolicyWeights::init(&tiny_spec(), 0.25, &mut rng).unwrap();
        let b = random_batch(&w0, 10, &mut rng);
        let mut d = b.clone();
        d.n *= 2;
        d.obs.extend_from_slice(&b.obs);
        d.raw_actions.extend_from_slice(&b.raw_actions);
        d.old_log_probs.extend_from_slice(&b.old_log_probs);
        d.advantages.extend_from_slice(&b.advantages);
        d.returns.extend_from_slice(&b.returns);
        let cfg = PpoConfig::default();
        let (mut w1, mut w2) = (w0.clone(), w0.clone());
        let n = w0.spec().n_params();
        ppo_update(&mut w1, &mut Adam::new(n, 0.9, 0.999), &b, &cfg).unwrap();
        ppo_update(&mut w2, &mut Adam::new(n, 0.9, 0.999), &d, &cfg).unwrap();
        for (x, y) in w1.params().iter().zip(w2.params()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_critic_with_equal_rewards_gives_no_actor_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let spec = tiny_spec();
        let w = PolicyWeights::init(&spec, 0.25, &mut rng).unwrap();
        let cfg = PpoConfig { entropy_coef: 0.0, ..PpoConfig::default() };
        let r = 50.0;
        let trajs: Vec<Trajectory> = (0..4)
            .map(|_| {
                let len = 5;
                let steps = (0..len)
                    .map(|i| {
                        let obs: Vec<f64> = (0..spec.obs_len()).map(|_| rng.random_range(0.0..1.0)).collect();
                        let s = sample_action(&[0.05; 4], w.log_std(), spec.p_max, &mut rng);
                        let value = cfg.discount.powi(len - 1 - i) * r * cfg.reward_epsilon;
                        Step { obs, raw_action: s.raw, action: s.action, log_prob: s.log_prob, value }
                    })
                    .collect();
                Trajectory { steps, reward: r, trace_distance: 0.0, fidelity: 1.0, noisy: Circuit::new(1).unwrap() }
            })
            .collect();
        let b = PpoBatch::from_trajectories(&trajs, &cfg).unwrap();
        assert!(b.advantages.iter().all(|a| a.abs() < 1e-12));
        let (_, g) = ppo_loss(&w, &b, &cfg).unwrap();
        let mut offset = 0;
        for (name, rows, cols) in spec.layer_shapes() {
            let len = rows * cols;
            if name.starts_with("actor") || name == "log_std" {
                assert!(g[offset..offset + len].iter().all(|v| v.abs() < 1e-8), "{name}");
            }
            offset += len;
        }
    }

    #[test]
    fn non_finite_update_restores_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut w = PolicyWeights::init(&tiny_spec(), 0.25, &mut rng).unwrap();
        let mut b = random_batch(&w, 4, &mut rng);
        b.returns[0] = f64::NAN;
        let before = w.clone();
        let mut adam = Adam::new(w.spec().n_params(), 0.9, 0.999);
        let saved = adam.clone();
        assert!(matches!(ppo_update(&mut w, &mut adam, &b, &PpoConfig::default()), Err(Error::Numerical(_))));
        assert_eq!(w, before);
        assert_eq!(adam, saved);
    }
}
