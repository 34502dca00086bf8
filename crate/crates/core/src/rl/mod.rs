//! Policy network, PPO trainer and the noise-insertion environment.

pub mod env;
pub mod policy;
pub mod ppo;
pub mod train;

pub use env::{predict_noise, run_episode, Agent, Decision, GreedyAgent, LearnedModel, ScriptedAgent, Step, StochasticAgent, Trajectory};
pub use policy::{backward, forward_batch, policy_forward, ForwardCache, PolicySpec, PolicyWeights};
pub use ppo::{
    deterministic_action, gaussian_log_prob, ppo_loss, ppo_update, reward, reward_from_td, sample_action, Adam, LossStats, PpoBatch,
    PpoConfig, SampledAction, UpdateStats,
};
pub use train::{collect_batch, episode_rng, evaluate_policy, split_indices, train, HistoryRow, TrainOutcome, TrainState, TrainingSample};
