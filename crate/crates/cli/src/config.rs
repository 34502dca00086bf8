//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use noisim::noise::NoiseModelSpec;
use noisim::rb::RbConfig;
use noisim::rl::{PolicySpec, PpoConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Training budget presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Shortened runs that fit on a workstation.
    Desk,
    /// Episode counts of the published experiments.
    Paper,
}

impl Profile {
    pub fn episodes(self, n_qubits: usize) -> usize {
        match (self, n_qubits) {
            (Profile::Desk, 1) => 50_000,
            (Profile::Desk, _) => 300_000,
            (Profile::Paper, 1) => 400_000,
            (Profile::Paper, _) => 1_500_000,
        }
    }
}

/// A preset name or a full inline rule set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSelection {
    Preset(String),
    Inline(NoiseModelSpec),
}

impl NoiseSelection {
    pub fn resolve(&self) -> Result<NoiseModelSpec> {
        match self {
            NoiseSelection::Preset(name) => NoiseModelSpec::preset(name).ok_or_else(|| {
                CliError::Config(format!("unknown noise preset {name:?}; expected one of {}", NoiseModelSpec::PRESETS.join(", ")))
            }),
            NoiseSelection::Inline(spec) => {
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CircuitKind {
    /// Fixed-depth circuits of random native Clifford gates.
    Clifford,
    /// Fixed-depth circuits of native gates with continuous angles.
    Random,
    /// Synthesized random Clifford unitaries of varying depth.
    CliffordUnitary,
    /// Alternating `random` and `clifford_unitary` circuits.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Number of circuits; 100 for one qubit and 800 otherwise when unset.
    pub size: Option<usize>,
    /// `clifford` for one qubit and `mixed` otherwise when unset.
    pub kind: Option<CircuitKind>,
    /// Moments per fixed-depth circuit; 10 for one qubit and 15 otherwise.
    pub depth: Option<usize>,
    pub train_fraction: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig { size: None, kind: None, depth: None, train_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub kernel_k: usize,
    pub conv_filters: Option<usize>,
    pub feature_dim: Option<usize>,
    pub hidden_dim: usize,
    /// Upper bound on emitted noise parameters. Defaults to twice the
    /// benchmarked error rate `1 - p`.
    pub p_max: Option<f64>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { kernel_k: 3, conv_filters: None, feature_dim: None, hidden_dim: 256, p_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbSettings {
    /// Sequence lengths; defaults depend on the qubit count.
    pub depths: Option<Vec<usize>>,
    pub replicates: usize,
    pub shots: Option<u64>,
    /// Skips the benchmarking run and uses this decay directly.
    pub decay: Option<f64>,
}

impl Default for RbSettings {
    fn default() -> Self {
        RbSettings { depths: None, replicates: 30, shots: None, decay: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Circuits in the fixed evaluation set; 100 for one qubit, 200 otherwise.
    pub circuits: Option<usize>,
    pub depth: usize,
    pub sweep_depths: Vec<usize>,
    pub circuits_per_depth: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { circuits: None, depth: 15, sweep_depths: vec![3, 5, 7, 10, 15, 20, 25, 30], circuits_per_depth: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Prefix of every output file.
    pub experiment: String,
    pub n_qubits: usize,
    pub noise: NoiseSelection,
    pub seed: u64,
    pub profile: Option<Profile>,
    pub dataset: DatasetConfig,
    pub policy: PolicyConfig,
    pub ppo: PpoConfig,
    pub rb: RbSettings,
    pub eval: EvalConfig,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "experiment".into(),
            n_qubits: 1,
            noise: NoiseSelection::Preset("1q".into()),
            seed: 0,
            profile: None,
            dataset: DatasetConfig::default(),
            policy: PolicyConfig::default(),
            ppo: PpoConfig::default(),
            rb: RbSettings::default(),
            eval: EvalConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub profile: Option<Profile>,
    pub out_dir: Option<PathBuf>,
    pub noise: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies overrides, fills the per-qubit defaults and validates.
    pub fn finalize(mut self, o: &Overrides) -> Result<Self> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = o.profile {
            self.profile = Some(p);
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(n) = &o.noise {
            self.noise = NoiseSelection::Preset(n.clone());
        }
        if !(1..=noisim::qdm::MAX_QUBITS).contains(&self.n_qubits) {
            return Err(CliError::Config(format!("n_qubits must be in 1..={}, got {}", noisim::qdm::MAX_QUBITS, self.n_qubits)));
        }
        let one = self.n_qubits == 1;
        self.dataset.size.get_or_insert(if one { 100 } else { 800 });
        self.dataset.kind.get_or_insert(if one { CircuitKind::Clifford } else { CircuitKind::Mixed });
        self.dataset.depth.get_or_insert(if one { 10 } else { 15 });
        self.eval.circuits.get_or_insert(if one { 100 } else { 200 });
        self.rb.depths.get_or_insert_with(|| if one { RbConfig::default().depths } else { vec![1, 2, 3, 4, 5, 6, 8, 10] });
        if let Some(p) = self.profile {
            self.ppo.total_episodes = p.episodes(self.n_qubits);
        }
        self.ppo.seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.experiment.is_empty() || self.experiment.contains(['/', '\\']) {
            return bad(format!("experiment name {:?} cannot be used in file names", self.experiment));
        }
        self.noise.resolve()?;
        if self.dataset.size == Some(0) || self.dataset.depth == Some(0) {
            return bad("dataset size and depth must be positive".into());
        }
        if !(self.dataset.train_fraction > 0.0 && self.dataset.train_fraction <= 1.0) {
            return bad("train_fraction must lie in (0, 1]".into());
        }
        if let Some(p) = self.policy.p_max {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("p_max must lie in (0, 1], got {p}"));
            }
        }
        if let Some(p) = self.rb.decay {
            if !(p > 0.0 && p <= 1.0) {
                return bad(format!("rb decay must lie in (0, 1], got {p}"));
            }
        }
        self.rb_config().validate()?;
        self.ppo.validate()?;
        if self.eval.circuits == Some(0) || self.eval.depth == 0 || self.eval.circuits_per_depth == 0 {
            return bad("evaluation sizes must be positive".into());
        }
        if self.eval.sweep_depths.is_empty() || self.eval.sweep_depths.contains(&0) {
            return bad("sweep depths must be positive".into());
        }
        self.policy_spec(0.5)?;
        Ok(())
    }

    pub fn rb_config(&self) -> RbConfig {
        RbConfig { depths: self.rb.depths.clone().unwrap_or_default(), replicates: self.rb.replicates, shots: self.rb.shots }
    }

    pub fn policy_spec(&self, p_max: f64) -> Result<PolicySpec> {
        let base = PolicySpec::for_qubits(self.n_qubits, p_max);
        let spec = PolicySpec {
            kernel_k: self.policy.kernel_k,
            conv_filters: self.policy.conv_filters.unwrap_or(base.conv_filters),
            feature_dim: self.policy.feature_dim.unwrap_or(base.feature_dim),
            hidden_dim: self.policy.hidden_dim,
            ..base
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    /// SHA-256 of the canonical JSON form, ignoring where outputs go.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig { out_dir: PathBuf::new(), ..self.clone() };
        hex_digest(serde_json::to_vec(&canonical).expect("config serializes"))
    }

    pub fn output(&self, stem: &str, model: &str, ext: &str) -> PathBuf {
        self.out_dir.join(format!("{stem}_{model}.{ext}"))
    }
}

pub(crate) fn hex_digest(bytes: impl AsRef<[u8]>) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
