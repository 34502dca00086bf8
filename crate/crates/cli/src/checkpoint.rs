//! Policy checkpoints: a JSON header plus little-endian `f64` blobs in
//! base64.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use noisim::rl::{Adam, PolicySpec, PolicyWeights};
use serde::{Deserialize, Serialize};

use crate::config::hex_digest;
use crate::dataset::write_json;
use crate::error::{CliError, Result};

pub const FORMAT: &str = "noisimrl-checkpoint/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OptimizerBlob {
    steps: u64,
    beta1: f64,
    beta2: f64,
    first_moment: String,
    second_moment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    spec: PolicySpec,
    spec_hash: String,
    config_hash: String,
    episodes: usize,
    seed: u64,
    noise: String,
    rb_decay: f64,
    test_fidelity: f64,
    weights: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    optimizer: Option<OptimizerBlob>,
}

/// A saved policy with the provenance needed to reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub weights: PolicyWeights,
    pub config_hash: String,
    pub episodes: usize,
    pub seed: u64,
    pub noise: String,
    /// Decay used to derive the action bound.
    pub rb_decay: f64,
    pub test_fidelity: f64,
    /// Present on checkpoints meant for resuming.
    pub optimizer: Option<Adam>,
}

pub fn spec_hash(spec: &PolicySpec) -> String {
    hex_digest(serde_json::to_vec(spec).expect("spec serializes"))
}

fn encode(xs: &[f64]) -> String {
    STANDARD.encode(xs.iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>())
}

fn decode(s: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let bytes = STANDARD.decode(s).map_err(|e| CliError::Data(format!("{what}: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(CliError::Data(format!("{what}: expected {expected} values, found {} bytes", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight"))).collect())
}

impl Checkpoint {
    pub fn write(&self, path: &Path) -> Result<()> {
        let spec = self.weights.spec().clone();
        let file = CheckpointFile {
            format: FORMAT.into(),
            spec_hash: spec_hash(&spec),
            spec,
            config_hash: self.config_hash.clone(),
            episodes: self.episodes,
            seed: self.seed,
            noise: self.noise.clone(),
            rb_decay: self.rb_decay,
            test_fidelity: self.test_fidelity,
            weights: encode(self.weights.params()),
            optimizer: self.optimizer.as_ref().map(|a| OptimizerBlob {
                steps: a.steps(),
                beta1: a.beta1(),
                beta2: a.beta2(),
                first_moment: encode(a.first_moment()),
                second_moment: encode(a.second_moment()),
            }),
        };
        write_json(path, &file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let f: CheckpointFile = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if f.format != FORMAT {
            return Err(CliError::Data(format!("unsupported checkpoint format {:?}", f.format)));
        }
        if spec_hash(&f.spec) != f.spec_hash {
            return Err(CliError::Data("policy spec does not match its recorded hash".into()));
        }
        let n = f.spec.n_params();
        let weights = PolicyWeights::from_params(&f.spec, decode(&f.weights, n, "weights")?)?;
        if !weights.is_finite() {
            return Err(CliError::Data("checkpoint holds non-finite weights".into()));
        }
        let optimizer = match f.optimizer {
            Some(o) => Some(Adam::from_parts(
                decode(&o.first_moment, n, "optimizer first moment")?,
                decode(&o.second_moment, n, "optimizer second moment")?,
                o.steps,
                o.beta1,
                o.beta2,
            )?),
            None => None,
        };
        Ok(Checkpoint {
            weights,
            config_hash: f.config_hash,
            episodes: f.episodes,
            seed: f.seed,
            noise: f.noise,
            rb_decay: f.rb_decay,
            test_fidelity: f.test_fidelity,
            optimizer,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = PolicySpec::for_qubits(1, 0.04);
        let weights = PolicyWeights::init(&spec, 0.25, &mut rng).unwrap();
        let mut adam = Adam::new(spec.n_params(), 0.9, 0.999);
        let mut p = weights.params().to_vec();
        let g = vec![0.1; p.len()];
        adam.step(&mut p, &g, 1e-3);
        Checkpoint {
            weights,
            config_hash: "abc".into(),
            episodes: 32,
            seed: 7,
            noise: "1q".into(),
            rb_decay: 0.98,
            test_fidelity: 0.9,
            optimizer: Some(adam),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let c = sample();
        c.write(&path).unwrap();
        assert_eq!(Checkpoint::read(&path).unwrap(), c);
    }

    #[test]
    fn edited_spec_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        sample().write(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("\"hidden_dim\": 256", "\"hidden_dim\": 128");
        fs::write(&path, text).unwrap();
        assert!(matches!(Checkpoint::read(&path), Err(CliError::Data(_))));
    }
}
