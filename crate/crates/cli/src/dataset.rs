//! Circuit/target datasets persisted as JSON.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use noisim::circuit::{random_circuit, random_clifford_circuit_1q, random_clifford_native_circuit, random_clifford_unitary_circuit, Circuit};
use noisim::noise::{apply_ground_truth, simulate, NoiseModelSpec};
use noisim::qdm::DensityMatrix;
use noisim::rl::TrainingSample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CircuitKind;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n_qubits: usize,
    pub noise: NoiseModelSpec,
    pub seed: u64,
    pub kind: CircuitKind,
    /// Unix seconds taken from `SOURCE_DATE_EPOCH`, or 0, so that files
    /// stay reproducible.
    pub created: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub circuit: Circuit,
    pub target_dm: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub metadata: DatasetMeta,
    pub entries: Vec<DatasetEntry>,
}

pub(crate) fn created_stamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

/// Draws one circuit of the requested kind. `index` alternates the halves
/// of a mixed set.
pub fn draw_circuit<R: Rng + ?Sized>(kind: CircuitKind, n_qubits: usize, depth: usize, index: usize, rng: &mut R) -> noisim::Result<Circuit> {
    match kind {
        CircuitKind::Clifford if n_qubits == 1 => random_clifford_circuit_1q(depth, rng),
        CircuitKind::Clifford => random_clifford_native_circuit(n_qubits, depth, rng),
        CircuitKind::Random => random_circuit(n_qubits, depth, rng),
        CircuitKind::CliffordUnitary => random_clifford_unitary_circuit(n_qubits, rng),
        CircuitKind::Mixed if index.is_multiple_of(2) => random_circuit(n_qubits, depth, rng),
        CircuitKind::Mixed => random_clifford_unitary_circuit(n_qubits, rng),
    }
}

impl Dataset {
    /// Generates circuits serially from `rng` and simulates their noisy
    /// outputs in parallel.
    pub fn generate<R: Rng + ?Sized>(
        n_qubits: usize,
        kind: CircuitKind,
        size: usize,
        depth: usize,
        noise: &NoiseModelSpec,
        seed: u64,
        rng: &mut R,
    ) -> Result<Self> {
        let circuits = (0..size).map(|i| draw_circuit(kind, n_qubits, depth, i, rng)).collect::<noisim::Result<Vec<_>>>()?;
        let entries = circuits
            .into_par_iter()
            .map(|c| {
                let target_dm = simulate(&apply_ground_truth(&c, noise)?)?;
                Ok(DatasetEntry { circuit: c, target_dm })
            })
            .collect::<noisim::Result<Vec<_>>>()?;
        Ok(Dataset { metadata: DatasetMeta { n_qubits, noise: noise.clone(), seed, kind, created: created_stamp() }, entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let ds: Dataset = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        let n = self.metadata.n_qubits;
        if let Some((i, _)) = self.entries.iter().enumerate().find(|(_, e)| e.circuit.n_qubits() != n || e.target_dm.n_qubits() != n) {
            return Err(CliError::Data(format!("entry {i} does not have {n} qubits")));
        }
        self.metadata.noise.validate()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn samples(&self) -> Vec<TrainingSample> {
        self.entries.iter().map(|e| TrainingSample { circuit: e.circuit.clone(), target: e.target_dm.clone() }).collect()
    }
}

/// Pretty JSON with a trailing newline. The file is only created once
/// serialization has succeeded.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    bytes.push(b'\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}
