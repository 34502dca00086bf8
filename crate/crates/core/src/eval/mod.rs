//! Dataset-level comparison of noise models against reference noisy states.

use std::fs::File;
use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_grover_11, build_qft, random_clifford_circuit_1q, random_clifford_native_circuit, Circuit};
use crate::error::{arg_err, Error, Result};
use crate::noise::{apply_ground_truth, apply_rb_model, simulate, NoiseModelSpec, RbModel};
use crate::qdm::{computational_probabilities, fidelity, maximally_mixed, trace_distance, DensityMatrix};
use crate::rb::mean_std;
use crate::rl::{predict_noise, PolicyWeights};

/// A way of predicting the noisy output state of a circuit.
#[derive(Debug, Clone)]
pub enum Predictor {
    Learned(PolicyWeights),
    Rb(RbModel),
    GroundTruth(NoiseModelSpec),
    /// The noiseless simulation.
    None,
    /// The maximally mixed state.
    Mms,
}

impl Predictor {
    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Learned(_) => "learned",
            Predictor::Rb(_) => "rb",
            Predictor::GroundTruth(_) => "ground_truth",
            Predictor::None => "none",
            Predictor::Mms => "mms",
        }
    }

    pub fn predict(&self, c: &Circuit) -> Result<DensityMatrix> {
        match self {
            Predictor::Learned(w) => simulate(&predict_noise(c, w)?),
            Predictor::Rb(m) => simulate(&apply_rb_model(c, m)),
            Predictor::GroundTruth(spec) => simulate(&apply_ground_truth(c, spec)?),
            Predictor::None => simulate(&c.noiseless()),
            Predictor::Mms => maximally_mixed(c.n_qubits()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model: String,
    pub depth: usize,
    pub circuit_id: usize,
    pub fidelity: f64,
    pub trace_distance: f64,
}

/// Mean and sample standard deviation per `(model, depth)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub model: String,
    pub depth: usize,
    pub count: usize,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub trace_distance_mean: f64,
    pub trace_distance_std: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: Vec<EvalRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl EvalReport {
    /// Builds aggregates grouped by model (in order of first appearance)
    /// and ascending depth.
    pub fn from_records(records: Vec<EvalRecord>) -> Self {
        let mut models: Vec<&str> = Vec::new();
        for r in &records {
            if !models.contains(&r.model.as_str()) {
                models.push(&r.model);
            }
        }
        let mut aggregates = Vec::new();
        for m in models {
            let mut depths: Vec<usize> = records.iter().filter(|r| r.model == m).map(|r| r.depth).collect();
            depths.sort_unstable();
            depths.dedup();
            for d in depths {
                let group: Vec<&EvalRecord> = records.iter().filter(|r| r.model == m && r.depth == d).collect();
                let (fidelity_mean, fidelity_std) = mean_std(&group.iter().map(|r| r.fidelity).collect::<Vec<_>>());
                let (trace_distance_mean, trace_distance_std) = mean_std(&group.iter().map(|r| r.trace_distance).collect::<Vec<_>>());
                aggregates.push(Aggregate {
                    model: m.to_string(),
                    depth: d,
                    count: group.len(),
                    fidelity_mean,
                    fidelity_std,
                    trace_distance_mean,
                    trace_distance_std,
                });
            }
        }
        EvalReport { records, aggregates }
    }

    pub fn merge(reports: impl IntoIterator<Item = EvalReport>) -> Self {
        EvalReport::from_records(reports.into_iter().flat_map(|r| r.records).collect())
    }

    /// Records of one model only.
    pub fn for_model(&self, model: &str) -> EvalReport {
        EvalReport::from_records(self.records.iter().filter(|r| r.model == model).cloned().collect())
    }

    pub fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.model) {
                out.push(r.model.clone());
            }
        }
        out
    }

    pub fn aggregate(&self, model: &str, depth: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.model == model && a.depth == depth)
    }

    /// Mean fidelity and trace distance of one model over all its records.
    pub fn overall(&self, model: &str) -> Option<(f64, f64)> {
        let rs: Vec<&EvalRecord> = self.records.iter().filter(|r| r.model == model).collect();
        if rs.is_empty() {
            return None;
        }
        let n = rs.len() as f64;
        Some((rs.iter().map(|r| r.fidelity).sum::<f64>() / n, rs.iter().map(|r| r.trace_distance).sum::<f64>() / n))
    }
}

/// Compares `model`'s prediction for each circuit with its target.
pub fn evaluate_model(circuits: &[Circuit], targets: &[DensityMatrix], model: &Predictor) -> Result<EvalReport> {
    evaluate_labelled(circuits, targets, &circuits.iter().map(Circuit::depth).collect::<Vec<_>>(), model)
}

fn evaluate_labelled(circuits: &[Circuit], targets: &[DensityMatrix], depths: &[usize], model: &Predictor) -> Result<EvalReport> {
    if circuits.len() != targets.len() {
        return arg_err(format!("{} circuits but {} targets", circuits.len(), targets.len()));
    }
    let records = circuits
        .par_iter()
        .zip(targets)
        .enumerate()
        .map(|(i, (c, t))| {
            let rho = model.predict(c)?;
            Ok(EvalRecord {
                model: model.name().to_string(),
                depth: depths[i],
                circuit_id: i,
                fidelity: fidelity(&rho, t)?,
                trace_distance: trace_distance(&rho, t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_records(records))
}

pub fn evaluate_models(circuits: &[Circuit], targets: &[DensityMatrix], models: &[Predictor]) -> Result<EvalReport> {
    let reports = models.iter().map(|m| evaluate_model(circuits, targets, m)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::merge(reports))
}

/// Random Clifford circuits of each depth, scored against targets produced
/// by `noise`. Circuit ids run across the whole sweep.
pub fn depth_sweep<R: Rng + ?Sized>(
    n_qubits: usize,
    depths: &[usize],
    circuits_per_depth: usize,
    noise: &NoiseModelSpec,
    models: &[Predictor],
    rng: &mut R,
) -> Result<EvalReport> {
    if depths.is_empty() || circuits_per_depth == 0 {
        return arg_err("sweep needs at least one depth and one circuit per depth");
    }
    let mut circuits = Vec::new();
    let mut labels = Vec::new();
    for &d in depths {
        for _ in 0..circuits_per_depth {
            let c = if n_qubits == 1 { random_clifford_circuit_1q(d, rng)? } else { random_clifford_native_circuit(n_qubits, d, rng)? };
            circuits.push(c);
            labels.push(d);
        }
    }
    let targets = circuits.par_iter().map(|c| simulate(&apply_ground_truth(c, noise)?)).collect::<Result<Vec<_>>>()?;
    let reports = models.iter().map(|m| evaluate_labelled(&circuits, &targets, &labels, m)).collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::merge(reports))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Qft,
    Grover,
}

impl Algorithm {
    pub fn circuit(self) -> Result<Circuit> {
        match self {
            Algorithm::Qft => build_qft(3),
            Algorithm::Grover => build_grover_11(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qft => "qft",
            Algorithm::Grover => "grover",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOutcome {
    pub model: String,
    pub fidelity: f64,
    pub trace_distance: f64,
    pub probabilities: Vec<f64>,
    /// Row-major `|ρ_model − ρ_true|`.
    pub abs_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudy {
    pub circuit: String,
    pub noise: String,
    pub gates: usize,
    pub cz_gates: usize,
    pub moments: usize,
    pub true_probabilities: Vec<f64>,
    pub models: Vec<ModelOutcome>,
}

impl CaseStudy {
    pub fn outcome(&self, model: &str) -> Option<&ModelOutcome> {
        self.models.iter().find(|m| m.model == model)
    }
}

/// Runs an algorithm circuit under `noise` and compares each model's
/// prediction with the noisy state.
pub fn algorithm_case_study(alg: Algorithm, noise: &NoiseModelSpec, models: &[Predictor]) -> Result<CaseStudy> {
    let c = alg.circuit()?;
    let truth = simulate(&apply_ground_truth(&c, noise)?)?;
    let outcomes = models
        .iter()
        .map(|m| {
            let rho = m.predict(&c)?;
            Ok(ModelOutcome {
                model: m.name().to_string(),
                fidelity: fidelity(&rho, &truth)?,
                trace_distance: trace_distance(&rho, &truth)?,
                probabilities: computational_probabilities(&rho),
                abs_error: rho.abs_difference(&truth)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CaseStudy {
        circuit: alg.name().to_string(),
        noise: noise.name.clone(),
        gates: c.gate_count(),
        cz_gates: c.cz_count(),
        moments: c.depth(),
        true_probabilities: computational_probabilities(&truth),
        models: outcomes,
    })
}

/// Marginal distribution over `keep` (qubit 0 most significant).
pub fn marginal(probs: &[f64], n_qubits: usize, keep: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << keep.len()];
    for (i, p) in probs.iter().enumerate() {
        let idx = keep.iter().fold(0, |acc, &q| (acc << 1) | ((i >> (n_qubits - 1 - q)) & 1));
        out[idx] += p;
    }
    out
}

pub fn argmax(xs: &[f64]) -> usize {
    xs.iter().enumerate().fold(0, |best, (i, &x)| if x > xs[best] { i } else { best })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const CSV_HEADER: [&str; 5] = ["model", "depth", "circuit_id", "fidelity", "trace_distance"];

/// Writes the records (CSV) or the full report with aggregates (JSON).
pub fn export_report(report: &EvalReport, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
            w.write_record(CSV_HEADER)?;
            for r in &report.records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut f = File::create(path)?;
            serde_json::to_writer_pretty(&mut f, report)?;
            f.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_report_csv(path: &Path) -> Result<EvalReport> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Data(format!("unexpected report columns {header:?}")));
    }
    let records = r.deserialize().collect::<std::result::Result<Vec<EvalRecord>, _>>()?;
    Ok(EvalReport::from_records(records))
}
