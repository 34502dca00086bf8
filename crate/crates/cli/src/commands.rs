//! The five subcommands. Each returns the files it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use noisim::circuit::Circuit;
use noisim::eval::{
    algorithm_case_study, argmax, depth_sweep, evaluate_models, export_report, marginal, Algorithm, CaseStudy, EvalReport,
    Predictor, ReportFormat,
};
use noisim::noise::{apply_ground_truth, simulate, NoiseModelSpec, RbModel};
use noisim::qdm::DensityMatrix;
use noisim::rb::{rb_characterize, RbReport};
use noisim::rl::{predict_noise, split_indices, train, HistoryRow, TrainState, TrainingSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::{CircuitKind, ExperimentConfig};
use crate::dataset::{draw_circuit, write_json, Dataset};
use crate::error::{CliError, Result};
use crate::history::{read_history, write_history};

const STREAM_DATASET: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_RB: u64 = 3;
const STREAM_EVAL: u64 = 4;

/// Independent random streams derived from the run seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvalMode {
    /// A fixed set of random circuits at the configured depth.
    Fixed,
    /// Random Clifford circuits across the configured depth grid.
    Sweep,
    Qft,
    Grover,
}

impl EvalMode {
    fn name(self) -> &'static str {
        match self {
            EvalMode::Fixed => "fixed",
            EvalMode::Sweep => "sweep",
            EvalMode::Qft => "qft",
            EvalMode::Grover => "grover",
        }
    }
}

pub fn dataset_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output(&cfg.experiment, "dataset", "json")
}

pub fn checkpoint_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output(&cfg.experiment, "learned", "ckpt.json")
}

pub fn resume_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output(&cfg.experiment, "resume", "ckpt.json")
}

pub fn history_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output(&cfg.experiment, "history", "csv")
}

pub fn gen_dataset(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let noise = cfg.noise.resolve()?;
    let kind = cfg.dataset.kind.unwrap_or(CircuitKind::Clifford);
    let (size, depth) = (cfg.dataset.size.unwrap_or(100), cfg.dataset.depth.unwrap_or(10));
    info!("generating {size} {kind:?} circuits on {} qubits under {:?}", cfg.n_qubits, noise.name);
    let ds = Dataset::generate(cfg.n_qubits, kind, size, depth, &noise, cfg.seed, &mut stream(cfg.seed, STREAM_DATASET))?;
    let path = dataset_path(cfg);
    ds.write(&path)?;
    Ok(vec![path])
}

/// Benchmarks `noise` with the configured grid.
pub fn characterize(cfg: &ExperimentConfig, noise: &NoiseModelSpec) -> Result<RbReport> {
    Ok(rb_characterize(cfg.n_qubits, noise, &cfg.rb_config(), &mut stream(cfg.seed, STREAM_RB))?)
}

fn rb_decay(cfg: &ExperimentConfig, noise: &NoiseModelSpec) -> Result<f64> {
    if let Some(p) = cfg.rb.decay {
        return Ok(p);
    }
    let report = characterize(cfg, noise)?;
    info!("benchmarked decay p = {:.6}", report.fit.p);
    Ok(report.fit.p)
}

pub fn rb(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let noise = cfg.noise.resolve()?;
    let report = characterize(cfg, &noise)?;
    let json = cfg.output(&cfg.experiment, "rb", "json");
    write_json(&json, &report)?;
    let csv_path = cfg.output(&cfg.experiment, "rb", "csv");
    let data = |e: csv::Error| CliError::Data(e.to_string());
    let mut w = csv::Writer::from_path(&csv_path).map_err(data)?;
    for p in &report.points {
        w.serialize(p).map_err(data)?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    println!("decay p = {:.6}  (1 - p = {:.3e}){}", report.fit.p, 1.0 - report.fit.p, if report.fit.unidentifiable { "  [flat data]" } else { "" });
    Ok(vec![json, csv_path])
}

pub fn train_cmd(cfg: &ExperimentConfig, dataset: Option<&Path>, resume: Option<&Path>) -> Result<Vec<PathBuf>> {
    let ds_path = dataset.map(Path::to_path_buf).unwrap_or_else(|| dataset_path(cfg));
    let ds = Dataset::read(&ds_path)?;
    if ds.metadata.n_qubits != cfg.n_qubits {
        return Err(CliError::Data(format!("dataset has {} qubits, config {}", ds.metadata.n_qubits, cfg.n_qubits)));
    }
    let samples = ds.samples();
    let (tr, te) = split_indices(samples.len(), cfg.dataset.train_fraction, &mut stream(cfg.seed, STREAM_SPLIT));
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<TrainingSample>>();
    let (train_set, test_set) = (pick(&tr), pick(&te));

    let (spec, decay, state) = match resume {
        Some(path) => {
            let ck = Checkpoint::read(path)?;
            let Some(adam) = ck.optimizer else {
                return Err(CliError::Data(format!("{} holds no optimizer state", path.display())));
            };
            let expected = cfg.policy_spec(cfg.policy.p_max.unwrap_or(ck.weights.spec().p_max))?;
            if &expected != ck.weights.spec() {
                return Err(CliError::Config("checkpoint was trained with a different policy spec".into()));
            }
            info!("resuming from episode {}", ck.episodes);
            (expected, ck.rb_decay, Some(TrainState { weights: ck.weights, adam, episodes: ck.episodes }))
        }
        None => {
            let decay = rb_decay(cfg, &ds.metadata.noise)?;
            let p_max = match cfg.policy.p_max {
                Some(p) => p,
                None if decay < 1.0 => 2.0 * (1.0 - decay),
                None => return Err(CliError::Config("benchmarking found no decay; set policy.p_max".into())),
            };
            (cfg.policy_spec(p_max)?, decay, None)
        }
    };
    let start = state.as_ref().map_or(0, |s| s.episodes);
    info!(
        "training on {} circuits ({} held out), {} parameters, p_max {:.4}, {} episodes",
        train_set.len(),
        test_set.len(),
        spec.n_params(),
        spec.p_max,
        cfg.ppo.total_episodes
    );
    let mut on_eval = |r: &HistoryRow| {
        info!("episode {:>8}  train F {:.4}  test F {:.4} ± {:.4}  test TD {:.4}", r.episode, r.train_fid, r.test_fid, r.test_fid_std, r.test_td)
    };
    let out = train(&train_set, &test_set, &spec, &cfg.ppo, state, &mut on_eval, &mut |_, _| {})?;

    let hist = history_path(cfg);
    let mut rows = if resume.is_some() && hist.exists() { read_history(&hist)? } else { vec![] };
    rows.retain(|r| r.episode < start);
    rows.extend(out.history.iter().copied());
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    write_history(&hist, &rows)?;

    let noise = ds.metadata.noise.name.clone();
    let best_path = checkpoint_path(cfg);
    let previous = if resume.is_some() && best_path.exists() { Some(Checkpoint::read(&best_path)?) } else { None };
    if previous.as_ref().is_none_or(|p| p.test_fidelity < out.best_test_fidelity) {
        Checkpoint {
            weights: out.best.clone(),
            config_hash: cfg.hash(),
            episodes: out.best_episode,
            seed: cfg.seed,
            noise: noise.clone(),
            rb_decay: decay,
            test_fidelity: out.best_test_fidelity,
            optimizer: None,
        }
        .write(&best_path)?;
    }
    let last = out.history.last().map_or(f64::NAN, |r| r.test_fid);
    let resume_out = resume_path(cfg);
    Checkpoint {
        weights: out.last.weights,
        config_hash: cfg.hash(),
        episodes: out.last.episodes,
        seed: cfg.seed,
        noise,
        rb_decay: decay,
        test_fidelity: last,
        optimizer: Some(out.last.adam),
    }
    .write(&resume_out)?;
    println!("best test fidelity {:.4} at episode {}", out.best_test_fidelity, out.best_episode);
    Ok(vec![best_path, resume_out, hist])
}

fn load_for(cfg: &ExperimentConfig, checkpoint: Option<&Path>) -> Result<Checkpoint> {
    let path = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| checkpoint_path(cfg));
    let ck = Checkpoint::read(&path)?;
    if ck.weights.spec().n_qubits != cfg.n_qubits {
        return Err(CliError::Data(format!("checkpoint is for {} qubits, config {}", ck.weights.spec().n_qubits, cfg.n_qubits)));
    }
    Ok(ck)
}

fn predictors(ck: &Checkpoint, decay: f64) -> Result<Vec<Predictor>> {
    Ok(vec![Predictor::Learned(ck.weights.clone()), Predictor::Rb(RbModel::new(decay)?), Predictor::None, Predictor::Mms])
}

pub fn eval(cfg: &ExperimentConfig, mode: EvalMode, checkpoint: Option<&Path>) -> Result<Vec<PathBuf>> {
    let noise = cfg.noise.resolve()?;
    let ck = load_for(cfg, checkpoint)?;
    let decay = match cfg.rb.decay {
        Some(p) => p,
        None if ck.noise == noise.name => ck.rb_decay,
        None => rb_decay(cfg, &noise)?,
    };
    let models = predictors(&ck, decay)?;
    let stem = format!("{}-{}", cfg.experiment, mode.name());
    let mut rng = stream(cfg.seed, STREAM_EVAL);
    match mode {
        EvalMode::Fixed | EvalMode::Sweep => {
            let report = if mode == EvalMode::Fixed {
                let n = cfg.eval.circuits.unwrap_or(100);
                let circuits =
                    (0..n).map(|i| draw_circuit(CircuitKind::Random, cfg.n_qubits, cfg.eval.depth, i, &mut rng)).collect::<noisim::Result<Vec<_>>>()?;
                let targets: Vec<DensityMatrix> =
                    circuits.par_iter().map(|c| simulate(&apply_ground_truth(c, &noise)?)).collect::<noisim::Result<_>>()?;
                evaluate_models(&circuits, &targets, &models)?
            } else {
                depth_sweep(cfg.n_qubits, &cfg.eval.sweep_depths, cfg.eval.circuits_per_depth, &noise, &models, &mut rng)?
            };
            write_eval(cfg, &stem, &report)
        }
        EvalMode::Qft | EvalMode::Grover => {
            if cfg.n_qubits != 3 {
                return Err(CliError::Config(format!("the {} case study needs a 3-qubit configuration", mode.name())));
            }
            let alg = if mode == EvalMode::Qft { Algorithm::Qft } else { Algorithm::Grover };
            let study = algorithm_case_study(alg, &noise, &models)?;
            write_case(cfg, &stem, &study)
        }
    }
}

fn write_eval(cfg: &ExperimentConfig, stem: &str, report: &EvalReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let mut written = Vec::new();
    for m in report.models() {
        let path = cfg.output(stem, &m, "csv");
        export_report(&report.for_model(&m), &path, ReportFormat::Csv)?;
        written.push(path);
    }
    let summary = cfg.output(stem, "summary", "json");
    export_report(report, &summary, ReportFormat::Json)?;
    written.push(summary);
    println!("{:<8} {:>5} {:>18} {:>18}", "model", "depth", "fidelity", "trace distance");
    for a in &report.aggregates {
        println!(
            "{:<8} {:>5} {:>9.4} ± {:<6.4} {:>9.4} ± {:<6.4}",
            a.model, a.depth, a.fidelity_mean, a.fidelity_std, a.trace_distance_mean, a.trace_distance_std
        );
    }
    Ok(written)
}

#[derive(Serialize, Deserialize)]
struct TableRow<'a> {
    model: &'a str,
    fidelity: f64,
    trace_distance: f64,
}

#[derive(Serialize, Deserialize)]
struct ProbabilityRow<'a> {
    model: &'a str,
    outcome: String,
    probability: f64,
}

#[derive(Serialize, Deserialize)]
struct HeatmapRow<'a> {
    model: &'a str,
    row: usize,
    col: usize,
    abs_error: f64,
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let data = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(data)?;
    for r in rows {
        w.serialize(r).map_err(data)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_case(cfg: &ExperimentConfig, stem: &str, s: &CaseStudy) -> Result<Vec<PathBuf>> {
    let json = cfg.output(stem, "case", "json");
    write_json(&json, s)?;
    let table = cfg.output(stem, "table", "csv");
    write_rows(&table, s.models.iter().map(|m| TableRow { model: &m.model, fidelity: m.fidelity, trace_distance: m.trace_distance }))?;

    let n = 3;
    let label = |i: usize| format!("{i:0n$b}");
    let probs = cfg.output(stem, "probabilities", "csv");
    let truth = std::iter::once(("ground_truth", &s.true_probabilities));
    write_rows(
        &probs,
        truth.chain(s.models.iter().map(|m| (m.model.as_str(), &m.probabilities))).flat_map(|(model, p)| {
            p.iter().enumerate().map(move |(i, &probability)| ProbabilityRow { model, outcome: label(i), probability })
        }),
    )?;
    let heat = cfg.output(stem, "heatmap", "csv");
    let d = 1 << n;
    write_rows(
        &heat,
        s.models.iter().flat_map(|m| {
            m.abs_error.iter().enumerate().map(move |(k, &abs_error)| HeatmapRow { model: &m.model, row: k / d, col: k % d, abs_error })
        }),
    )?;

    println!("{} under {} ({} gates, {} CZ, {} moments)", s.circuit, s.noise, s.gates, s.cz_gates, s.moments);
    for m in &s.models {
        println!("{:<8} fidelity {:.4}  trace distance {:.4}", m.model, m.fidelity, m.trace_distance);
    }
    if s.circuit == "grover" {
        let search = marginal(&s.true_probabilities, n, &[0, 1]);
        println!("search-qubit marginal peaks at |{:02b}> (p = {:.4})", argmax(&search), search[argmax(&search)]);
    }
    Ok(vec![json, table, probs, heat])
}

#[derive(Serialize, Deserialize)]
struct Applied {
    circuit: Circuit,
    density_matrix: DensityMatrix,
}

pub fn apply(cfg: &ExperimentConfig, checkpoint: Option<&Path>, circuit: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(circuit).map_err(|e| CliError::io(circuit, e))?;
    let c: Circuit = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", circuit.display())))?;
    let path = checkpoint.map(Path::to_path_buf).unwrap_or_else(|| checkpoint_path(cfg));
    let ck = Checkpoint::read(&path)?;
    if ck.weights.spec().n_qubits != c.n_qubits() {
        return Err(CliError::Data(format!("checkpoint is for {} qubits, circuit has {}", ck.weights.spec().n_qubits, c.n_qubits())));
    }
    let noisy = predict_noise(&c, &ck.weights)?;
    let density_matrix = simulate(&noisy)?;
    let stem = circuit.file_stem().and_then(|s| s.to_str()).unwrap_or("circuit");
    let out = cfg.output(stem, "learned", "json");
    write_json(&out, &Applied { circuit: noisy, density_matrix })?;
    Ok(vec![out])
}
