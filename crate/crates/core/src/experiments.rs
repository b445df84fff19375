//! Training orchestration: single runs, multi-seed replication, cap sweeps,
//! the 2^4 factorial grid, and the results ledger.
//!
//! Every run is a pure function of its `RunConfig` (the seed drives weight
//! init and per-epoch shuffling through one ChaCha stream). Batch gradients
//! are accumulated over fixed-size sub-chunks that are merged in chunk
//! order, so results do not depend on how many worker threads execute them.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::{encode, select, Approach};
use crate::dataset::{apply_cap, class_weights, LabelView, RecordStore, Splits};
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::metrics::{evaluate, EvalReport};
use crate::models::{
    build_binary_with, build_multiclass_with, image_tensor, Checkpoint, CheckpointMeta, ModelSpec,
    Task,
};
use crate::nn::{
    binary_cross_entropy, weighted_cross_entropy, Act, Model, Optimizer, OptimizerKind, Tensor,
};
use crate::stats::{paired_t, welch_t, StatSummary, WelchResult};

/// Gradient sub-chunk size; fixed so parallel accumulation order is stable.
const GRAD_CHUNK: usize = 8;

/// One training run's full configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Task,
    pub approach: Approach,
    /// Per-class cap applied to train and validation.
    pub cap: usize,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    /// None uses the task default (multiclass sigmoid, binary tanh).
    pub activation: Option<Act>,
    pub batchnorm: bool,
}

impl RunConfig {
    /// Phase-1 defaults: multiclass SGD(momentum 0.9, lr 0.01, 100 epochs,
    /// batch 32); binary Adam(lr 0.01, 20 epochs, batch 32).
    pub fn defaults(task: Task, approach: Approach, cap: usize, seed: u64) -> Self {
        match task {
            Task::Multiclass => RunConfig {
                task,
                approach,
                cap,
                seed,
                epochs: 100,
                batch_size: 32,
                lr: 0.01,
                optimizer: OptimizerKind::Sgd,
                activation: None,
                batchnorm: false,
            },
            Task::Binary => RunConfig {
                task,
                approach,
                cap,
                seed,
                epochs: 20,
                batch_size: 32,
                lr: 0.01,
                optimizer: OptimizerKind::Adam,
                activation: None,
                batchnorm: false,
            },
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut c = self.clone();
        c.seed = seed;
        c
    }

    pub fn activation(&self) -> Act {
        self.activation.unwrap_or(match self.task {
            Task::Multiclass => Act::Sigmoid,
            Task::Binary => Act::Tanh,
        })
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        match self.task {
            Task::Multiclass => {
                build_multiclass_with(self.approach, self.activation(), self.batchnorm)
            }
            Task::Binary => build_binary_with(self.approach, self.activation(), self.batchnorm),
        }
    }

    /// Stable identity of the run for the results ledger.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex_string(&hasher.finalize())
    }

    fn make_optimizer(&self) -> Optimizer<f32> {
        match self.optimizer {
            OptimizerKind::Sgd => Optimizer::sgd(self.lr, 0.9),
            OptimizerKind::Adam => Optimizer::adam(self.lr),
        }
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// The paper's default seed list: 42 plus 0..=8.
pub fn default_seeds() -> Vec<u64> {
    let mut seeds = vec![42];
    seeds.extend(0..9);
    seeds
}

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

/// Capped, encoded training/validation data for one (task, approach, cap).
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub task: Task,
    pub approach: Approach,
    pub cap: usize,
    /// (image, class index) with the class index already in task space.
    pub train: Vec<(Tensor<f32>, usize)>,
    pub val: Vec<(Tensor<f32>, usize)>,
    /// Per-class loss weights in task space, from the capped training set.
    pub weights: Vec<f32>,
}

fn task_label(task: Task, rec: &crate::dataset::LabeledRecord) -> usize {
    match task {
        Task::Binary => rec.binary_attack as usize,
        Task::Multiclass => rec.multiclass as usize,
    }
}

fn encode_part(
    part: &RecordStore,
    task: Task,
    approach: Approach,
) -> Result<Vec<(Tensor<f32>, usize)>> {
    part.records
        .iter()
        .map(|rec| {
            let img = encode(&select(&rec.byte_vector(), approach), approach)?;
            Ok((image_tensor::<f32>(&img), task_label(task, rec)))
        })
        .collect()
}

/// Cap train and validation identically, compute post-cap class weights,
/// and encode images.
pub fn prepare(task: Task, approach: Approach, cap: usize, splits: &Splits) -> Result<PreparedData> {
    let train_capped = apply_cap(&splits.train, cap);
    let val_capped = apply_cap(&splits.val, cap);
    let view = match task {
        Task::Binary => LabelView::Binary,
        Task::Multiclass => LabelView::Multiclass,
    };
    let weights = class_weights(&train_capped, view)?
        .weights
        .iter()
        .map(|w| *w as f32)
        .collect();
    Ok(PreparedData {
        task,
        approach,
        cap,
        train: encode_part(&train_capped, task, approach)?,
        val: encode_part(&val_capped, task, approach)?,
        weights,
    })
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: u32,
    pub train_loss: f64,
    pub val_loss: f64,
    pub is_best: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochStats>,
    pub best_epoch: u32,
    pub best_val_loss: f64,
    pub wall_secs: f64,
}

fn sample_loss(
    model: &mut Model<f32>,
    task: Task,
    image: &Tensor<f32>,
    label: usize,
    weights: &[f32],
) -> Result<f64> {
    let out = model.forward(image)?;
    let (loss, grad) = match task {
        Task::Multiclass => {
            let (l, g) = weighted_cross_entropy(out.data(), label, weights);
            (l, Tensor::from_vec(out.shape(), g)?)
        }
        Task::Binary => {
            let (l, g) = binary_cross_entropy(out.data()[0], label == 1, weights[label]);
            let mut t = Tensor::zeros(out.shape());
            t.data_mut()[0] = g;
            (l, t)
        }
    };
    model.backward(&grad)?;
    Ok(loss as f64)
}

fn forward_loss(
    model: &mut Model<f32>,
    task: Task,
    image: &Tensor<f32>,
    label: usize,
    weights: &[f32],
) -> Result<f64> {
    let out = model.forward(image)?;
    let loss = match task {
        Task::Multiclass => weighted_cross_entropy(out.data(), label, weights).0,
        Task::Binary => binary_cross_entropy(out.data()[0], label == 1, weights[label]).0,
    };
    Ok(loss as f64)
}

/// Mean weighted loss over a dataset (parallel, order-stable).
fn mean_loss(
    model: &Model<f32>,
    task: Task,
    data: &[(Tensor<f32>, usize)],
    weights: &[f32],
) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let sums: Vec<f64> = data
        .par_chunks(256)
        .map(|chunk| -> Result<f64> {
            let mut m = model.clone();
            let mut s = 0.0;
            for (img, label) in chunk {
                s += forward_loss(&mut m, task, img, *label, weights)?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(sums.iter().sum::<f64>() / data.len() as f64)
}

/// Train one configuration. Training order is reshuffled every epoch from
/// the run's seeded RNG; the checkpoint kept is the epoch with the best
/// capped-validation loss (the initialization counts as epoch 0).
pub fn train(config: &RunConfig, data: &PreparedData) -> Result<TrainOutcome> {
    if config.task != data.task || config.approach != data.approach {
        return Err(Error::config(format!(
            "config ({}, {}) does not match prepared data ({}, {})",
            config.task, config.approach, data.task, data.approach
        )));
    }
    let started = Instant::now();
    let spec = config.model_spec()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model: Model<f32> = spec.instantiate_with(&mut rng);
    let mut optimizer = config.make_optimizer();
    let weights = &data.weights;

    let mut best_val = mean_loss(&model, config.task, &data.val, weights)?;
    let mut best_weights = Checkpoint::from_model(
        &model,
        CheckpointMeta {
            spec: spec.clone(),
            seed: config.seed,
            epoch: 0,
            val_loss: best_val,
        },
    );
    let mut best_epoch = 0u32;
    let mut log = Vec::with_capacity(config.epochs);

    let mut order: Vec<usize> = (0..data.train.len()).collect();
    for epoch in 1..=config.epochs as u32 {
        order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            // Per-sample gradients accumulate in fixed-size sub-chunks which
            // merge in order: bit-stable under any worker count.
            let parts: Vec<(f64, Model<f32>)> = batch
                .par_chunks(GRAD_CHUNK)
                .map(|sub| -> Result<(f64, Model<f32>)> {
                    let mut worker = model.clone();
                    worker.zero_grads();
                    let mut loss_sum = 0.0;
                    for &i in sub {
                        let (img, label) = &data.train[i];
                        loss_sum += sample_loss(&mut worker, config.task, img, *label, weights)?;
                    }
                    Ok((loss_sum, worker))
                })
                .collect::<Result<_>>()?;
            model.zero_grads();
            let mut batch_loss = 0.0;
            for (loss_sum, mut worker) in parts {
                batch_loss += loss_sum;
                model.add_grads_from(&mut worker);
            }
            if !batch_loss.is_finite() {
                return Err(Error::run(format!(
                    "non-finite loss at epoch {epoch} (seed {}, {} {}, cap {})",
                    config.seed, config.task, config.approach, config.cap
                )));
            }
            epoch_loss_sum += batch_loss;
            model.scale_grads(1.0 / batch.len() as f32);
            let mut pairs = model.param_grad_pairs();
            optimizer.step(&mut pairs);
        }
        let train_loss = epoch_loss_sum / data.train.len().max(1) as f64;
        let val_loss = mean_loss(&model, config.task, &data.val, weights)?;
        if !val_loss.is_finite() {
            return Err(Error::run(format!(
                "non-finite validation loss at epoch {epoch} (seed {})",
                config.seed
            )));
        }
        let is_best = val_loss < best_val;
        if is_best {
            best_val = val_loss;
            best_epoch = epoch;
            best_weights = Checkpoint::from_model(
                &model,
                CheckpointMeta {
                    spec: spec.clone(),
                    seed: config.seed,
                    epoch,
                    val_loss,
                },
            );
        }
        log.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
            is_best,
        });
    }

    Ok(TrainOutcome {
        checkpoint: best_weights,
        log,
        best_epoch,
        best_val_loss: best_val,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------------------
// Results ledger
// ---------------------------------------------------------------------------

/// One completed run, as stored in the JSON-lines ledger.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub config_hash: String,
    pub config: RunConfig,
    pub accuracy: f64,
    pub per_class_recall: Vec<Option<f64>>,
    pub best_epoch: u32,
    pub wall_secs: f64,
}

/// Append-only JSON-lines store keyed by config hash; completed runs are
/// never recomputed.
#[derive(Debug)]
pub struct Ledger {
    path: Option<PathBuf>,
    entries: HashMap<String, LedgerEntry>,
}

impl Ledger {
    /// In-memory ledger (no persistence).
    pub fn ephemeral() -> Self {
        Ledger {
            path: None,
            entries: HashMap::new(),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(e, &path))?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LedgerEntry = serde_json::from_str(line)
                    .map_err(|e| Error::format(format!("ledger line {}: {e}", i + 1)))?;
                entries.insert(entry.config_hash.clone(), entry);
            }
        }
        Ok(Ledger {
            path: Some(path),
            entries,
        })
    }

    pub fn get(&self, hash: &str) -> Option<&LedgerEntry> {
        self.entries.get(hash)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn record(&mut self, entry: LedgerEntry) -> Result<()> {
        if let Some(path) = &self.path {
            let mut file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(e, path))?;
            let line = serde_json::to_string(&entry).expect("entry serializes");
            writeln!(file, "{line}").map_err(|e| Error::io(e, path))?;
        }
        self.entries.insert(entry.config_hash.clone(), entry);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Multi-seed runs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy: f64,
    pub per_class_recall: Vec<Option<f64>>,
    pub best_epoch: u32,
    pub wall_secs: f64,
    pub from_ledger: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiSeedResult {
    pub config: RunConfig,
    pub per_seed: Vec<SeedResult>,
    /// Test-set accuracy summary in percent.
    pub summary: StatSummary,
    /// Mean per-class recall across seeds (None when undefined everywhere).
    pub mean_recall: Vec<Option<f64>>,
    /// Seeds whose runs failed, with the error text.
    pub failed: Vec<(u64, String)>,
}

impl MultiSeedResult {
    pub fn mean_recall_of(&self, class: ClassLabel) -> Option<f64> {
        self.mean_recall.get(class as usize).copied().flatten()
    }
}

/// Train and evaluate one run, consulting the ledger first.
pub fn run_once(
    config: &RunConfig,
    data: &PreparedData,
    test: &RecordStore,
    ledger: &mut Ledger,
) -> Result<(SeedResult, Option<Checkpoint>)> {
    let hash = config.config_hash();
    if let Some(e) = ledger.get(&hash) {
        return Ok((
            SeedResult {
                seed: config.seed,
                accuracy: e.accuracy,
                per_class_recall: e.per_class_recall.clone(),
                best_epoch: e.best_epoch,
                wall_secs: e.wall_secs,
                from_ledger: true,
            },
            None,
        ));
    }
    let outcome = train(config, data)?;
    let report = evaluate(&outcome.checkpoint, test)?;
    let recalls: Vec<Option<f64>> = (0..report.matrix.k)
        .map(|c| report.matrix.recall(c))
        .collect();
    ledger.record(LedgerEntry {
        config_hash: hash,
        config: config.clone(),
        accuracy: report.accuracy,
        per_class_recall: recalls.clone(),
        best_epoch: outcome.best_epoch,
        wall_secs: outcome.wall_secs,
    })?;
    Ok((
        SeedResult {
            seed: config.seed,
            accuracy: report.accuracy,
            per_class_recall: recalls,
            best_epoch: outcome.best_epoch,
            wall_secs: outcome.wall_secs,
            from_ledger: false,
        },
        Some(outcome.checkpoint),
    ))
}

/// Replicate a configuration across seeds and summarize test accuracy.
/// A failing seed is recorded and flagged; the summary covers the rest.
pub fn multi_seed(
    base: &RunConfig,
    seeds: &[u64],
    data: &PreparedData,
    test: &RecordStore,
    ledger: &mut Ledger,
) -> Result<MultiSeedResult> {
    if seeds.len() < 2 {
        return Err(Error::config("multi_seed needs at least two seeds"));
    }
    let mut per_seed = Vec::new();
    let mut failed = Vec::new();
    for &seed in seeds {
        let config = base.with_seed(seed);
        match run_once(&config, data, test, ledger) {
            Ok((result, _)) => per_seed.push(result),
            Err(e) => failed.push((seed, e.to_string())),
        }
    }
    if per_seed.is_empty() {
        return Err(Error::run(format!(
            "all {} seed runs failed; first error: {}",
            seeds.len(),
            failed[0].1
        )));
    }
    let accs: Vec<f64> = per_seed.iter().map(|r| r.accuracy * 100.0).collect();
    let summary = StatSummary::from_samples(&accs)?;
    let k = per_seed[0].per_class_recall.len();
    let mean_recall = (0..k)
        .map(|c| {
            let vals: Vec<f64> = per_seed
                .iter()
                .filter_map(|r| r.per_class_recall[c])
                .collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    Ok(MultiSeedResult {
        config: base.clone(),
        per_seed,
        summary,
        mean_recall,
        failed,
    })
}

// ---------------------------------------------------------------------------
// Cap sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub approach: Approach,
    pub cap: usize,
    pub summary: StatSummary,
    pub mean_recall: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub task: Task,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Plot-ready CSV: one row per (approach, cap) with CI band and
    /// per-class recall columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("approach,cap,n,mean_acc,std_acc,ci_lo,ci_hi");
        let names: Vec<&str> = match self.task {
            Task::Multiclass => ClassLabel::ALL.iter().map(|c| c.name()).collect(),
            Task::Binary => vec!["normal", "attack"],
        };
        for n in &names {
            out.push_str(&format!(",recall_{n}"));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4},{:.4}",
                row.approach,
                row.cap,
                row.summary.n,
                row.summary.mean,
                row.summary.std,
                row.summary.ci_lo,
                row.summary.ci_hi
            ));
            for c in 0..names.len() {
                match row.mean_recall.get(c).copied().flatten() {
                    Some(r) => out.push_str(&format!(",{r:.4}")),
                    None => out.push_str(",n/a"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Multi-seed accuracy (and per-class recall) for every (approach, cap).
/// `base` supplies the training hyperparameters; its approach and cap are
/// overridden per cell.
pub fn cap_sweep(
    base: &RunConfig,
    approaches: &[Approach],
    caps: &[usize],
    seeds: &[u64],
    splits: &Splits,
    test: &RecordStore,
    ledger: &mut Ledger,
) -> Result<SweepResult> {
    let mut rows = Vec::new();
    for &approach in approaches {
        for &cap in caps {
            let mut cell = base.clone();
            cell.approach = approach;
            cell.cap = cap;
            let data = prepare(cell.task, approach, cap, splits)?;
            let res = multi_seed(&cell, seeds, &data, test, ledger)?;
            rows.push(SweepRow {
                approach,
                cap,
                summary: res.summary,
                mean_recall: res.mean_recall,
            });
        }
    }
    Ok(SweepResult { task: base.task, rows })
}

// ---------------------------------------------------------------------------
// 2^4 factorial
// ---------------------------------------------------------------------------

/// The four binary factors, each with (low, high) levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorialFactors {
    pub activation: [Act; 2],
    pub batchnorm: [bool; 2],
    pub lr: [f64; 2],
    pub batch_size: [usize; 2],
}

impl Default for FactorialFactors {
    fn default() -> Self {
        FactorialFactors {
            activation: [Act::Sigmoid, Act::Tanh],
            batchnorm: [false, true],
            lr: [0.01, 0.001],
            batch_size: [32, 64],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorialCell {
    pub task: Task,
    pub config: RunConfig,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorialResult {
    pub cells: Vec<FactorialCell>,
    /// Index into `cells` of the best multiclass configuration.
    pub best_multiclass: usize,
    /// Max minus min binary accuracy across the grid, in percentage points.
    pub binary_spread_pp: f64,
}

/// Run the 16-config grid on both tasks (32 single-seed runs) and identify
/// the best multiclass cell.
pub fn factorial(
    approach: Approach,
    factors: &FactorialFactors,
    cap: usize,
    seed: u64,
    splits: &Splits,
    test: &RecordStore,
    ledger: &mut Ledger,
) -> Result<FactorialResult> {
    let mut cells = Vec::with_capacity(32);
    let mut prepared: HashMap<Task, PreparedData> = HashMap::new();
    for task in [Task::Multiclass, Task::Binary] {
        prepared.insert(task, prepare(task, approach, cap, splits)?);
    }
    for task in [Task::Multiclass, Task::Binary] {
        let data = &prepared[&task];
        for &act in &factors.activation {
            for &bn in &factors.batchnorm {
                for &lr in &factors.lr {
                    for &batch in &factors.batch_size {
                        let mut config = RunConfig::defaults(task, approach, cap, seed);
                        config.activation = Some(act);
                        config.batchnorm = bn;
                        config.lr = lr;
                        config.batch_size = batch;
                        let (result, _) = run_once(&config, data, test, ledger)?;
                        cells.push(FactorialCell {
                            task,
                            config,
                            accuracy: result.accuracy,
                        });
                    }
                }
            }
        }
    }
    let best_multiclass = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.task == Task::Multiclass)
        .max_by(|a, b| a.1.accuracy.total_cmp(&b.1.accuracy))
        .map(|(i, _)| i)
        .expect("grid contains multiclass cells");
    let binary_accs: Vec<f64> = cells
        .iter()
        .filter(|c| c.task == Task::Binary)
        .map(|c| c.accuracy * 100.0)
        .collect();
    let binary_spread_pp = binary_accs
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - binary_accs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(FactorialResult {
        cells,
        best_multiclass,
        binary_spread_pp,
    })
}

/// Multi-seed the factorial winner against a baseline with a paired t-test
/// over per-seed accuracies.
pub fn paired_followup(
    winner: &RunConfig,
    baseline: &RunConfig,
    seeds: &[u64],
    splits: &Splits,
    test: &RecordStore,
    ledger: &mut Ledger,
) -> Result<(MultiSeedResult, MultiSeedResult, WelchResult)> {
    let w_data = prepare(winner.task, winner.approach, winner.cap, splits)?;
    let b_data = prepare(baseline.task, baseline.approach, baseline.cap, splits)?;
    let w = multi_seed(winner, seeds, &w_data, test, ledger)?;
    let b = multi_seed(baseline, seeds, &b_data, test, ledger)?;
    let diffs: Vec<f64> = w
        .per_seed
        .iter()
        .zip(&b.per_seed)
        .map(|(x, y)| (x.accuracy - y.accuracy) * 100.0)
        .collect();
    let t = paired_t(&diffs)?;
    Ok((w, b, t))
}

/// Welch comparison of two multi-seed results (accuracy in percent).
pub fn compare(a: &MultiSeedResult, b: &MultiSeedResult) -> Result<WelchResult> {
    welch_t(&a.summary, &b.summary)
}

/// Evaluate a checkpoint over an uncapped test set (re-exported here so the
/// CLI wires one module).
pub fn evaluate_checkpoint(ckpt: &Checkpoint, test: &RecordStore) -> Result<EvalReport> {
    evaluate(ckpt, test)
}
