//! Confusion matrices, accuracy, per-class recall/precision, and report
//! emission.
//!
//! Evaluation streams the (never capped) test set in fixed-size shards;
//! partial matrices are integer counts, so their merge is associative and
//! the result is independent of sharding and record order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{encode, select, Approach};
use crate::dataset::RecordStore;
use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::models::{image_tensor, Checkpoint, Task};
use crate::nn::Model;

/// K x K counts; rows are true labels, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub class_names: Vec<String>,
    /// Row-major counts, `counts[true * k + pred]`.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        ConfusionMatrix {
            k,
            class_names,
            counts: vec![0; k * k],
        }
    }

    pub fn multiclass() -> Self {
        Self::new(ClassLabel::ALL.iter().map(|c| c.name().to_string()).collect())
    }

    pub fn binary() -> Self {
        Self::new(vec!["normal".to_string(), "attack".to_string()])
    }

    pub fn add(&mut self, true_class: usize, pred_class: usize) {
        self.counts[true_class * self.k + pred_class] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        debug_assert_eq!(self.k, other.k);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += *b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_total(&self, c: usize) -> u64 {
        self.counts[c * self.k..(c + 1) * self.k].iter().sum()
    }

    pub fn col_total(&self, c: usize) -> u64 {
        (0..self.k).map(|r| self.counts[r * self.k + c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let trace: u64 = (0..self.k).map(|i| self.counts[i * self.k + i]).sum();
        trace as f64 / total as f64
    }

    /// Recall of class c; None when the class has no test samples.
    pub fn recall(&self, c: usize) -> Option<f64> {
        let row = self.row_total(c);
        (row > 0).then(|| self.counts[c * self.k + c] as f64 / row as f64)
    }

    /// Precision of class c; None when nothing was predicted as c.
    pub fn precision(&self, c: usize) -> Option<f64> {
        let col = self.col_total(c);
        (col > 0).then(|| self.counts[c * self.k + c] as f64 / col as f64)
    }

    /// Row-normalized matrix; empty rows yield None.
    pub fn normalized_rows(&self) -> Vec<Option<Vec<f64>>> {
        (0..self.k)
            .map(|r| {
                let total = self.row_total(r);
                (total > 0).then(|| {
                    self.counts[r * self.k..(r + 1) * self.k]
                        .iter()
                        .map(|&c| c as f64 / total as f64)
                        .collect()
                })
            })
            .collect()
    }

    /// Binary attack precision TP/(TP+FP) with attack as the positive class.
    /// Only meaningful for the 2x2 binary matrix.
    pub fn attack_precision(&self) -> Option<f64> {
        debug_assert_eq!(self.k, 2);
        self.precision(1)
    }

    /// CSV export: header row of predicted class names, then one row per
    /// true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true_class");
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (r, name) in self.class_names.iter().enumerate() {
            out.push_str(name);
            for c in 0..self.k {
                out.push_str(&format!(",{}", self.counts[r * self.k + c]));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-class slice of an evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub test_count: u64,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
}

/// Full evaluation output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub approach: Approach,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// TP/(TP+FP) for the attack class (binary task only).
    pub attack_precision: Option<f64>,
    pub matrix: ConfusionMatrix,
    pub normalized_rows: Vec<Option<Vec<f64>>>,
    pub evaluated: u64,
}

impl EvalReport {
    pub fn recall_of(&self, class: ClassLabel) -> Option<f64> {
        self.per_class
            .iter()
            .find(|m| m.class == class.name())
            .and_then(|m| m.recall)
    }
}

/// Predict one record's class index under a task.
fn predict(model: &mut Model<f32>, task: Task, approach: Approach, bytes: &[u8; 30]) -> Result<usize> {
    let selected = select(&crate::codec::ByteVector30(*bytes), approach);
    let img = encode(&selected, approach)?;
    let out = model.forward(&image_tensor(&img))?;
    Ok(match task {
        Task::Binary => (out.data()[0] > 0.0) as usize,
        Task::Multiclass => {
            let mut best = 0usize;
            for (i, v) in out.data().iter().enumerate() {
                if *v > out.data()[best] {
                    best = i;
                }
            }
            best
        }
    })
}

const EVAL_SHARD: usize = 512;

/// Evaluate a frozen model over a (never capped) test set.
pub fn evaluate(ckpt: &Checkpoint, test: &RecordStore) -> Result<EvalReport> {
    let task = ckpt.meta.spec.task;
    let approach = ckpt.meta.spec.approach;
    let template = ckpt.to_model()?;
    let shards: Vec<ConfusionMatrix> = test
        .records
        .par_chunks(EVAL_SHARD)
        .map(|chunk| -> Result<ConfusionMatrix> {
            let mut model = template.clone();
            let mut m = match task {
                Task::Binary => ConfusionMatrix::binary(),
                Task::Multiclass => ConfusionMatrix::multiclass(),
            };
            for rec in chunk {
                let true_class = match task {
                    Task::Binary => rec.binary_attack as usize,
                    Task::Multiclass => rec.multiclass as usize,
                };
                let pred = predict(&mut model, task, approach, &rec.bytes)?;
                m.add(true_class, pred);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut matrix = match task {
        Task::Binary => ConfusionMatrix::binary(),
        Task::Multiclass => ConfusionMatrix::multiclass(),
    };
    for shard in &shards {
        matrix.merge(shard);
    }
    Ok(report_from_matrix(task, approach, matrix))
}

fn report_from_matrix(task: Task, approach: Approach, matrix: ConfusionMatrix) -> EvalReport {
    let per_class = matrix
        .class_names
        .iter()
        .enumerate()
        .map(|(c, name)| ClassMetrics {
            class: name.clone(),
            test_count: matrix.row_total(c),
            recall: matrix.recall(c),
            precision: matrix.precision(c),
        })
        .collect();
    EvalReport {
        task,
        approach,
        accuracy: matrix.accuracy(),
        attack_precision: (task == Task::Binary)
            .then(|| matrix.attack_precision())
            .flatten(),
        normalized_rows: matrix.normalized_rows(),
        evaluated: matrix.total(),
        per_class,
        matrix,
    }
}

/// Expected false positives when `normal_recall` is applied to
/// `normal_count` packets: (1 - recall) * count.
pub fn false_alarm_projection(normal_recall: f64, normal_count: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&normal_recall) {
        return Err(Error::config(format!(
            "recall {normal_recall} outside [0,1]"
        )));
    }
    Ok((1.0 - normal_recall) * normal_count as f64)
}
