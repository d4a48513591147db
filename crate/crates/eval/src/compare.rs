//! Per-key training and the side-by-side comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use apimine_core::{ApiSequence, Corpus, ObjectKey};
use apimine_model::{
    derive_seed, select_k, train, weighted_loglik, Hapi, ModelError, Ngram, NgramModel, TrainOptions, TrainSet,
};
use rayon::prelude::*;

use crate::tasks::{eval_task1, eval_task2, EvalReport, ModelKind, Scorer, Task};
use crate::{split_corpus, EvalError, Split, SplitOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub split: SplitOptions,
    pub k_range: Vec<usize>,
    pub k_values: Vec<usize>,
    pub seed: u64,
    pub ngram_n: usize,
    pub ngram_delta: f64,
    pub train: TrainOptions,
    /// Average per-key accuracies instead of pooling hits.
    pub macro_average: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            split: SplitOptions::default(),
            k_range: (1..=16).collect(),
            k_values: vec![1, 3, 5, 10],
            seed: 0,
            ngram_n: 3,
            ngram_delta: 0.1,
            train: TrainOptions::default(),
            macro_average: false,
        }
    }
}

impl EvalConfig {
    pub fn split_seed(&self, key: &ObjectKey) -> u64 {
        derive_seed(self.seed, &format!("split:{key}"))
    }

    pub fn init_seed(&self, key: &ObjectKey) -> u64 {
        derive_seed(self.seed, &format!("init:{key}"))
    }

    pub fn hole_seed(&self, key: &ObjectKey) -> u64 {
        derive_seed(self.seed, &format!("holes:{key}"))
    }
}

/// Validation log-likelihood for each K; `None` where training failed.
pub fn sensitivity_curve(
    train_set: &TrainSet,
    validation: &TrainSet,
    k_range: &[usize],
    seed: u64,
    opts: &TrainOptions,
) -> Vec<(usize, Option<f64>)> {
    k_range
        .par_iter()
        .map(|&k| {
            let ll = train::<f64>(train_set, k, seed, opts)
                .and_then(|out| weighted_loglik(&out.model, validation))
                .ok();
            (k, ll)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct KeyModels {
    pub key: ObjectKey,
    pub split: Split,
    pub hapi: Hapi,
    pub ngram: Ngram,
    /// Validation log-likelihood per K tried.
    pub curve: Vec<(usize, Result<f64, ModelError>)>,
}

/// Splits one key's sequences, chooses K on the validation part and fits
/// the n-gram baseline on training plus validation.
pub fn fit_key(key: &ObjectKey, entry: &BTreeMap<ApiSequence, u64>, config: &EvalConfig) -> Result<KeyModels, EvalError> {
    let split = split_corpus(entry, &config.split, config.split_seed(key))?;
    let (tr, va) = split.train_sets()?;
    let sel = select_k::<f64>(&tr, &va, &config.k_range, config.init_seed(key), &config.train)?;
    let ngram = NgramModel::train(&split.fit_set()?, config.ngram_n, config.ngram_delta)?;
    Ok(KeyModels {
        key: key.clone(),
        hapi: sel.model.with_key(key.clone()),
        ngram,
        curve: sel.curve,
        split,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyResult {
    pub key: ObjectKey,
    /// Hidden Markov and n-gram reports for both tasks.
    pub reports: Vec<EvalReport>,
}

/// Both tasks under both models on the same test data and the same holes.
pub fn evaluate_key(
    key: &ObjectKey,
    test: &[(Vec<String>, u64)],
    hapi: &dyn Scorer,
    ngram: &dyn Scorer,
    config: &EvalConfig,
) -> KeyResult {
    let ks = &config.k_values;
    let holes = config.hole_seed(key);
    KeyResult {
        key: key.clone(),
        reports: vec![
            eval_task1(hapi, test, ks),
            eval_task1(ngram, test, ks),
            eval_task2(hapi, test, ks, holes),
            eval_task2(ngram, test, ks, holes),
        ],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub results: Vec<KeyResult>,
    /// Keys with too few occurrences, with their totals.
    pub below_threshold: Vec<(ObjectKey, u64)>,
    pub failed: Vec<(ObjectKey, String)>,
    pub k_values: Vec<usize>,
    pub macro_average: bool,
}

const ROWS: [(ModelKind, Task); 4] = [
    (ModelKind::Hapi, Task::NextCall),
    (ModelKind::Ngram, Task::NextCall),
    (ModelKind::Hapi, Task::FillHole),
    (ModelKind::Ngram, Task::FillHole),
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Comparison {
    fn reports(&self, model: ModelKind, task: Task) -> impl Iterator<Item = &EvalReport> {
        self.results
            .iter()
            .flat_map(|r| &r.reports)
            .filter(move |r| r.model_kind == model && r.task == task)
    }

    /// Counts pooled over keys.
    pub fn pooled(&self, model: ModelKind, task: Task) -> EvalReport {
        let mut out = EvalReport::new(task, model, &self.k_values);
        for r in self.reports(model, task) {
            out.absorb(r);
        }
        out
    }

    /// Accuracy per k: pooled hits, or the mean over evaluated keys when
    /// macro-averaging.
    pub fn overall_accuracy(&self, model: ModelKind, task: Task) -> Vec<f64> {
        if !self.macro_average {
            return self.pooled(model, task).accuracy();
        }
        let per_key: Vec<Vec<f64>> = self
            .reports(model, task)
            .filter(|r| r.total > 0)
            .map(EvalReport::accuracy)
            .collect();
        (0..self.k_values.len())
            .map(|i| {
                if per_key.is_empty() {
                    0.0
                } else {
                    per_key.iter().map(|a| a[i]).sum::<f64>() / per_key.len() as f64
                }
            })
            .collect()
    }

    /// `key,model,task,k,hits,total,accuracy,skipped`, one row per key, model,
    /// task and k, then the overall rows under key `ALL`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,model,task,k,hits,total,accuracy,skipped\n");
        let mut row = |key: &str, r: &EvalReport, acc: &[f64]| {
            for (i, k) in r.k_values.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{k},{},{},{:.6},{}",
                    csv_field(key),
                    r.model_kind,
                    r.task,
                    r.hits[i],
                    r.total,
                    acc[i],
                    r.skipped
                );
            }
        };
        for res in &self.results {
            let key = res.key.to_string();
            for r in &res.reports {
                row(&key, r, &r.accuracy());
            }
        }
        for (model, task) in ROWS {
            row("ALL", &self.pooled(model, task), &self.overall_accuracy(model, task));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let avg = if self.macro_average { "macro" } else { "micro" };
        let _ = writeln!(
            out,
            "{} keys evaluated, {} below threshold, {} failed ({avg} average)",
            self.results.len(),
            self.below_threshold.len(),
            self.failed.len()
        );
        let _ = write!(out, "{:<6} {:<10}", "model", "task");
        for k in &self.k_values {
            let _ = write!(out, " {:>8}", format!("top-{k}"));
        }
        let _ = writeln!(out, " {:>8} {:>8}", "total", "skipped");
        for (model, task) in ROWS {
            let pooled = self.pooled(model, task);
            let _ = write!(out, "{:<6} {:<10}", model.to_string(), task.to_string());
            for a in self.overall_accuracy(model, task) {
                let _ = write!(out, " {:>7.2}%", 100.0 * a);
            }
            let _ = writeln!(out, " {:>8} {:>8}", pooled.total, pooled.skipped);
        }
        for (key, why) in &self.failed {
            let _ = writeln!(out, "failed {key}: {why}");
        }
        out
    }
}

/// Fits and evaluates both models for every key of the corpus.
pub fn compare_models(corpus: &Corpus, config: &EvalConfig) -> Comparison {
    enum Outcome {
        Done(KeyResult),
        Small(ObjectKey, u64),
        Failed(ObjectKey, String),
    }
    let entries: Vec<_> = corpus.entries().iter().collect();
    let outcomes: Vec<Outcome> = entries
        .par_iter()
        .map(|(key, entry)| match fit_key(key, entry, config) {
            Ok(m) => Outcome::Done(evaluate_key(key, &m.split.test, &m.hapi, &m.ngram, config)),
            Err(EvalError::BelowThreshold { total, .. }) => Outcome::Small((*key).clone(), total),
            Err(e) => Outcome::Failed((*key).clone(), e.to_string()),
        })
        .collect();
    let mut cmp = Comparison {
        results: Vec::new(),
        below_threshold: Vec::new(),
        failed: Vec::new(),
        k_values: config.k_values.clone(),
        macro_average: config.macro_average,
    };
    for o in outcomes {
        match o {
            Outcome::Done(r) => cmp.results.push(r),
            Outcome::Small(k, n) => cmp.below_threshold.push((k, n)),
            Outcome::Failed(k, e) => cmp.failed.push((k, e)),
        }
    }
    cmp
}
