//! Top-k accuracy for the next-call and fill-the-hole tasks.

use std::fmt;

use apimine_model::{next_api_call, next_api_call_ngram, HapiModel, ModelError, NgramModel, Real, Recommendation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Task {
    NextCall,
    FillHole,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::NextCall => "next_call",
            Task::FillHole => "fill_hole",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Hapi,
    Ngram,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Hapi => "hapi",
            ModelKind::Ngram => "ngram",
        })
    }
}

/// A model that can rank candidates for a hole.
pub trait Scorer: Sync {
    fn kind(&self) -> ModelKind;
    fn rank(&self, partial: &[String], hole: usize) -> Result<Recommendation, ModelError>;
}

impl<F: Real> Scorer for HapiModel<F> {
    fn kind(&self) -> ModelKind {
        ModelKind::Hapi
    }

    fn rank(&self, partial: &[String], hole: usize) -> Result<Recommendation, ModelError> {
        next_api_call(self, partial, hole)
    }
}

impl<F: Real> Scorer for NgramModel<F> {
    fn kind(&self) -> ModelKind {
        ModelKind::Ngram
    }

    fn rank(&self, partial: &[String], hole: usize) -> Result<Recommendation, ModelError> {
        next_api_call_ngram(self, partial, hole)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub task: Task,
    pub model_kind: ModelKind,
    pub k_values: Vec<usize>,
    /// Hits per entry of `k_values`.
    pub hits: Vec<u64>,
    pub total: u64,
    /// Queries left out because they involve calls the model never saw.
    pub skipped: u64,
}

impl EvalReport {
    pub fn new(task: Task, model_kind: ModelKind, k_values: &[usize]) -> Self {
        Self {
            task,
            model_kind,
            k_values: k_values.to_vec(),
            hits: vec![0; k_values.len()],
            total: 0,
            skipped: 0,
        }
    }

    /// `hits / total` per k; zero when nothing was evaluated.
    pub fn accuracy(&self) -> Vec<f64> {
        self.hits
            .iter()
            .map(|&h| if self.total == 0 { 0.0 } else { h as f64 / self.total as f64 })
            .collect()
    }

    pub fn accuracy_at(&self, k: usize) -> Option<f64> {
        let i = self.k_values.iter().position(|&x| x == k)?;
        Some(self.accuracy()[i])
    }

    /// Pools another report's counts into this one.
    pub fn absorb(&mut self, other: &EvalReport) {
        assert_eq!(self.k_values, other.k_values, "reports over different k");
        for (h, o) in self.hits.iter_mut().zip(&other.hits) {
            *h += o;
        }
        self.total += other.total;
        self.skipped += other.skipped;
    }

    fn record(&mut self, rec: Result<Recommendation, ModelError>, truth: &str, weight: u64) {
        let Ok(rec) = rec else {
            self.skipped += weight;
            return;
        };
        let Some(rank) = rec.ranked.iter().position(|(m, _)| m == truth) else {
            // The true call is outside the model's vocabulary.
            self.skipped += weight;
            return;
        };
        self.total += weight;
        for (h, &k) in self.hits.iter_mut().zip(&self.k_values) {
            if rank < k {
                *h += weight;
            }
        }
    }
}

/// Predicts every call from position 2 on from the calls before it. Each
/// test sequence counts once per occurrence.
pub fn eval_task1(model: &dyn Scorer, test: &[(Vec<String>, u64)], k_values: &[usize]) -> EvalReport {
    let mut report = EvalReport::new(Task::NextCall, model.kind(), k_values);
    for (seq, count) in test {
        for i in 2..=seq.len() {
            let prefix = &seq[..i - 1];
            report.record(model.rank(prefix, i), &seq[i - 1], *count);
        }
    }
    report
}

/// One uniformly drawn 1-based hole per occurrence, in test order.
pub fn hole_positions(test: &[(Vec<String>, u64)], seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    test.iter()
        .map(|(seq, count)| (0..*count).map(|_| rng.gen_range(1..=seq.len())).collect())
        .collect()
}

/// Removes one call per occurrence at a seeded random position and asks the
/// model to fill it back in.
pub fn eval_task2(model: &dyn Scorer, test: &[(Vec<String>, u64)], k_values: &[usize], seed: u64) -> EvalReport {
    let mut report = EvalReport::new(Task::FillHole, model.kind(), k_values);
    for ((seq, _), holes) in test.iter().zip(hole_positions(test, seed)) {
        let mut per_hole = vec![0u64; seq.len() + 1];
        for h in holes {
            per_hole[h] += 1;
        }
        for (hole, &n) in per_hole.iter().enumerate().filter(|(_, &n)| n > 0) {
            let mut partial = seq.clone();
            let truth = partial.remove(hole - 1);
            report.record(model.rank(&partial, hole), &truth, n);
        }
    }
    report
}
