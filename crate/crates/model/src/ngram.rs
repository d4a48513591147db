//! Additively smoothed n-gram model over call sequences.
//!
//! Each sequence is left-padded with `n - 1` start markers; there is no end
//! marker. `P(v | ctx) = (count(ctx, v) + delta) / (count(ctx) + delta * M)`,
//! and a context never seen in training gives the uniform `1 / M`.

use std::collections::BTreeMap;

use crate::{ModelError, Real, TrainSet, Vocab};

/// `None` is the start marker.
pub type Context = Vec<Option<usize>>;

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel<F> {
    n: usize,
    vocab: Vocab,
    delta: F,
    counts: BTreeMap<Context, BTreeMap<usize, u64>>,
    totals: BTreeMap<Context, u64>,
}

impl<F: Real> NgramModel<F> {
    pub fn train(set: &TrainSet, n: usize, delta: F) -> Result<Self, ModelError> {
        if set.is_empty() {
            return Err(ModelError::EmptyTrainSet);
        }
        if n == 0 {
            return Err(ModelError::InvalidParameter("n-gram order must be at least 1".into()));
        }
        let mut counts: BTreeMap<Context, BTreeMap<usize, u64>> = BTreeMap::new();
        for (seq, c) in set.items() {
            let padded = pad(n, seq);
            for (t, &sym) in seq.iter().enumerate() {
                let ctx = padded[t..t + n - 1].to_vec();
                *counts.entry(ctx).or_default().entry(sym).or_default() += c;
            }
        }
        Self::from_counts(set.vocab().clone(), n, delta, counts)
    }

    pub fn from_counts(
        vocab: Vocab,
        n: usize,
        delta: F,
        counts: BTreeMap<Context, BTreeMap<usize, u64>>,
    ) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("n-gram order must be at least 1".into()));
        }
        if !(delta > F::zero()) || !delta.is_finite() {
            return Err(ModelError::InvalidParameter(format!("smoothing delta {delta} must be positive")));
        }
        if vocab.is_empty() {
            return Err(ModelError::EmptyVocabulary);
        }
        for (ctx, row) in &counts {
            if ctx.len() != n - 1 {
                return Err(ModelError::InvalidModel(format!("context of length {} for order {n}", ctx.len())));
            }
            let bad_sym = row.keys().any(|&s| s >= vocab.len());
            let bad_ctx = ctx.iter().flatten().any(|&s| s >= vocab.len());
            if bad_sym || bad_ctx {
                return Err(ModelError::InvalidModel("count refers to a symbol outside the vocabulary".into()));
            }
            if row.values().any(|&c| c == 0) {
                return Err(ModelError::InvalidModel("zero n-gram count".into()));
            }
        }
        let totals = counts.iter().map(|(k, row)| (k.clone(), row.values().sum())).collect();
        Ok(Self {
            n,
            vocab,
            delta,
            counts,
            totals,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> F {
        self.delta
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn counts(&self) -> &BTreeMap<Context, BTreeMap<usize, u64>> {
        &self.counts
    }

    /// The last `n - 1` positions of the padded history.
    pub fn context_of(&self, history: &[usize]) -> Context {
        let padded = pad(self.n, history);
        padded[padded.len() - (self.n - 1)..].to_vec()
    }

    pub fn count(&self, ctx: &[Option<usize>], sym: usize) -> u64 {
        self.counts.get(ctx).and_then(|r| r.get(&sym)).copied().unwrap_or(0)
    }

    pub fn prob_in_context(&self, ctx: &[Option<usize>], sym: usize) -> Result<F, ModelError> {
        let m = self.vocab.len();
        if sym >= m {
            return Err(ModelError::OutOfVocabulary(format!("symbol #{sym}")));
        }
        let Some(&total) = self.totals.get(ctx) else {
            return Ok(F::one() / F::of(m as f64));
        };
        let num = F::of(self.count(ctx, sym) as f64) + self.delta;
        Ok(num / (F::of(total as f64) + self.delta * F::of(m as f64)))
    }

    /// `P(sym | history)`.
    pub fn prob(&self, history: &[usize], sym: usize) -> Result<F, ModelError> {
        if let Some(&s) = history.iter().find(|&&s| s >= self.vocab.len()) {
            return Err(ModelError::OutOfVocabulary(format!("symbol #{s}")));
        }
        self.prob_in_context(&self.context_of(history), sym)
    }

    /// Chain-rule log probability of the whole sequence.
    pub fn seq_logprob(&self, seq: &[usize]) -> Result<F, ModelError> {
        if seq.is_empty() {
            return Err(ModelError::EmptySequence);
        }
        let mut total = F::zero();
        for t in 0..seq.len() {
            total = total + self.prob(&seq[..t], seq[t])?.ln();
        }
        Ok(total)
    }

    pub fn prob_named<S: AsRef<str>>(&self, history: &[S], call: &str) -> Result<F, ModelError> {
        let h = self.vocab.encode(history)?;
        let sym = self.vocab.encode(&[call])?[0];
        self.prob(&h, sym)
    }

    pub fn seq_logprob_named<S: AsRef<str>>(&self, calls: &[S]) -> Result<F, ModelError> {
        self.seq_logprob(&self.vocab.encode(calls)?)
    }
}

fn pad(n: usize, seq: &[usize]) -> Vec<Option<usize>> {
    let mut out = vec![None; n - 1];
    out.extend(seq.iter().map(|&s| Some(s)));
    out
}
