use std::fmt::Write as _;

use apimine_core::ObjectKey;
use rand::Rng;

use crate::{ModelError, Real, Vocab};

/// Provenance recorded by training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainMeta {
    pub seed: u64,
    pub iters: usize,
    pub loglik: f64,
}

/// Hidden Markov usage model over a method vocabulary: initial distribution
/// `pi`, row-stochastic K x K transitions and K x M emissions.
#[derive(Debug, Clone, PartialEq)]
pub struct HapiModel<F> {
    key: Option<ObjectKey>,
    vocab: Vocab,
    pi: Vec<F>,
    trans: Vec<Vec<F>>,
    emit: Vec<Vec<F>>,
    pub train_meta: Option<TrainMeta>,
}

fn check_distribution<F: Real>(what: &str, row: &[F]) -> Result<(), ModelError> {
    if row.iter().any(|&p| !(p >= F::zero()) || !p.is_finite()) {
        return Err(ModelError::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let sum: F = row.iter().copied().sum();
    if (sum - F::one()).abs() > F::stochastic_tol() {
        return Err(ModelError::InvalidModel(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl<F: Real> HapiModel<F> {
    pub fn new(
        vocab: Vocab,
        pi: Vec<F>,
        trans: Vec<Vec<F>>,
        emit: Vec<Vec<F>>,
    ) -> Result<Self, ModelError> {
        let k = pi.len();
        if k == 0 {
            return Err(ModelError::InvalidModel("no hidden states".into()));
        }
        if vocab.is_empty() {
            return Err(ModelError::EmptyVocabulary);
        }
        if trans.len() != k || trans.iter().any(|r| r.len() != k) {
            return Err(ModelError::InvalidModel("transition matrix is not K x K".into()));
        }
        if emit.len() != k || emit.iter().any(|r| r.len() != vocab.len()) {
            return Err(ModelError::InvalidModel("emission matrix is not K x M".into()));
        }
        check_distribution("pi", &pi)?;
        for (i, row) in trans.iter().enumerate() {
            check_distribution(&format!("transition row {i}"), row)?;
        }
        for (i, row) in emit.iter().enumerate() {
            check_distribution(&format!("emission row {i}"), row)?;
        }
        Ok(Self {
            key: None,
            vocab,
            pi,
            trans,
            emit,
            train_meta: None,
        })
    }

    /// Uniform random positives, each distribution normalized.
    pub fn random<R: Rng + ?Sized>(vocab: Vocab, k: usize, rng: &mut R) -> Result<Self, ModelError> {
        if k == 0 {
            return Err(ModelError::InvalidModel("no hidden states".into()));
        }
        let m = vocab.len();
        let mut row = |n: usize| -> Vec<F> {
            // gen() is in [0, 1); flip it so no entry is exactly zero.
            let raw: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| F::of(x / total)).collect()
        };
        let pi = row(k);
        let trans = (0..k).map(|_| row(k)).collect();
        let emit = (0..k).map(|_| row(m)).collect();
        Self::new(vocab, pi, trans, emit)
    }

    pub fn with_key(mut self, key: ObjectKey) -> Self {
        self.key = Some(key);
        self
    }

    pub fn key(&self) -> Option<&ObjectKey> {
        self.key.as_ref()
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn num_states(&self) -> usize {
        self.pi.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.vocab.len()
    }

    pub fn pi(&self) -> &[F] {
        &self.pi
    }

    pub fn trans(&self) -> &[Vec<F>] {
        &self.trans
    }

    pub fn emit(&self) -> &[Vec<F>] {
        &self.emit
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> F {
        self.trans[i][j]
    }

    #[inline]
    pub fn b(&self, i: usize, m: usize) -> F {
        self.emit[i][m]
    }

    pub(crate) fn check_symbols(&self, seq: &[usize]) -> Result<(), ModelError> {
        match seq.iter().find(|&&s| s >= self.vocab.len()) {
            Some(&s) => Err(ModelError::OutOfVocabulary(format!("symbol #{s}"))),
            None => Ok(()),
        }
    }

    /// Relabels hidden states: new state `i` is old state `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.num_states());
        Self {
            key: self.key.clone(),
            vocab: self.vocab.clone(),
            pi: perm.iter().map(|&p| self.pi[p]).collect(),
            trans: perm
                .iter()
                .map(|&p| perm.iter().map(|&q| self.trans[p][q]).collect())
                .collect(),
            emit: perm.iter().map(|&p| self.emit[p].clone()).collect(),
            train_meta: self.train_meta.clone(),
        }
    }

    pub fn cast<G: Real>(&self) -> HapiModel<G> {
        let conv = |row: &[F]| row.iter().map(|x| G::of(x.as_f64())).collect::<Vec<G>>();
        HapiModel {
            key: self.key.clone(),
            vocab: self.vocab.clone(),
            pi: conv(&self.pi),
            trans: self.trans.iter().map(|r| conv(r)).collect(),
            emit: self.emit.iter().map(|r| conv(r)).collect(),
            train_meta: self.train_meta.clone(),
        }
    }

    /// Draws a length-`len` call sequence: initial state from `pi`, then
    /// alternately emit from the current state and move along `trans`.
    pub fn sample<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        let mut state = draw(&self.pi, rng);
        loop {
            out.push(draw(&self.emit[state], rng));
            if out.len() == len {
                return out;
            }
            state = draw(&self.trans[state], rng);
        }
    }

    /// Graph of the model for display, probabilities rounded to two places;
    /// entries under `threshold` are left out.
    pub fn to_dot(&self, threshold: f64) -> String {
        let name = self
            .key
            .as_ref()
            .map(ToString::to_string)
            .unwrap_or_else(|| "hapi".to_string());
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", name.replace('"', "\\\""));
        let _ = writeln!(out, "  rankdir=LR;");
        let _ = writeln!(out, "  start [shape=point];");
        for i in 0..self.num_states() {
            let calls: Vec<String> = self.emit[i]
                .iter()
                .enumerate()
                .filter(|(_, p)| p.as_f64() >= threshold)
                .map(|(m, p)| format!("{} {:.2}", self.vocab.symbol(m), p.as_f64()))
                .collect();
            let _ = writeln!(
                out,
                "  s{i} [shape=box, label=\"S{i}\\n{}\"];",
                calls.join("\\n").replace('"', "\\\"")
            );
        }
        for (i, p) in self.pi.iter().enumerate() {
            if p.as_f64() >= threshold {
                let _ = writeln!(out, "  start -> s{i} [label=\"{:.2}\"];", p.as_f64());
            }
        }
        for (i, row) in self.trans.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if p.as_f64() >= threshold {
                    let _ = writeln!(out, "  s{i} -> s{j} [label=\"{:.2}\"];", p.as_f64());
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Index drawn from a categorical distribution.
pub(crate) fn draw<F: Real, R: Rng + ?Sized>(probs: &[F], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let total: f64 = probs.iter().map(|p| p.as_f64()).sum();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.as_f64() / total;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave acc a hair under one; take the last positive entry.
    probs
        .iter()
        .rposition(|p| *p > F::zero())
        .unwrap_or(probs.len() - 1)
}
