//! Ranking candidate calls for a missing position in a call sequence.
//!
//! The query is the observed calls with the hole removed, and `hole` is the
//! 1-based position the candidate would take in the completed sequence;
//! `hole == partial.len() + 1` asks for the next call.

use std::cmp::Ordering;

use apimine_core::ObjectKey;

use crate::fb::forward;
use crate::{HapiModel, ModelError, NgramModel, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    /// Every vocabulary entry, best first. Scores are normalized to sum to one.
    pub ranked: Vec<(String, f64)>,
    pub query_key: Option<ObjectKey>,
    pub hole_position: usize,
}

fn check_hole(hole: usize, len: usize) -> Result<(), ModelError> {
    if hole == 0 || hole > len + 1 {
        return Err(ModelError::BadPosition {
            position: hole,
            len,
        });
    }
    Ok(())
}

/// Score descending, then name ascending.
fn rank(mut scored: Vec<(String, f64)>) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored
}

/// Unnormalized `P(filled sequence)` for every candidate, up to one positive
/// factor shared by all candidates.
pub fn hole_scores<F: Real>(model: &HapiModel<F>, partial: &[usize], hole: usize) -> Result<Vec<F>, ModelError> {
    check_hole(hole, partial.len())?;
    model.check_symbols(partial)?;
    let k = model.num_states();

    // Probability of each state at the hole given the prefix.
    let pred: Vec<F> = if hole == 1 {
        model.pi().to_vec()
    } else {
        let fwd = forward(model, partial, hole - 1)?;
        let last = fwd.alpha.last().expect("non-empty prefix");
        (0..k)
            .map(|i| (0..k).map(|j| last[j] * model.a(j, i)).sum())
            .collect()
    };

    // Likelihood of the suffix from each state at the hole, rescaled per step.
    let suffix = &partial[hole - 1..];
    let mut weight = vec![F::one(); k];
    for &y in suffix.iter().rev() {
        let mut next: Vec<F> = (0..k)
            .map(|i| (0..k).map(|j| model.a(i, j) * model.b(j, y) * weight[j]).sum())
            .collect();
        let norm: F = next.iter().copied().sum();
        if !(norm > F::zero()) {
            return Err(ModelError::ImpossibleSequence);
        }
        next.iter_mut().for_each(|w| *w = *w / norm);
        weight = next;
    }

    Ok((0..model.num_symbols())
        .map(|v| (0..k).map(|i| pred[i] * model.b(i, v) * weight[i]).sum())
        .collect())
}

pub fn next_api_call<F: Real, S: AsRef<str>>(
    model: &HapiModel<F>,
    partial: &[S],
    hole: usize,
) -> Result<Recommendation, ModelError> {
    let encoded = model.vocab().encode(partial)?;
    let scores = hole_scores(model, &encoded, hole)?;
    let total: f64 = scores.iter().map(|s| s.as_f64()).sum();
    if !(total > 0.0) {
        return Err(ModelError::ImpossibleSequence);
    }
    let scored = scores
        .iter()
        .enumerate()
        .map(|(v, s)| (model.vocab().symbol(v).to_string(), s.as_f64() / total))
        .collect();
    Ok(Recommendation {
        ranked: rank(scored),
        query_key: model.key().cloned(),
        hole_position: hole,
    })
}

/// Scores each candidate by the chain-rule probability of the filled sequence.
pub fn next_api_call_ngram<F: Real, S: AsRef<str>>(
    model: &NgramModel<F>,
    partial: &[S],
    hole: usize,
) -> Result<Recommendation, ModelError> {
    let encoded = model.vocab().encode(partial)?;
    check_hole(hole, encoded.len())?;
    let mut filled = encoded.clone();
    filled.insert(hole - 1, 0);
    let mut logs = Vec::with_capacity(model.vocab().len());
    for v in 0..model.vocab().len() {
        filled[hole - 1] = v;
        logs.push(model.seq_logprob(&filled)?.as_f64());
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let scored = weights
        .iter()
        .enumerate()
        .map(|(v, w)| (model.vocab().symbol(v).to_string(), w / total))
        .collect();
    Ok(Recommendation {
        ranked: rank(scored),
        query_key: None,
        hole_position: hole,
    })
}

/// The first `min(k, M)` candidates.
pub fn top_k(rec: &Recommendation, k: usize) -> Vec<String> {
    rec.ranked.iter().take(k).map(|(m, _)| m.clone()).collect()
}
