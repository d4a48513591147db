use std::collections::BTreeMap;

use apimine_core::ApiSequence;
use apimine_model::{ModelError, TrainSet, Vocab};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Counted, EvalError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    /// Share of occurrences used for training and validation together.
    pub train_frac: f64,
    /// Share of that portion held out for validation.
    pub val_frac_of_train: f64,
    /// Keys with fewer occurrences are not split.
    pub min_sequences: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            train_frac: 0.8,
            val_frac_of_train: 0.125,
            min_sequences: 25,
        }
    }
}

/// One key's occurrences divided three ways; each part lists distinct
/// sequences in sorted order with their counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Counted,
    pub validation: Counted,
    pub test: Counted,
    pub seed: u64,
}

fn regroup(occurrences: &[&ApiSequence]) -> Counted {
    let mut counts: BTreeMap<&ApiSequence, u64> = BTreeMap::new();
    for s in occurrences {
        *counts.entry(s).or_default() += 1;
    }
    counts.into_iter().map(|(s, c)| (s.calls().to_vec(), c)).collect()
}

/// Shuffles individual occurrences with a seeded generator, so a sequence
/// seen several times can land in more than one part.
pub fn split_corpus(
    entry: &BTreeMap<ApiSequence, u64>,
    opts: &SplitOptions,
    seed: u64,
) -> Result<Split, EvalError> {
    let fracs_ok = (0.0..=1.0).contains(&opts.train_frac) && (0.0..=1.0).contains(&opts.val_frac_of_train);
    if !fracs_ok {
        return Err(EvalError::BadFractions(format!(
            "train {} / validation {}",
            opts.train_frac, opts.val_frac_of_train
        )));
    }
    let total: u64 = entry.values().sum();
    if total < opts.min_sequences {
        return Err(EvalError::BelowThreshold {
            total,
            min: opts.min_sequences,
        });
    }
    let mut occ: Vec<&ApiSequence> = entry
        .iter()
        .flat_map(|(s, &c)| std::iter::repeat(s).take(c as usize))
        .collect();
    occ.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_fit = (total as f64 * opts.train_frac).round() as usize;
    let n_val = (n_fit as f64 * opts.val_frac_of_train).round() as usize;
    let n_train = n_fit - n_val;
    Ok(Split {
        train: regroup(&occ[..n_train]),
        validation: regroup(&occ[n_train..n_fit]),
        test: regroup(&occ[n_fit..]),
        seed,
    })
}

fn occurrences(part: &Counted) -> u64 {
    part.iter().map(|(_, c)| c).sum()
}

impl Split {
    /// Calls seen in training or validation.
    pub fn vocab(&self) -> Vocab {
        Vocab::new(
            self.train
                .iter()
                .chain(&self.validation)
                .flat_map(|(s, _)| s.iter().cloned()),
        )
    }

    /// Training and validation sets over the shared vocabulary.
    pub fn train_sets(&self) -> Result<(TrainSet, TrainSet), ModelError> {
        let vocab = self.vocab();
        Ok((
            TrainSet::from_named(vocab.clone(), self.train.iter().cloned())?,
            TrainSet::from_named(vocab, self.validation.iter().cloned())?,
        ))
    }

    /// Training and validation together, for models with no use for a
    /// held-out set.
    pub fn fit_set(&self) -> Result<TrainSet, ModelError> {
        let mut all: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        for (s, c) in self.train.iter().chain(&self.validation) {
            *all.entry(s.clone()).or_default() += c;
        }
        TrainSet::from_named(self.vocab(), all)
    }

    pub fn sizes(&self) -> (u64, u64, u64) {
        (occurrences(&self.train), occurrences(&self.validation), occurrences(&self.test))
    }
}
