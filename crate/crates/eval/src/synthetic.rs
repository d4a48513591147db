//! Ground-truth sources for seeded experiments.

use std::ops::RangeInclusive;

use apimine_core::{ApiSequence, Corpus, ObjectKey};
use apimine_model::{Hapi, HapiModel, Vocab};
use rand::Rng;

/// Draws `n` sequences with lengths uniform in `lengths` (at least 2).
pub fn sample_corpus<R: Rng>(model: &Hapi, key: &ObjectKey, n: usize, lengths: RangeInclusive<usize>, rng: &mut R) -> Corpus {
    assert!(*lengths.start() >= ApiSequence::MIN_LEN);
    let mut c = Corpus::new();
    for _ in 0..n {
        let len = rng.gen_range(lengths.clone());
        let calls = model.vocab().decode(&model.sample(len, rng));
        c.add(key.clone(), ApiSequence::new(calls).expect("length checked"), 1);
    }
    c
}

fn normalized(row: Vec<f64>) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    row.into_iter().map(|x| x / s).collect()
}

/// `k` usage patterns over `2k` calls: state `i` mostly emits its own pair of
/// calls, mostly moves to state `i + 1` (wrapping), and starts are uniform.
pub fn cyclic_patterns(class: &str, k: usize) -> Hapi {
    let m = 2 * k;
    let vocab = Vocab::new((0..m).map(|i| format!("{class}.c{i:02}")));
    let pi = vec![1.0 / k as f64; k];
    let trans = (0..k)
        .map(|i| normalized((0..k).map(|j| if j == (i + 1) % k { 0.8 } else { 0.2 / (k - 1).max(1) as f64 }).collect()))
        .collect();
    let emit = (0..k)
        .map(|i| normalized((0..m).map(|v| if v / 2 == i { 0.45 } else { 0.1 / (m - 2) as f64 }).collect()))
        .collect();
    HapiModel::new(vocab, pi, trans, emit).expect("valid by construction")
}

/// Two usage patterns over shared middle calls. Each opens with its own
/// call, repeats the two step calls with its own preference (0.8 for one,
/// 0.2 for the other) and closes with its own call. Only the opener tells
/// the patterns apart, and it soon falls out of a short context window.
/// After a close either pattern may follow.
pub fn two_patterns(class: &str) -> Hapi {
    let names = ["open_a", "open_b", "step1", "step2", "close_a", "close_b"];
    let vocab = Vocab::from_ordered(names.iter().map(|n| format!("{class}.{n}")).collect()).expect("distinct");
    // States: open_a, middle_a, close_a, open_b, middle_b, close_b.
    let pi = vec![0.5, 0.0, 0.0, 0.5, 0.0, 0.0];
    let trans = vec![
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.75, 0.25, 0.0, 0.0, 0.0],
        vec![0.5, 0.0, 0.0, 0.5, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.75, 0.25],
        vec![0.5, 0.0, 0.0, 0.5, 0.0, 0.0],
    ];
    let emit = vec![
        vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.8, 0.2, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.2, 0.8, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    HapiModel::new(vocab, pi, trans, emit).expect("valid by construction")
}
