#![allow(dead_code)]

use apimine_model::{HapiModel, Vocab};
use rand::Rng;

pub fn vocab(m: usize) -> Vocab {
    Vocab::new((0..m).map(|i| format!("p.C.m{i}")))
}

fn stochastic<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn random_model<R: Rng>(k: usize, m: usize, rng: &mut R) -> HapiModel<f64> {
    HapiModel::new(
        vocab(m),
        stochastic(k, rng),
        (0..k).map(|_| stochastic(k, rng)).collect(),
        (0..k).map(|_| stochastic(m, rng)).collect(),
    )
    .unwrap()
}

/// Every hidden path of length `t` over `k` states.
pub fn state_paths(k: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..t {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..k).map(move |s| {
                    let mut q = p.clone();
                    q.push(s);
                    q
                })
            })
            .collect();
    }
    out
}

/// Joint probability of a hidden path and the observations.
pub fn joint(m: &HapiModel<f64>, path: &[usize], seq: &[usize]) -> f64 {
    let mut p = m.pi()[path[0]] * m.b(path[0], seq[0]);
    for t in 1..seq.len() {
        p *= m.a(path[t - 1], path[t]) * m.b(path[t], seq[t]);
    }
    p
}

/// `P(seq)` by summing over all K^T hidden paths.
pub fn brute_prob(m: &HapiModel<f64>, seq: &[usize]) -> f64 {
    state_paths(m.num_states(), seq.len())
        .iter()
        .map(|p| joint(m, p, seq))
        .sum()
}

/// `P(y_{t+1..T} | state i at t)` for every i, by enumerating suffix paths.
pub fn brute_suffix(m: &HapiModel<f64>, seq: &[usize], t: usize) -> Vec<f64> {
    let rest = &seq[t + 1..];
    (0..m.num_states())
        .map(|i| {
            state_paths(m.num_states(), rest.len())
                .iter()
                .map(|p| {
                    let mut prev = i;
                    let mut prob = 1.0;
                    for (s, &y) in p.iter().zip(rest) {
                        prob *= m.a(prev, *s) * m.b(*s, y);
                        prev = *s;
                    }
                    prob
                })
                .sum()
        })
        .collect()
}

pub fn random_seq<R: Rng>(m: usize, len: usize, rng: &mut R) -> Vec<usize> {
    (0..len).map(|_| rng.gen_range(0..m)).collect()
}

/// Ranks candidates by score descending, then by name.
pub fn ranking(names: &[String], scores: &[f64]) -> Vec<String> {
    let mut idx: Vec<usize> = (0..names.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap()
            .then_with(|| names[a].cmp(&names[b]))
    });
    idx.into_iter().map(|i| names[i].clone()).collect()
}
