mod common;

use apimine_model::recommend::hole_scores;
use apimine_model::{forward, next_api_call, sequence_loglik, top_k};
use common::{brute_prob, random_model, random_seq, ranking};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn filled(partial: &[usize], hole: usize, v: usize) -> Vec<usize> {
    let mut s = partial.to_vec();
    s.insert(hole - 1, v);
    s
}

#[test]
fn hole_scores_are_proportional_to_filled_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let (k, m) = (rng.gen_range(1..=4), rng.gen_range(1..=5));
        let model = random_model(k, m, &mut rng);
        let partial = random_seq(m, rng.gen_range(0..=5), &mut rng);
        let hole = rng.gen_range(1..=partial.len() + 1);
        let scores = hole_scores(&model, &partial, hole).unwrap();
        let oracle: Vec<f64> = (0..m).map(|v| brute_prob(&model, &filled(&partial, hole, v))).collect();
        let ratio = oracle[0] / scores[0];
        for v in 0..m {
            assert!((scores[v] * ratio - oracle[v]).abs() <= 1e-10 * oracle[v]);
        }
    }
}

#[test]
fn ranking_agrees_with_sequence_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let (k, m) = (rng.gen_range(1..=4), rng.gen_range(2..=5));
        let model = random_model(k, m, &mut rng);
        let partial = random_seq(m, rng.gen_range(1..=6), &mut rng);
        let hole = rng.gen_range(1..=partial.len() + 1);
        let names = model.vocab().decode(&partial);
        let rec = next_api_call(&model, &names, hole).unwrap();
        let lls: Vec<f64> = (0..m)
            .map(|v| sequence_loglik(&model, &filled(&partial, hole, v)).unwrap())
            .collect();
        let expected = ranking(model.vocab().symbols(), &lls);
        assert_eq!(top_k(&rec, m), expected);
        let scores: Vec<f64> = rec.ranked.iter().map(|r| r.1).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn predict_next_equals_one_step_predictive() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..100 {
        let (k, m) = (rng.gen_range(1..=4), rng.gen_range(2..=5));
        let model = random_model(k, m, &mut rng);
        let partial = random_seq(m, rng.gen_range(1..=6), &mut rng);
        let n = partial.len();
        let fwd = forward(&model, &partial, n).unwrap();
        let last = &fwd.alpha[n - 1];
        let predictive: Vec<f64> = (0..m)
            .map(|v| {
                (0..k)
                    .map(|i| (0..k).map(|j| last[i] * model.a(i, j) * model.b(j, v)).sum::<f64>())
                    .sum()
            })
            .collect();
        let scores = hole_scores(&model, &partial, n + 1).unwrap();
        for v in 0..m {
            assert!((scores[v] - predictive[v]).abs() < 1e-12);
        }
    }
}

#[test]
fn ranking_survives_rescaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let model = random_model(3, 5, &mut rng);
    let scores = hole_scores(&model, &[1, 2, 0], 2).unwrap();
    let names = model.vocab().symbols();
    let scaled: Vec<f64> = scores.iter().map(|s| s * 1e7).collect();
    assert_eq!(ranking(names, &scores), ranking(names, &scaled));
}

#[test]
fn two_state_hole_matches_three_call_enumeration() {
    let model = apimine_model::HapiModel::new(
        apimine_model::Vocab::new(["a", "b"]),
        vec![0.5, 0.5],
        vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
    )
    .unwrap();
    let rec = next_api_call(&model, &["a", "b"], 2).unwrap();
    let pa = brute_prob(&model, &[0, 0, 1]);
    let pb = brute_prob(&model, &[0, 1, 1]);
    let score = |name: &str| rec.ranked.iter().find(|r| r.0 == name).unwrap().1;
    assert!((score("a") - pa / (pa + pb)).abs() < 1e-12);
    assert!((score("b") - pb / (pa + pb)).abs() < 1e-12);
}
