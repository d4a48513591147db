//! Scaled forward and backward passes.
//!
//! Forward rows are normalized to sum to one; `scale[t]` holds the
//! normalizer so that the unscaled prefix probability is the running product
//! of the scales. Backward rows reuse the same scales, which makes
//! `sum_i alpha[t][i] * beta[t][i] == 1` at every position.

use crate::{HapiModel, ModelError, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTables<F> {
    /// `alpha[t][i]`, normalized per row.
    pub alpha: Vec<Vec<F>>,
    pub scale: Vec<F>,
}

impl<F: Real> ForwardTables<F> {
    /// Log probability of the consumed prefix.
    pub fn loglik(&self) -> F {
        self.scale.iter().map(|c| c.ln()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbTables<F> {
    pub alpha: Vec<Vec<F>>,
    pub beta: Vec<Vec<F>>,
    pub scale: Vec<F>,
    pub loglik: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorStats<F> {
    /// `gamma[t][i]`: probability of state `i` at position `t`.
    pub gamma: Vec<Vec<F>>,
    /// `xi[t][i][j]`: probability of moving `i -> j` between `t` and `t + 1`.
    pub xi: Vec<Vec<Vec<F>>>,
}

fn normalize<F: Real>(row: &mut [F]) -> Result<F, ModelError> {
    let total: F = row.iter().copied().sum();
    if !(total > F::zero()) || !total.is_finite() {
        return Err(ModelError::ImpossibleSequence);
    }
    for x in row.iter_mut() {
        *x = *x / total;
    }
    Ok(total)
}

/// Forward pass over the first `upto` symbols of `seq` (`1 <= upto <= len`).
pub fn forward<F: Real>(
    model: &HapiModel<F>,
    seq: &[usize],
    upto: usize,
) -> Result<ForwardTables<F>, ModelError> {
    if upto == 0 || upto > seq.len() {
        return Err(ModelError::BadPosition {
            position: upto,
            len: seq.len(),
        });
    }
    model.check_symbols(&seq[..upto])?;
    let k = model.num_states();
    let mut alpha = Vec::with_capacity(upto);
    let mut scale = Vec::with_capacity(upto);

    let mut row: Vec<F> = (0..k).map(|i| model.pi()[i] * model.b(i, seq[0])).collect();
    scale.push(normalize(&mut row)?);
    alpha.push(row);
    for &y in &seq[1..upto] {
        let prev = alpha.last().expect("non-empty");
        let mut row: Vec<F> = (0..k)
            .map(|i| {
                let into: F = (0..k).map(|j| prev[j] * model.a(j, i)).sum();
                model.b(i, y) * into
            })
            .collect();
        scale.push(normalize(&mut row)?);
        alpha.push(row);
    }
    Ok(ForwardTables { alpha, scale })
}

/// Backward rows for positions `from..len` (0-based), indexed from `from`.
///
/// With `scale = None` the rows are the plain conditional suffix
/// probabilities. With the forward scales of the same sequence each step is
/// divided by the scale of the following position.
pub fn backward<F: Real>(
    model: &HapiModel<F>,
    seq: &[usize],
    from: usize,
    scale: Option<&[F]>,
) -> Result<Vec<Vec<F>>, ModelError> {
    let len = seq.len();
    if from >= len {
        return Err(ModelError::BadPosition {
            position: from,
            len,
        });
    }
    if let Some(s) = scale {
        if s.len() != len {
            return Err(ModelError::BadPosition {
                position: s.len(),
                len,
            });
        }
    }
    model.check_symbols(&seq[from..])?;
    let k = model.num_states();
    let mut rows = vec![vec![F::one(); k]; len - from];
    for t in (from..len - 1).rev() {
        let y = seq[t + 1];
        let div = scale.map(|s| s[t + 1]).unwrap_or_else(F::one);
        let next = rows[t + 1 - from].clone();
        for (i, out) in rows[t - from].iter_mut().enumerate() {
            let s: F = (0..k).map(|j| model.a(i, j) * model.b(j, y) * next[j]).sum();
            *out = s / div;
        }
    }
    Ok(rows)
}

pub fn forward_backward<F: Real>(
    model: &HapiModel<F>,
    seq: &[usize],
) -> Result<FbTables<F>, ModelError> {
    if seq.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    let fwd = forward(model, seq, seq.len())?;
    let beta = backward(model, seq, 0, Some(&fwd.scale))?;
    let loglik = fwd.loglik();
    Ok(FbTables {
        alpha: fwd.alpha,
        beta,
        scale: fwd.scale,
        loglik,
    })
}

pub fn posteriors<F: Real>(model: &HapiModel<F>, seq: &[usize], fb: &FbTables<F>) -> PosteriorStats<F> {
    let k = model.num_states();
    let len = seq.len();
    let gamma = (0..len)
        .map(|t| {
            let mut row: Vec<F> = (0..k).map(|i| fb.alpha[t][i] * fb.beta[t][i]).collect();
            let total: F = row.iter().copied().sum();
            row.iter_mut().for_each(|g| *g = *g / total);
            row
        })
        .collect();
    let xi = (0..len.saturating_sub(1))
        .map(|t| {
            let norm: F = (0..k).map(|i| fb.alpha[t][i] * fb.beta[t][i]).sum::<F>() * fb.scale[t + 1];
            let y = seq[t + 1];
            (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| fb.alpha[t][i] * model.a(i, j) * model.b(j, y) * fb.beta[t + 1][j] / norm)
                        .collect()
                })
                .collect()
        })
        .collect();
    PosteriorStats { gamma, xi }
}

/// `log P(seq | model)`.
pub fn sequence_loglik<F: Real>(model: &HapiModel<F>, seq: &[usize]) -> Result<F, ModelError> {
    if seq.is_empty() {
        return Err(ModelError::EmptySequence);
    }
    Ok(forward(model, seq, seq.len())?.loglik())
}

/// Same as [`sequence_loglik`] for call names; unknown calls are an error.
pub fn sequence_loglik_named<F: Real, S: AsRef<str>>(
    model: &HapiModel<F>,
    calls: &[S],
) -> Result<F, ModelError> {
    sequence_loglik(model, &model.vocab().encode(calls)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vocab;

    fn unigram() -> HapiModel<f64> {
        HapiModel::new(Vocab::new(["a", "b"]), vec![1.0], vec![vec![1.0]], vec![vec![0.7, 0.3]]).unwrap()
    }

    fn two_state() -> HapiModel<f64> {
        HapiModel::new(
            Vocab::new(["a", "b"]),
            vec![0.5, 0.5],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        )
        .unwrap()
    }

    #[test]
    fn single_state_is_a_product_of_emissions() {
        let m = unigram();
        let fwd = forward(&m, &[0, 0, 1], 3).unwrap();
        let p: f64 = fwd.scale.iter().product();
        assert!((p - 0.147).abs() < 1e-15);
        assert!((sequence_loglik(&m, &[0, 0, 1]).unwrap() - 0.147f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn first_row_is_pi_times_emission() {
        let m = two_state();
        let fwd = forward(&m, &[1, 0], 1).unwrap();
        let unscaled: Vec<f64> = fwd.alpha[0].iter().map(|a| a * fwd.scale[0]).collect();
        assert!((unscaled[0] - 0.05).abs() < 1e-15);
        assert!((unscaled[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn two_state_matches_hand_enumeration() {
        // Sum over the 8 hidden paths for (a, b, b), expanded by hand:
        // P = sum pi_i b_i(a) a_ij b_j(b) a_jk b_k(b).
        let m = two_state();
        let (pi, a, e) = ([0.5, 0.5], [[0.9, 0.1], [0.2, 0.8]], [[0.9, 0.1], [0.1, 0.9]]);
        let mut p = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    p += pi[i] * e[i][0] * a[i][j] * e[j][1] * a[j][k] * e[k][1];
                }
            }
        }
        let got = sequence_loglik(&m, &[0, 1, 1]).unwrap().exp();
        assert!((got - p).abs() < 1e-15, "{got} vs {p}");
    }

    #[test]
    fn unscaled_backward_base_and_single_state() {
        let m = unigram();
        let beta = backward(&m, &[0, 1, 1], 0, None).unwrap();
        assert_eq!(beta[2], vec![1.0]);
        assert!((beta[1][0] - 0.3).abs() < 1e-15);
        assert!((beta[0][0] - 0.09).abs() < 1e-15);
        let tail = backward(&m, &[0, 1, 1], 2, None).unwrap();
        assert_eq!(tail, vec![vec![1.0]]);
    }

    #[test]
    fn scaled_tables_are_consistent() {
        let m = two_state();
        let seq = [0, 1, 1, 0, 1];
        let fb = forward_backward(&m, &seq).unwrap();
        for t in 0..seq.len() {
            let s: f64 = (0..2).map(|i| fb.alpha[t][i] * fb.beta[t][i]).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!((fb.alpha[t].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let post = posteriors(&m, &seq, &fb);
        for t in 0..seq.len() - 1 {
            for i in 0..2 {
                let s: f64 = post.xi[t][i].iter().sum();
                assert!((s - post.gamma[t][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors_are_explicit() {
        let m = two_state();
        assert_eq!(
            sequence_loglik_named(&m, &["a", "zzz"]),
            Err(ModelError::OutOfVocabulary("zzz".into()))
        );
        assert!(matches!(sequence_loglik(&m, &[0, 5]), Err(ModelError::OutOfVocabulary(_))));
        assert!(matches!(forward(&m, &[0, 1], 3), Err(ModelError::BadPosition { .. })));
        assert_eq!(sequence_loglik(&m, &[]), Err(ModelError::EmptySequence));
    }

    #[test]
    fn works_in_single_precision() {
        let m: HapiModel<f32> = two_state().cast();
        let ll = sequence_loglik(&m, &[0, 1, 1]).unwrap();
        let ll64 = sequence_loglik(&two_state(), &[0, 1, 1]).unwrap();
        assert!((ll as f64 - ll64).abs() < 1e-5);
    }
}
