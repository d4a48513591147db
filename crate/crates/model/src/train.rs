//! Count-weighted Baum-Welch training and validation-based choice of K.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fb::sequence_loglik;
#[cfg(test)]
use crate::fb::{forward_backward, posteriors};
use crate::{derive_seed, HapiModel, ModelError, Real, TrainMeta, Vocab};

/// Distinct sequences over vocabulary indices, each with its occurrence count.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    vocab: Vocab,
    items: Vec<(Vec<usize>, u64)>,
}

impl TrainSet {
    pub fn new(vocab: Vocab, items: Vec<(Vec<usize>, u64)>) -> Result<Self, ModelError> {
        for (seq, count) in &items {
            if seq.is_empty() {
                return Err(ModelError::EmptySequence);
            }
            if *count == 0 {
                return Err(ModelError::InvalidParameter("sequence count must be at least 1".into()));
            }
            if let Some(&s) = seq.iter().find(|&&s| s >= vocab.len()) {
                return Err(ModelError::OutOfVocabulary(format!("symbol #{s}")));
            }
        }
        Ok(Self { vocab, items })
    }

    /// Encodes named sequences against `vocab`.
    pub fn from_named<I, S>(vocab: Vocab, items: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (Vec<S>, u64)>,
        S: AsRef<str>,
    {
        let items = items
            .into_iter()
            .map(|(seq, c)| Ok((vocab.encode(&seq)?, c)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Self::new(vocab, items)
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn items(&self) -> &[(Vec<usize>, u64)] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total occurrences.
    pub fn total(&self) -> u64 {
        self.items.iter().map(|(_, c)| c).sum()
    }

    /// Every occurrence as its own item of count 1.
    pub fn expanded(&self) -> Self {
        let items = self
            .items
            .iter()
            .flat_map(|(s, c)| std::iter::repeat((s.clone(), 1)).take(*c as usize))
            .collect();
        Self {
            vocab: self.vocab.clone(),
            items,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    /// Stop once the log-likelihood gain falls to `tol * |loglik|` or below.
    pub tol: f64,
    pub max_iter: usize,
    /// Lower bound on emission probabilities after each update.
    pub emission_floor: f64,
    /// Independent random starts; the run with the best final training
    /// log-likelihood is kept.
    pub restarts: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            emission_floor: 1e-12,
            restarts: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<F> {
    pub model: HapiModel<F>,
    /// Parameter updates performed.
    pub iterations: usize,
    /// Weighted log-likelihood of the starting model and after each update.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
}

/// Weighted total log-likelihood `sum_n c_n log P(Y_n)`.
pub fn weighted_loglik<F: Real>(model: &HapiModel<F>, set: &TrainSet) -> Result<F, ModelError> {
    let mut total = F::zero();
    for (seq, c) in &set.items {
        total = total + F::of(*c as f64) * sequence_loglik(model, seq)?;
    }
    Ok(total)
}

struct Scratch<F> {
    alpha: Vec<F>,
    beta: Vec<F>,
    scale: Vec<F>,
    next: Vec<F>,
}

impl<F: Real> Scratch<F> {
    fn new() -> Self {
        Self {
            alpha: Vec::new(),
            beta: Vec::new(),
            scale: Vec::new(),
            next: Vec::new(),
        }
    }

    fn resize(&mut self, len: usize, k: usize) {
        self.alpha.resize(len * k, F::zero());
        self.beta.resize(len * k, F::zero());
        self.scale.resize(len, F::zero());
        self.next.resize(k, F::zero());
    }
}

struct Accum<F> {
    pi: Vec<F>,
    a_num: Vec<Vec<F>>,
    a_den: Vec<F>,
    b_num: Vec<Vec<F>>,
    b_den: Vec<F>,
    loglik: F,
}

impl<F: Real> Accum<F> {
    fn zeros(k: usize, m: usize) -> Self {
        Self {
            pi: vec![F::zero(); k],
            a_num: vec![vec![F::zero(); k]; k],
            a_den: vec![F::zero(); k],
            b_num: vec![vec![F::zero(); m]; k],
            b_den: vec![F::zero(); k],
            loglik: F::zero(),
        }
    }

    /// Adds one sequence's expected counts, weighted by `count`. Same
    /// quantities as `forward_backward` + `posteriors`, computed in flat
    /// scratch buffers.
    fn add(&mut self, model: &HapiModel<F>, seq: &[usize], count: u64, w: &mut Scratch<F>) -> Result<(), ModelError> {
        let k = model.num_states();
        let len = seq.len();
        if len == 0 {
            return Err(ModelError::EmptySequence);
        }
        model.check_symbols(seq)?;
        let c = F::of(count as f64);
        let (a, b) = (model.trans(), model.emit());
        w.resize(len, k);

        let mut ll = F::zero();
        for t in 0..len {
            let y = seq[t];
            let (done, rest) = w.alpha.split_at_mut(t * k);
            let row = &mut rest[..k];
            if t == 0 {
                for i in 0..k {
                    row[i] = model.pi()[i] * b[i][y];
                }
            } else {
                let prev = &done[(t - 1) * k..];
                row.iter_mut().for_each(|x| *x = F::zero());
                for (j, &pj) in prev.iter().enumerate() {
                    if pj == F::zero() {
                        continue;
                    }
                    for (x, &aji) in row.iter_mut().zip(&a[j]) {
                        *x = *x + pj * aji;
                    }
                }
                for i in 0..k {
                    row[i] = row[i] * b[i][y];
                }
            }
            let norm: F = row.iter().copied().sum();
            if !(norm > F::zero()) || !norm.is_finite() {
                return Err(ModelError::ImpossibleSequence);
            }
            row.iter_mut().for_each(|x| *x = *x / norm);
            w.scale[t] = norm;
            ll = ll + norm.ln();
        }

        // Backward pass; `next[j]` is b_j(y_{t+1}) * beta_{t+1}(j) / c_{t+1},
        // which also feeds the transition posteriors.
        w.beta[(len - 1) * k..].iter_mut().for_each(|x| *x = F::one());
        for t in (0..len).rev() {
            let alpha = &w.alpha[t * k..(t + 1) * k];
            let (head, tail) = w.beta.split_at_mut((t + 1) * k);
            let beta = &mut head[t * k..];
            if t + 1 < len {
                let y = seq[t + 1];
                let inv = F::one() / w.scale[t + 1];
                for j in 0..k {
                    w.next[j] = b[j][y] * tail[j] * inv;
                }
                for i in 0..k {
                    beta[i] = a[i].iter().zip(&w.next).map(|(&aij, &nj)| aij * nj).sum();
                }
            }
            let total: F = alpha.iter().zip(beta.iter()).map(|(&x, &y)| x * y).sum();
            for i in 0..k {
                let g = c * alpha[i] * beta[i] / total;
                self.b_num[i][seq[t]] = self.b_num[i][seq[t]] + g;
                self.b_den[i] = self.b_den[i] + g;
                if t + 1 < len {
                    self.a_den[i] = self.a_den[i] + g;
                }
                if t == 0 {
                    self.pi[i] = self.pi[i] + g;
                }
            }
            if t + 1 < len {
                for i in 0..k {
                    let ai = c * alpha[i] / total;
                    if ai == F::zero() {
                        continue;
                    }
                    for ((num, &aij), &nj) in self.a_num[i].iter_mut().zip(&a[i]).zip(&w.next) {
                        *num = *num + ai * aij * nj;
                    }
                }
            }
        }
        self.loglik = self.loglik + c * ll;
        Ok(())
    }

    #[cfg(test)]
    fn add_reference(&mut self, model: &HapiModel<F>, seq: &[usize], count: u64) -> Result<(), ModelError> {
        let c = F::of(count as f64);
        let fb = forward_backward(model, seq)?;
        let post = posteriors(model, seq, &fb);
        let k = model.num_states();
        self.loglik = self.loglik + c * fb.loglik;
        for i in 0..k {
            self.pi[i] = self.pi[i] + c * post.gamma[0][i];
        }
        for (t, g) in post.gamma.iter().enumerate() {
            for i in 0..k {
                let w = c * g[i];
                self.b_num[i][seq[t]] = self.b_num[i][seq[t]] + w;
                self.b_den[i] = self.b_den[i] + w;
                if t + 1 < seq.len() {
                    self.a_den[i] = self.a_den[i] + w;
                }
            }
        }
        for x in &post.xi {
            for i in 0..k {
                for j in 0..k {
                    self.a_num[i][j] = self.a_num[i][j] + c * x[i][j];
                }
            }
        }
        Ok(())
    }

    fn merge(&mut self, other: Self) {
        let add_row = |a: &mut [F], b: &[F]| a.iter_mut().zip(b).for_each(|(x, y)| *x = *x + *y);
        add_row(&mut self.pi, &other.pi);
        add_row(&mut self.a_den, &other.a_den);
        add_row(&mut self.b_den, &other.b_den);
        for (a, b) in self.a_num.iter_mut().zip(&other.a_num) {
            add_row(a, b);
        }
        for (a, b) in self.b_num.iter_mut().zip(&other.b_num) {
            add_row(a, b);
        }
        self.loglik = self.loglik + other.loglik;
    }
}

// Fixed chunking keeps the summation order, and so the result bits,
// independent of the thread count.
const CHUNK: usize = 32;

fn expectation<F: Real>(model: &HapiModel<F>, set: &TrainSet) -> Result<Accum<F>, ModelError> {
    let (k, m) = (model.num_states(), model.num_symbols());
    let parts = set
        .items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Accum::zeros(k, m);
            let mut scratch = Scratch::new();
            for (seq, c) in chunk {
                acc.add(model, seq, *c, &mut scratch)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let mut total = Accum::zeros(k, m);
    for p in parts {
        total.merge(p);
    }
    Ok(total)
}

fn ratio_rows<F: Real>(num: &[Vec<F>], den: &[F], old: &[Vec<F>]) -> Vec<Vec<F>> {
    num.iter()
        .zip(den)
        .zip(old)
        .map(|((row, &d), prev)| {
            if d > F::zero() {
                row.iter().map(|&x| x / d).collect()
            } else {
                // No expected visits: nothing to re-estimate from.
                prev.clone()
            }
        })
        .collect()
}

fn apply_floor<F: Real>(row: &mut [F], floor: F) {
    if floor <= F::zero() || row.iter().all(|&p| p >= floor) {
        return;
    }
    for p in row.iter_mut() {
        *p = p.max(floor);
    }
    let total: F = row.iter().copied().sum();
    row.iter_mut().for_each(|p| *p = *p / total);
}

fn maximization<F: Real>(
    model: &HapiModel<F>,
    acc: &Accum<F>,
    total: u64,
    opts: &TrainOptions,
) -> Result<HapiModel<F>, ModelError> {
    let d = F::of(total as f64);
    let pi = acc.pi.iter().map(|&x| x / d).collect();
    let trans = ratio_rows(&acc.a_num, &acc.a_den, model.trans());
    let mut emit = ratio_rows(&acc.b_num, &acc.b_den, model.emit());
    let floor = F::of(opts.emission_floor);
    for row in &mut emit {
        apply_floor(row, floor);
    }
    let mut next = HapiModel::new(model.vocab().clone(), pi, trans, emit)?;
    if let Some(key) = model.key() {
        next = next.with_key(key.clone());
    }
    Ok(next)
}

fn check_set(set: &TrainSet) -> Result<(), ModelError> {
    if set.is_empty() {
        return Err(ModelError::EmptyTrainSet);
    }
    if set.vocab.is_empty() {
        return Err(ModelError::EmptyVocabulary);
    }
    if set.items.iter().all(|(s, _)| s.len() < 2) {
        return Err(ModelError::DegenerateTrainSet);
    }
    Ok(())
}

/// Runs EM from `init` until the relative gain drops to `opts.tol` or
/// `opts.max_iter` updates have been made.
pub fn train_from<F: Real>(
    init: HapiModel<F>,
    set: &TrainSet,
    opts: &TrainOptions,
) -> Result<TrainOutcome<F>, ModelError> {
    check_set(set)?;
    if init.vocab() != set.vocab() {
        return Err(ModelError::VocabMismatch);
    }
    let total = set.total();
    let seed = init.train_meta.as_ref().map_or(0, |m| m.seed);
    let mut model = init;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let acc = expectation(&model, set)?;
        let ll = acc.loglik.as_f64();
        if let Some(&prev) = trace.last() {
            if ll - prev <= opts.tol * f64::abs(prev) {
                trace.push(ll);
                converged = true;
                break;
            }
        }
        trace.push(ll);
        if iterations == opts.max_iter {
            break;
        }
        model = maximization(&model, &acc, total, opts)?;
        iterations += 1;
    }
    model.train_meta = Some(TrainMeta {
        seed,
        iters: iterations,
        loglik: *trace.last().expect("at least one evaluation"),
    });
    Ok(TrainOutcome {
        model,
        iterations,
        loglik_trace: trace,
        converged,
    })
}

/// Trains a `k`-state model from `opts.restarts` seeded random starts and
/// keeps the best. Restart `r` draws its start from `derive_seed(seed, "restart-r")`,
/// except restart 0 which uses `seed` itself.
pub fn train<F: Real>(
    set: &TrainSet,
    k: usize,
    seed: u64,
    opts: &TrainOptions,
) -> Result<TrainOutcome<F>, ModelError> {
    if k == 0 {
        return Err(ModelError::InvalidParameter("K must be at least 1".into()));
    }
    check_set(set)?;
    let runs = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 { seed } else { derive_seed(seed, &format!("restart-{r}")) };
            let mut rng = ChaCha8Rng::seed_from_u64(start);
            let init = HapiModel::random(set.vocab().clone(), k, &mut rng)?;
            train_from(init, set, opts)
        })
        .collect::<Vec<_>>();
    let mut best: Option<TrainOutcome<F>> = None;
    for run in runs {
        let run = run?;
        let ll = *run.loglik_trace.last().expect("non-empty trace");
        if best.as_ref().map_or(true, |b| ll > *b.loglik_trace.last().expect("non-empty trace")) {
            best = Some(run);
        }
    }
    let mut out = best.expect("at least one restart");
    if let Some(meta) = out.model.train_meta.as_mut() {
        meta.seed = seed;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Selection<F> {
    pub best_k: usize,
    pub model: HapiModel<F>,
    /// Validation log-likelihood per K; `Err` where training failed.
    pub curve: Vec<(usize, Result<f64, ModelError>)>,
}

/// Trains one model per K and keeps the one with the highest weighted
/// validation log-likelihood; ties go to the smaller K.
pub fn select_k<F: Real>(
    train_set: &TrainSet,
    validation: &TrainSet,
    k_range: &[usize],
    seed: u64,
    opts: &TrainOptions,
) -> Result<Selection<F>, ModelError> {
    if validation.is_empty() {
        return Err(ModelError::EmptyValidation);
    }
    if train_set.vocab() != validation.vocab() {
        return Err(ModelError::VocabMismatch);
    }
    if k_range.is_empty() {
        return Err(ModelError::InvalidParameter("empty K range".into()));
    }
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let runs: Vec<(usize, Result<(HapiModel<F>, f64), ModelError>)> = ks
        .par_iter()
        .map(|&k| {
            let run = train::<F>(train_set, k, seed, opts).and_then(|out| {
                let ll = weighted_loglik(&out.model, validation)?.as_f64();
                Ok((out.model, ll))
            });
            (k, run)
        })
        .collect();

    let mut best: Option<(usize, HapiModel<F>, f64)> = None;
    let mut curve = Vec::with_capacity(runs.len());
    for (k, run) in runs {
        match run {
            Ok((model, ll)) => {
                curve.push((k, Ok(ll)));
                if best.as_ref().map_or(true, |(_, _, b)| ll > *b) {
                    best = Some((k, model, ll));
                }
            }
            Err(e) => curve.push((k, Err(e))),
        }
    }
    match best {
        Some((best_k, model, _)) => Ok(Selection { best_k, model, curve }),
        None => {
            let reasons: Vec<String> = curve
                .iter()
                .filter_map(|(k, r)| r.as_ref().err().map(|e| format!("K={k}: {e}")))
                .collect();
            Err(ModelError::AllKFailed(reasons.join("; ")))
        }
    }
}
