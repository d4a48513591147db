//! JSON model files. Probabilities are written with 17 significant digits so
//! a save/load cycle reproduces every f64 bit for bit.

use std::collections::BTreeMap;

use apimine_core::ObjectKey;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::{HapiModel, ModelError, NgramModel, Real, TrainMeta, Vocab};

fn num<F: Real>(x: F) -> Box<RawValue> {
    let x = x.as_f64();
    let text = if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

fn row<F: Real>(xs: &[F]) -> Vec<Box<RawValue>> {
    xs.iter().map(|&x| num(x)).collect()
}

#[derive(Serialize)]
struct MetaOut {
    seed: u64,
    iters: usize,
    loglik: Box<RawValue>,
}

#[derive(Serialize)]
struct HapiOut<'a> {
    types: Vec<&'a str>,
    k: usize,
    vocab: &'a [String],
    pi: Vec<Box<RawValue>>,
    a: Vec<Vec<Box<RawValue>>>,
    b: Vec<Vec<Box<RawValue>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train_meta: Option<MetaOut>,
}

#[derive(Deserialize)]
struct MetaIn {
    seed: u64,
    iters: usize,
    loglik: Option<f64>,
}

#[derive(Deserialize)]
struct HapiIn {
    types: Vec<String>,
    k: usize,
    vocab: Vec<String>,
    pi: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    train_meta: Option<MetaIn>,
}

fn key_types(key: Option<&ObjectKey>) -> Vec<&str> {
    key.map(|k| k.types().collect()).unwrap_or_default()
}

fn key_from(types: Vec<String>) -> Option<ObjectKey> {
    ObjectKey::new(types)
}

pub fn hapi_to_json<F: Real>(model: &HapiModel<F>) -> String {
    let out = HapiOut {
        types: key_types(model.key()),
        k: model.num_states(),
        vocab: model.vocab().symbols(),
        pi: row(model.pi()),
        a: model.trans().iter().map(|r| row(r)).collect(),
        b: model.emit().iter().map(|r| row(r)).collect(),
        train_meta: model.train_meta.as_ref().map(|m| MetaOut {
            seed: m.seed,
            iters: m.iters,
            loglik: num(m.loglik),
        }),
    };
    let mut text = serde_json::to_string_pretty(&out).expect("model serializes");
    text.push('\n');
    text
}

pub fn hapi_from_json<F: Real>(text: &str) -> Result<HapiModel<F>, ModelError> {
    let raw: HapiIn = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    if raw.k != raw.pi.len() {
        return Err(ModelError::Format(format!("k = {} but pi has {} entries", raw.k, raw.pi.len())));
    }
    let conv = |xs: Vec<f64>| xs.into_iter().map(F::of).collect::<Vec<F>>();
    let vocab = Vocab::from_ordered(raw.vocab)?;
    let mut model = HapiModel::new(
        vocab,
        conv(raw.pi),
        raw.a.into_iter().map(conv).collect(),
        raw.b.into_iter().map(conv).collect(),
    )?;
    if let Some(key) = key_from(raw.types) {
        model = model.with_key(key);
    }
    model.train_meta = raw.train_meta.map(|m| TrainMeta {
        seed: m.seed,
        iters: m.iters,
        loglik: m.loglik.unwrap_or(f64::NAN),
    });
    Ok(model)
}

#[derive(Serialize)]
struct CountOut<'a> {
    context: Vec<Option<&'a str>>,
    next: BTreeMap<&'a str, u64>,
}

#[derive(Serialize)]
struct NgramOut<'a> {
    format: &'static str,
    types: Vec<&'a str>,
    n: usize,
    delta: Box<RawValue>,
    vocab: &'a [String],
    counts: Vec<CountOut<'a>>,
}

#[derive(Deserialize)]
struct CountIn {
    context: Vec<Option<String>>,
    next: BTreeMap<String, u64>,
}

#[derive(Deserialize)]
struct NgramIn {
    format: String,
    types: Vec<String>,
    n: usize,
    delta: f64,
    vocab: Vec<String>,
    counts: Vec<CountIn>,
}

/// `key` is stored alongside the counts; n-gram models do not carry one.
pub fn ngram_to_json<F: Real>(model: &NgramModel<F>, key: Option<&ObjectKey>) -> String {
    let vocab = model.vocab();
    let counts = model
        .counts()
        .iter()
        .map(|(ctx, next)| CountOut {
            context: ctx.iter().map(|s| s.map(|i| vocab.symbol(i))).collect(),
            next: next.iter().map(|(&s, &c)| (vocab.symbol(s), c)).collect(),
        })
        .collect();
    let out = NgramOut {
        format: "ngram",
        types: key_types(key),
        n: model.order(),
        delta: num(model.delta()),
        vocab: vocab.symbols(),
        counts,
    };
    let mut text = serde_json::to_string_pretty(&out).expect("model serializes");
    text.push('\n');
    text
}

pub fn ngram_from_json<F: Real>(text: &str) -> Result<(NgramModel<F>, Option<ObjectKey>), ModelError> {
    let raw: NgramIn = serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
    if raw.format != "ngram" {
        return Err(ModelError::Format(format!("expected format \"ngram\", found {:?}", raw.format)));
    }
    let vocab = Vocab::from_ordered(raw.vocab)?;
    let lookup = |s: &str| vocab.get(s).ok_or_else(|| ModelError::OutOfVocabulary(s.to_string()));
    let mut counts = BTreeMap::new();
    for entry in raw.counts {
        let ctx = entry
            .context
            .iter()
            .map(|s| s.as_deref().map(lookup).transpose())
            .collect::<Result<Vec<_>, _>>()?;
        let next = entry
            .next
            .iter()
            .map(|(s, &c)| Ok((lookup(s)?, c)))
            .collect::<Result<BTreeMap<_, _>, ModelError>>()?;
        if counts.insert(ctx, next).is_some() {
            return Err(ModelError::Format("duplicate n-gram context".into()));
        }
    }
    let model = NgramModel::from_counts(vocab, raw.n, F::of(raw.delta), counts)?;
    Ok((model, key_from(raw.types)))
}
