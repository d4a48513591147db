use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use apimine_core::ir::parse_corpus_file;
use apimine_core::{build_arus, build_cfg, extract_method, Corpus, Method, MethodOutcome, ObjectKey, SkipReason};
use apimine_eval::{compare_models, evaluate_key, fit_key, split_corpus, Comparison, EvalError, ModelKind, Task};
use apimine_model::{next_api_call, next_api_call_ngram, Recommendation};
use rayon::prelude::*;
use serde::Serialize;

use crate::store::{Format, ModelStore, TrainSettings};
use crate::{CliError, PipelineConfig};

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

/// Input files in a stable order; directories contribute their `.mir`
/// files recursively.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
        let rd = fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        let mut items: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
        items.sort();
        for p in items {
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|x| x == "mir") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            walk(p, &mut out)?;
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(CliError::Input(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExtractSummary {
    pub files: usize,
    pub methods: usize,
    /// Repeated `(class, method)` definitions; only the first is analyzed.
    pub duplicates: usize,
    pub analyzed: usize,
    pub skipped_too_short: usize,
    pub skipped_too_many_branches: usize,
    pub occurrences: u64,
    pub distinct_sequences: usize,
    pub keys: usize,
    pub multi_object_keys: usize,
}

impl std::fmt::Display for ExtractSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "files                       {}", self.files)?;
        writeln!(f, "methods                     {}", self.methods)?;
        writeln!(f, "duplicate methods           {}", self.duplicates)?;
        writeln!(f, "methods analyzed            {}", self.analyzed)?;
        writeln!(f, "skipped: too few instrs     {}", self.skipped_too_short)?;
        writeln!(f, "skipped: too many branches  {}", self.skipped_too_many_branches)?;
        writeln!(f, "sequence occurrences        {}", self.occurrences)?;
        writeln!(f, "distinct sequences          {}", self.distinct_sequences)?;
        writeln!(f, "keys                        {}", self.keys)?;
        write!(f, "multi-object keys           {}", self.multi_object_keys)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dumps {
    pub cfg_dir: Option<PathBuf>,
    pub arus_dir: Option<PathBuf>,
}

fn dump_graphs(methods: &[Method], dumps: &Dumps, config: &PipelineConfig) -> Result<(), CliError> {
    for m in methods {
        let name = m.qualified_name();
        let stem: String = name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
            .collect();
        let cfg = build_cfg(m);
        if let Some(dir) = &dumps.cfg_dir {
            write_file(&dir.join(format!("{stem}.dot")), &cfg.to_dot(&name))?;
        }
        if let Some(dir) = &dumps.arus_dir {
            // Methods over the branch cap have no usage graphs to show.
            if let Ok(graphs) = build_arus(m, &cfg, config.max_branch_nodes) {
                for (i, g) in graphs.iter().enumerate() {
                    write_file(&dir.join(format!("{stem}.{i}.dot")), &g.to_dot(&format!("{name} path {i}")))?;
                }
            }
        }
    }
    Ok(())
}

/// Parses every input, extracts call sequences per method and counts them.
pub fn extract(inputs: &[PathBuf], config: &PipelineConfig, dumps: &Dumps) -> Result<(Corpus, ExtractSummary), CliError> {
    let files = collect_inputs(inputs)?;
    let mut summary = ExtractSummary {
        files: files.len(),
        ..ExtractSummary::default()
    };
    let mut seen = HashSet::new();
    let mut methods = Vec::new();
    for f in &files {
        for m in parse_corpus_file(f).map_err(|e| CliError::Input(e.to_string()))? {
            summary.methods += 1;
            if seen.insert((m.owner_class.clone(), m.name.clone())) {
                methods.push(m);
            } else {
                summary.duplicates += 1;
            }
        }
    }
    dump_graphs(&methods, dumps, config)?;
    let ex = config.extract();
    let outcomes: Vec<_> = methods.par_iter().map(|m| extract_method(m, &ex)).collect();
    let mut found = Vec::new();
    for (m, outcome) in methods.iter().zip(outcomes) {
        match outcome.map_err(|e| CliError::Input(format!("method {}: {e}", m.qualified_name())))? {
            MethodOutcome::Extracted(pairs) => {
                summary.analyzed += 1;
                found.push(pairs);
            }
            MethodOutcome::Skipped(SkipReason::TooShort) => summary.skipped_too_short += 1,
            MethodOutcome::Skipped(SkipReason::TooManyBranches) => summary.skipped_too_many_branches += 1,
        }
    }
    let corpus = apimine_core::aggregate_corpus(found);
    summary.occurrences = corpus.occurrences();
    summary.distinct_sequences = corpus.entries().values().map(|e| e.len()).sum();
    summary.keys = corpus.len();
    summary.multi_object_keys = corpus.keys().filter(|k| k.is_multi()).count();
    Ok((corpus, summary))
}

pub fn write_corpus(corpus: &Corpus, path: &Path) -> Result<(), CliError> {
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf).expect("writing to memory");
    write_file(path, std::str::from_utf8(&buf).expect("corpus is UTF-8"))
}

pub fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Corpus::read_jsonl(std::io::BufReader::new(file))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainedKey {
    pub key: String,
    pub occurrences: u64,
    pub k: usize,
    pub loglik: f64,
    pub iters: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainSummary {
    pub trained: Vec<TrainedKey>,
    /// Keys without models and why.
    pub skipped: Vec<(String, u64, String)>,
}

impl std::fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} keys trained, {} skipped", self.trained.len(), self.skipped.len())?;
        for t in &self.trained {
            writeln!(f, "  {}  n={} K={} loglik={:.4} iters={}", t.key, t.occurrences, t.k, t.loglik, t.iters)?;
        }
        for (key, n, why) in &self.skipped {
            writeln!(f, "  skipped {key}  n={n}: {why}")?;
        }
        Ok(())
    }
}

const BELOW_THRESHOLD: &str = "fewer than";

pub fn settings(config: &PipelineConfig) -> TrainSettings {
    TrainSettings {
        seed: config.seed,
        min_sequences: config.min_sequences,
        train_frac: config.train_frac,
        val_frac: config.val_frac,
        k_range: config.k_range.clone(),
        ngram_n: config.ngram_n,
        ngram_delta: config.ngram_delta,
    }
}

/// Fits both models for every key with enough occurrences. Keys train in
/// parallel; the store is written from this thread only.
pub fn train(corpus: &Corpus, config: &PipelineConfig, store_dir: &Path) -> Result<TrainSummary, CliError> {
    let eval = config.eval();
    let entries: Vec<_> = corpus.entries().iter().collect();
    let fitted: Vec<_> = entries
        .par_iter()
        .map(|(key, entry)| fit_key(key, entry, &eval))
        .collect();
    let mut store = ModelStore::create(store_dir, settings(config))?;
    let mut summary = TrainSummary::default();
    for ((key, _), fit) in entries.iter().zip(fitted) {
        let n = corpus.total(key);
        match fit {
            Ok(m) => {
                store.put_hapi(key, &m.hapi, n)?;
                store.put_ngram(key, &m.ngram, n)?;
                let (loglik, iters) = m.hapi.train_meta.as_ref().map_or((f64::NAN, 0), |t| (t.loglik, t.iters));
                summary.trained.push(TrainedKey {
                    key: key.to_string(),
                    occurrences: n,
                    k: m.hapi.num_states(),
                    loglik,
                    iters,
                });
            }
            Err(e) => {
                let why = match &e {
                    EvalError::BelowThreshold { .. } => format!("{BELOW_THRESHOLD} {} occurrences", config.min_sequences),
                    other => other.to_string(),
                };
                store.record_skip(key, n, why.clone());
                summary.skipped.push((key.to_string(), n, why));
            }
        }
    }
    store.save_index()?;
    Ok(summary)
}

pub fn parse_key(types: &str) -> Result<ObjectKey, CliError> {
    ObjectKey::parse(types).ok_or_else(|| CliError::Input(format!("bad type list `{types}`")))
}

pub fn parse_seq(seq: &str) -> Vec<String> {
    seq.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Ranks candidates for `hole` (default: the next call) with the stored
/// model of `format` for `key`.
pub fn recommend(
    store: &ModelStore,
    key: &ObjectKey,
    partial: &[String],
    hole: Option<usize>,
    format: Format,
) -> Result<Recommendation, CliError> {
    if store.entry(key, format).is_none() {
        return Err(CliError::Input(format!("no model for key {key}")));
    }
    let hole = hole.unwrap_or(partial.len() + 1);
    let rec = match format {
        Format::Hapi => next_api_call(&store.hapi(key)?, partial, hole)?,
        Format::Ngram => {
            let mut rec = next_api_call_ngram(&store.ngram(key)?, partial, hole)?;
            rec.query_key = Some(key.clone());
            rec
        }
    };
    Ok(rec)
}

#[derive(Serialize)]
struct Ranked<'a> {
    call: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct RecommendationOut<'a> {
    types: Vec<&'a str>,
    model: String,
    hole: usize,
    ranked: Vec<Ranked<'a>>,
}

pub fn render_recommendation(rec: &Recommendation, format: Format, k: usize, json: bool) -> String {
    let top = &rec.ranked[..k.min(rec.ranked.len())];
    if json {
        let out = RecommendationOut {
            types: rec.query_key.iter().flat_map(|k| k.types()).collect(),
            model: format.to_string(),
            hole: rec.hole_position,
            ranked: top.iter().map(|(c, s)| Ranked { call: c, score: *s }).collect(),
        };
        return serde_json::to_string_pretty(&out).expect("serializes") + "\n";
    }
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:>8}  call", "rank", "score");
    for (i, (call, score)) in top.iter().enumerate() {
        let _ = writeln!(out, "{:>4}  {score:>8.4}  {call}", i + 1);
    }
    out
}

/// Evaluates stored models on the test portion of each key, rebuilt from
/// the split settings recorded at training time.
pub fn eval_store(corpus: &Corpus, store: &ModelStore, config: &PipelineConfig, macro_average: bool) -> Result<Comparison, CliError> {
    let s = &store.index().settings;
    let mut eval = config.eval();
    eval.seed = s.seed;
    eval.split.min_sequences = s.min_sequences;
    eval.split.train_frac = s.train_frac;
    eval.split.val_frac_of_train = s.val_frac;
    eval.macro_average = macro_average;
    let mut cmp = Comparison {
        results: Vec::new(),
        below_threshold: Vec::new(),
        failed: Vec::new(),
        k_values: eval.k_values.clone(),
        macro_average,
    };
    let keys = store.keys();
    let outcomes: Vec<Result<_, String>> = keys
        .par_iter()
        .map(|key| {
            let entry = corpus.entry(key).ok_or("key absent from the corpus")?;
            let split = split_corpus(entry, &eval.split, eval.split_seed(key)).map_err(|e| e.to_string())?;
            let hapi = store.hapi(key).map_err(|e| e.to_string())?;
            let ngram = store.ngram(key).map_err(|e| e.to_string())?;
            Ok(evaluate_key(key, &split.test, &hapi, &ngram, &eval))
        })
        .collect();
    for (key, o) in keys.into_iter().zip(outcomes) {
        match o {
            Ok(r) => cmp.results.push(r),
            Err(why) => cmp.failed.push((key, why)),
        }
    }
    for s in &store.index().skipped {
        if let Some(key) = ObjectKey::new(s.types.iter().cloned()) {
            if s.reason.starts_with(BELOW_THRESHOLD) {
                cmp.below_threshold.push((key, s.occurrences));
            } else {
                cmp.failed.push((key, s.reason.clone()));
            }
        }
    }
    Ok(cmp)
}

pub fn eval_fresh(corpus: &Corpus, config: &PipelineConfig, macro_average: bool) -> Comparison {
    let mut eval = config.eval();
    eval.macro_average = macro_average;
    compare_models(corpus, &eval)
}

#[derive(Serialize)]
struct OverallOut {
    model: String,
    task: String,
    k: Vec<usize>,
    accuracy: Vec<f64>,
    total: u64,
    skipped: u64,
}

pub fn comparison_json(cmp: &Comparison) -> String {
    let mut rows = Vec::new();
    for task in [Task::NextCall, Task::FillHole] {
        for model in [ModelKind::Hapi, ModelKind::Ngram] {
            let pooled = cmp.pooled(model, task);
            rows.push(OverallOut {
                model: model.to_string(),
                task: task.to_string(),
                k: cmp.k_values.clone(),
                accuracy: cmp.overall_accuracy(model, task),
                total: pooled.total,
                skipped: pooled.skipped,
            });
        }
    }
    serde_json::to_string_pretty(&rows).expect("serializes") + "\n"
}

pub fn inspect_store(store: &ModelStore, key: &ObjectKey, threshold: f64) -> Result<String, CliError> {
    if store.entry(key, Format::Hapi).is_none() {
        return Err(CliError::Input(format!("no model for key {key}")));
    }
    Ok(store.hapi(key)?.to_dot(threshold))
}

pub fn inspect_file(path: &Path, threshold: f64) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let model: apimine_model::Hapi = apimine_model::io::hapi_from_json(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(model.to_dot(threshold))
}
