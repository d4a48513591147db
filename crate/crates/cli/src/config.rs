//! Pipeline settings read from `key = value` text.
//!
//! ```text
//! # comments and blank lines are ignored
//! api_prefixes = android., java.
//! k_range = 1..16
//! seed = 7
//! ```

use apimine_core::{ApiFilter, ExtractConfig};
use apimine_eval::{EvalConfig, SplitOptions};
use apimine_model::TrainOptions;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub api_prefixes: Vec<String>,
    pub max_branch_nodes: usize,
    pub min_method_instructions: usize,
    pub max_set_size: Option<usize>,
    pub min_sequences: u64,
    pub train_frac: f64,
    pub val_frac: f64,
    /// Candidate hidden state counts, ascending.
    pub k_range: Vec<usize>,
    pub k_values: Vec<usize>,
    pub seed: u64,
    pub ngram_n: usize,
    pub ngram_delta: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let extract = ExtractConfig::default();
        let eval = EvalConfig::default();
        Self {
            api_prefixes: extract.api_filter.prefixes().to_vec(),
            max_branch_nodes: extract.max_branch_nodes,
            min_method_instructions: extract.min_method_instructions,
            max_set_size: extract.max_set_size,
            min_sequences: eval.split.min_sequences,
            train_frac: eval.split.train_frac,
            val_frac: eval.split.val_frac_of_train,
            k_range: eval.k_range,
            k_values: eval.k_values,
            seed: eval.seed,
            ngram_n: eval.ngram_n,
            ngram_delta: eval.ngram_delta,
            restarts: eval.train.restarts,
            max_iter: eval.train.max_iter,
            tol: eval.train.tol,
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("config line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| bad(line, format!("`{key}` expects a number, got `{v}`")))
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<usize>, CliError> {
    v.split(',').map(|x| num(line, key, x.trim())).collect()
}

/// `lo..hi` (inclusive) or a comma list.
pub fn parse_k_range(v: &str) -> Result<Vec<usize>, String> {
    let out: Vec<usize> = if let Some((lo, hi)) = v.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| format!("bad range `{v}`"))?;
        let hi: usize = hi.trim().trim_start_matches('=').parse().map_err(|_| format!("bad range `{v}`"))?;
        (lo..=hi).collect()
    } else {
        v.split(',')
            .map(|x| x.trim().parse().map_err(|_| format!("bad K list `{v}`")))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(format!("empty K range `{v}`"));
    }
    Ok(out)
}

impl PipelineConfig {
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, "expected `key = value`"))?;
            self.set(line, key.trim(), value.trim())?;
        }
        self.validate()
    }

    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "api_prefixes" => {
                self.api_prefixes = v.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
            }
            "max_branch_nodes" => self.max_branch_nodes = num(line, key, v)?,
            "min_method_instructions" => self.min_method_instructions = num(line, key, v)?,
            "max_set_size" => {
                self.max_set_size = if v == "none" { None } else { Some(num(line, key, v)?) }
            }
            "min_sequences" => self.min_sequences = num(line, key, v)?,
            "train_frac" => self.train_frac = num(line, key, v)?,
            "val_frac" => self.val_frac = num(line, key, v)?,
            "k_range" => self.k_range = parse_k_range(v).map_err(|e| bad(line, e))?,
            "k_values" => self.k_values = list(line, key, v)?,
            "seed" => self.seed = num(line, key, v)?,
            "ngram_n" => self.ngram_n = num(line, key, v)?,
            "ngram_delta" => self.ngram_delta = num(line, key, v)?,
            "restarts" => self.restarts = num(line, key, v)?,
            "max_iter" => self.max_iter = num(line, key, v)?,
            "tol" => self.tol = num(line, key, v)?,
            other => return Err(bad(line, format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: &str| Err(CliError::Input(format!("invalid configuration: {m}")));
        if self.api_prefixes.is_empty() {
            return fail("api_prefixes is empty");
        }
        if self.max_branch_nodes == 0 || self.min_method_instructions == 0 || self.min_sequences == 0 {
            return fail("thresholds must be positive");
        }
        if self.max_set_size == Some(0) {
            return fail("max_set_size must be positive");
        }
        if self.k_range.is_empty() || self.k_range.contains(&0) {
            return fail("k_range must be non-empty and positive");
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return fail("k_values must be non-empty and positive");
        }
        if !(self.ngram_delta > 0.0) || self.ngram_n == 0 {
            return fail("ngram_n and ngram_delta must be positive");
        }
        if !(0.0..=1.0).contains(&self.train_frac) || !(0.0..=1.0).contains(&self.val_frac) {
            return fail("split fractions must lie in [0, 1]");
        }
        if self.restarts == 0 || self.max_iter == 0 || !(self.tol >= 0.0) {
            return fail("restarts and max_iter must be positive, tol non-negative");
        }
        Ok(())
    }

    pub fn extract(&self) -> ExtractConfig {
        ExtractConfig {
            api_filter: ApiFilter::new(self.api_prefixes.clone()),
            max_branch_nodes: self.max_branch_nodes,
            min_method_instructions: self.min_method_instructions,
            max_set_size: self.max_set_size,
        }
    }

    pub fn eval(&self) -> EvalConfig {
        EvalConfig {
            split: SplitOptions {
                train_frac: self.train_frac,
                val_frac_of_train: self.val_frac,
                min_sequences: self.min_sequences,
            },
            k_range: self.k_range.clone(),
            k_values: self.k_values.clone(),
            seed: self.seed,
            ngram_n: self.ngram_n,
            ngram_delta: self.ngram_delta,
            train: TrainOptions {
                tol: self.tol,
                max_iter: self.max_iter,
                restarts: self.restarts,
                ..TrainOptions::default()
            },
            macro_average: false,
        }
    }
}
