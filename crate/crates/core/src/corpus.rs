//! Counted API sequences keyed by object type sets, and their JSON-lines form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sorted set of object type labels a sequence belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectKey(BTreeSet<String>);

impl ObjectKey {
    /// `None` when `types` is empty.
    pub fn new<I, S>(types: I) -> Option<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = types.into_iter().map(Into::into).collect();
        (!set.is_empty()).then_some(Self(set))
    }

    pub fn single(ty: impl Into<String>) -> Self {
        Self(BTreeSet::from([ty.into()]))
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, ty: &str) -> bool {
        self.0.contains(ty)
    }

    pub fn is_multi(&self) -> bool {
        self.0.len() > 1
    }

    /// Parses the comma-separated form produced by `Display`.
    pub fn parse(text: &str) -> Option<Self> {
        Self::new(text.split(',').map(str::trim).filter(|s| !s.is_empty()))
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for t in &self.0 {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            f.write_str(t)?;
        }
        Ok(())
    }
}

/// API calls in execution order, `C.m` each. Always at least two calls.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ApiSequence(Vec<String>);

impl ApiSequence {
    pub const MIN_LEN: usize = 2;

    pub fn new(calls: Vec<String>) -> Option<Self> {
        (calls.len() >= Self::MIN_LEN).then_some(Self(calls))
    }

    pub fn calls(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ApiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(", "))
    }
}

/// Distinct sequences per key with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    entries: BTreeMap<ObjectKey, BTreeMap<ApiSequence, u64>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, key: ObjectKey, seq: ApiSequence, count: u64) {
        if count == 0 {
            return;
        }
        *self.entries.entry(key).or_default().entry(seq).or_default() += count;
    }

    /// Sums counts key by key. Associative and commutative.
    pub fn merge(&mut self, other: Corpus) {
        for (key, seqs) in other.entries {
            for (seq, c) in seqs {
                self.add(key.clone(), seq, c);
            }
        }
    }

    pub fn entries(&self) -> &BTreeMap<ObjectKey, BTreeMap<ApiSequence, u64>> {
        &self.entries
    }

    pub fn entry(&self, key: &ObjectKey) -> Option<&BTreeMap<ApiSequence, u64>> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &ObjectKey> {
        self.entries.keys()
    }

    /// Total occurrences D for a key.
    pub fn total(&self, key: &ObjectKey) -> u64 {
        self.entries
            .get(key)
            .map(|s| s.values().sum())
            .unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn occurrences(&self) -> u64 {
        self.entries.values().flat_map(|s| s.values()).sum()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (key, seqs) in &self.entries {
            for (seq, &count) in seqs {
                let rec = Record {
                    types: key.0.iter().cloned().collect(),
                    seq: seq.0.clone(),
                    count,
                };
                serde_json::to_writer(&mut out, &rec)?;
                out.write_all(b"\n")?;
            }
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| CorpusError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| CorpusError::Record {
                line: line_no,
                reason,
            };
            let rec: Record = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let key = ObjectKey::new(rec.types).ok_or_else(|| bad("empty type set".into()))?;
            let seq = ApiSequence::new(rec.seq)
                .ok_or_else(|| bad("sequence shorter than two calls".into()))?;
            if rec.count == 0 {
                return Err(bad("count must be positive".into()));
            }
            corpus.add(key, seq, rec.count);
        }
        Ok(corpus)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    types: Vec<String>,
    seq: Vec<String>,
    count: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("read failed: {0}")]
    Io(String),
    #[error("line {line}: corrupt corpus record: {reason}")]
    Record { line: usize, reason: String },
}
