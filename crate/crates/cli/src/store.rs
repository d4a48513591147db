//! Directory of per-key model files plus an `index.json` that maps each
//! key and format to its file and training metadata.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use apimine_core::ObjectKey;
use apimine_model::io::{hapi_from_json, hapi_to_json, ngram_from_json, ngram_to_json};
use apimine_model::{Hapi, ModelError, Ngram};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {reason}")]
    Corrupt { path: String, reason: String },
    #[error("{0}: not a model store (no index.json)")]
    NotAStore(String),
    #[error("no {format} model for key {key}")]
    NoModel { key: String, format: Format },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Hapi,
    Ngram,
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Hapi => "hapi",
            Format::Ngram => "ngram",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub types: Vec<String>,
    pub format: Format,
    pub file: String,
    /// Occurrences of the key in the training corpus.
    pub occurrences: u64,
    /// Hidden state count chosen on validation data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loglik: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub types: Vec<String>,
    pub occurrences: u64,
    pub reason: String,
}

/// Settings that fix how the corpus was split and modelled, so evaluation
/// can rebuild the same test portion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub seed: u64,
    pub min_sequences: u64,
    pub train_frac: f64,
    pub val_frac: f64,
    pub k_range: Vec<usize>,
    pub ngram_n: usize,
    pub ngram_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    pub settings: TrainSettings,
    pub models: Vec<Entry>,
    #[serde(default)]
    pub skipped: Vec<Skipped>,
}

pub struct ModelStore {
    root: PathBuf,
    index: Index,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a half-written file.
fn write_atomic(path: &Path, text: &str) -> Result<(), StoreError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// `hapi-java.io.File+java.io.Reader.json`: types joined by `+`, anything
/// outside `[A-Za-z0-9._-]` replaced by `_`.
pub fn file_stem(key: &ObjectKey) -> String {
    key.types()
        .map(|t| {
            t.chars()
                .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("+")
}

fn key_of(types: &[String]) -> Option<ObjectKey> {
    ObjectKey::new(types.iter().cloned())
}

impl ModelStore {
    /// Opens the store at `root`, starting an empty index if there is none.
    pub fn create(root: impl Into<PathBuf>, settings: TrainSettings) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let index = if root.join(INDEX_FILE).exists() {
            let mut index = Self::open(&root)?.index;
            if index.settings != settings {
                // Models trained under other settings cannot share one split.
                index.models.clear();
                index.skipped.clear();
            }
            index.settings = settings;
            index
        } else {
            Index {
                settings,
                models: Vec::new(),
                skipped: Vec::new(),
            }
        };
        Ok(Self { root, index })
    }

    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let path = root.join(INDEX_FILE);
        if !path.is_file() {
            return Err(StoreError::NotAStore(root.display().to_string()));
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let index: Index = serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut seen = std::collections::HashSet::new();
        for e in &index.models {
            let corrupt = |reason: String| StoreError::Corrupt {
                path: path.display().to_string(),
                reason,
            };
            if key_of(&e.types).is_none() {
                return Err(corrupt("entry with an empty type set".into()));
            }
            if !seen.insert((e.types.clone(), e.format)) {
                return Err(corrupt(format!("duplicate {} entry for {}", e.format, e.types.join(","))));
            }
            if !root.join(&e.file).is_file() {
                return Err(corrupt(format!("missing model file {}", e.file)));
            }
        }
        Ok(Self { root, index })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    /// Keys with at least one model, in order.
    pub fn keys(&self) -> Vec<ObjectKey> {
        let mut keys: Vec<ObjectKey> = self.index.models.iter().filter_map(|e| key_of(&e.types)).collect();
        keys.dedup();
        keys
    }

    pub fn entry(&self, key: &ObjectKey, format: Format) -> Option<&Entry> {
        self.index
            .models
            .iter()
            .find(|e| e.format == format && key_of(&e.types).as_ref() == Some(key))
    }

    fn unused_file_name(&self, key: &ObjectKey, format: Format) -> String {
        let stem = format!("{format}-{}", file_stem(key));
        let taken = |name: &str| {
            self.index
                .models
                .iter()
                .any(|e| e.file == name && key_of(&e.types).as_ref() != Some(key))
        };
        let mut name = format!("{stem}.json");
        let mut n = 2;
        while taken(&name) {
            name = format!("{stem}-{n}.json");
            n += 1;
        }
        name
    }

    fn put(&mut self, key: &ObjectKey, mut entry: Entry, text: &str) -> Result<(), StoreError> {
        entry.file = match self.entry(key, entry.format) {
            Some(old) => old.file.clone(),
            None => self.unused_file_name(key, entry.format),
        };
        write_atomic(&self.root.join(&entry.file), text)?;
        let types: Vec<String> = key.types().map(str::to_string).collect();
        self.index.models.retain(|e| !(e.format == entry.format && e.types == types));
        self.index.skipped.retain(|s| s.types != types);
        self.index.models.push(entry);
        self.index.models.sort_by(|a, b| (&a.types, a.format).cmp(&(&b.types, b.format)));
        Ok(())
    }

    pub fn put_hapi(&mut self, key: &ObjectKey, model: &Hapi, occurrences: u64) -> Result<(), StoreError> {
        let meta = model.train_meta.as_ref();
        let entry = Entry {
            types: key.types().map(str::to_string).collect(),
            format: Format::Hapi,
            file: String::new(),
            occurrences,
            k: Some(model.num_states()),
            loglik: meta.map(|m| m.loglik),
            iters: meta.map(|m| m.iters),
        };
        self.put(key, entry, &hapi_to_json(model))
    }

    pub fn put_ngram(&mut self, key: &ObjectKey, model: &Ngram, occurrences: u64) -> Result<(), StoreError> {
        let entry = Entry {
            types: key.types().map(str::to_string).collect(),
            format: Format::Ngram,
            file: String::new(),
            occurrences,
            k: None,
            loglik: None,
            iters: None,
        };
        self.put(key, entry, &ngram_to_json(model, Some(key)))
    }

    pub fn record_skip(&mut self, key: &ObjectKey, occurrences: u64, reason: String) {
        let types: Vec<String> = key.types().map(str::to_string).collect();
        self.index.models.retain(|e| e.types != types);
        self.index.skipped.retain(|s| s.types != types);
        self.index.skipped.push(Skipped {
            types,
            occurrences,
            reason,
        });
        self.index.skipped.sort_by(|a, b| a.types.cmp(&b.types));
    }

    pub fn save_index(&self) -> Result<(), StoreError> {
        let mut text = serde_json::to_string_pretty(&self.index).expect("index serializes");
        text.push('\n');
        write_atomic(&self.root.join(INDEX_FILE), &text)
    }

    fn read(&self, key: &ObjectKey, format: Format) -> Result<(PathBuf, String), StoreError> {
        let entry = self.entry(key, format).ok_or_else(|| StoreError::NoModel {
            key: key.to_string(),
            format,
        })?;
        let path = self.root.join(&entry.file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        Ok((path, text))
    }

    pub fn hapi(&self, key: &ObjectKey) -> Result<Hapi, StoreError> {
        let (path, text) = self.read(key, Format::Hapi)?;
        let model: Hapi = hapi_from_json(&text).map_err(|e| corrupt_model(&path, e))?;
        Ok(model.with_key(key.clone()))
    }

    pub fn ngram(&self, key: &ObjectKey) -> Result<Ngram, StoreError> {
        let (path, text) = self.read(key, Format::Ngram)?;
        Ok(ngram_from_json(&text).map_err(|e| corrupt_model(&path, e))?.0)
    }
}

fn corrupt_model(path: &Path, e: ModelError) -> StoreError {
    StoreError::Corrupt {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// Every file a store directory holds, by name, for byte comparisons.
pub fn snapshot(root: &Path) -> Result<BTreeMap<String, Vec<u8>>, StoreError> {
    let mut out = BTreeMap::new();
    for item in fs::read_dir(root).map_err(io_err(root))? {
        let item = item.map_err(io_err(root))?;
        let path = item.path();
        if path.is_file() {
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            out.insert(item.file_name().to_string_lossy().into_owned(), bytes);
        }
    }
    Ok(out)
}
