use std::collections::{BTreeSet, HashMap};

use crate::ModelError;

/// Method names indexed densely, kept in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Sorted and deduplicated.
    pub fn new<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = symbols.into_iter().map(Into::into).collect();
        Self::from_ordered(set.into_iter().collect()).expect("deduplicated")
    }

    /// Keeps the given order; rejects duplicates.
    pub fn from_ordered(symbols: Vec<String>) -> Result<Self, ModelError> {
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(ModelError::InvalidModel(format!("duplicate vocabulary entry {s}")));
            }
        }
        Ok(Self { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn encode<S: AsRef<str>>(&self, calls: &[S]) -> Result<Vec<usize>, ModelError> {
        calls
            .iter()
            .map(|c| {
                self.get(c.as_ref())
                    .ok_or_else(|| ModelError::OutOfVocabulary(c.as_ref().to_string()))
            })
            .collect()
    }

    pub fn decode(&self, seq: &[usize]) -> Vec<String> {
        seq.iter().map(|&i| self.symbols[i].clone()).collect()
    }
}
