//! API sequence extraction from usage graphs.

use std::collections::HashSet;

use crate::arus::{build_arus, ActionKind, ActionNode, Arus, ArusError};
use crate::cfg::build_cfg;
use crate::corpus::{ApiSequence, Corpus, ObjectKey};
use crate::ir::Method;

/// Class-name prefixes that identify framework API types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiFilter {
    prefixes: Vec<String>,
}

impl Default for ApiFilter {
    fn default() -> Self {
        Self::new(["android.", "java."])
    }
}

impl ApiFilter {
    pub fn new<I, S>(prefixes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            prefixes: prefixes.into_iter().map(Into::into).collect(),
        }
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn is_api_type(&self, ty: &str) -> bool {
        self.prefixes.iter().any(|p| ty.starts_with(p.as_str()))
    }

    /// Method invocations on API classes. Allocations, field accesses and
    /// operators never count as API calls.
    pub fn is_api_action(&self, action: &ActionNode) -> bool {
        action.kind == ActionKind::Invoke
            && action
                .class
                .as_deref()
                .is_some_and(|c| self.is_api_type(c))
    }
}

fn sequence_of(arus: &Arus, filter: &ApiFilter, objects: &[usize]) -> Option<ApiSequence> {
    let calls = arus
        .actions
        .iter()
        .filter(|a| filter.is_api_action(a))
        .filter(|a| objects.iter().any(|&o| arus.touches(a.id, o)))
        .map(|a| a.label.clone())
        .collect();
    ApiSequence::new(calls)
}

/// One sequence per API-typed object node.
pub fn extract_single(arus: &Arus, filter: &ApiFilter) -> Vec<(ObjectKey, ApiSequence)> {
    arus.objects
        .iter()
        .filter(|o| filter.is_api_type(&o.ty))
        .filter_map(|o| sequence_of(arus, filter, &[o.id]).map(|s| (ObjectKey::single(&o.ty), s)))
        .collect()
}

fn action_type_set(arus: &Arus, filter: &ApiFilter, action: usize) -> Option<ObjectKey> {
    ObjectKey::new(
        arus.objects_of(action)
            .map(|o| arus.objects[o].ty.as_str())
            .filter(|ty| filter.is_api_type(ty)),
    )
}

/// Type sets of API objects that share an API action, two or more types each,
/// in order of first appearance.
pub fn usage_dependent_sets(arus: &Arus, filter: &ApiFilter) -> Vec<ObjectKey> {
    let mut out: Vec<ObjectKey> = Vec::new();
    for a in arus.actions.iter().filter(|a| filter.is_api_action(a)) {
        if let Some(key) = action_type_set(arus, filter, a.id) {
            if key.is_multi() && !out.contains(&key) {
                out.push(key);
            }
        }
    }
    out
}

/// The API calls touching any object whose type is in `key`. `None` when no
/// single action ties all of the key's types together in this graph.
pub fn extract_multi(arus: &Arus, key: &ObjectKey, filter: &ApiFilter) -> Option<ApiSequence> {
    let dependent = arus
        .actions
        .iter()
        .filter(|a| filter.is_api_action(a))
        .filter_map(|a| action_type_set(arus, filter, a.id))
        .any(|set| key.types().all(|t| set.contains(t)));
    if !dependent {
        return None;
    }
    let members: Vec<usize> = arus
        .objects
        .iter()
        .filter(|o| key.contains(&o.ty))
        .map(|o| o.id)
        .collect();
    sequence_of(arus, filter, &members)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractConfig {
    pub api_filter: ApiFilter,
    pub max_branch_nodes: usize,
    pub min_method_instructions: usize,
    /// Upper bound on multi-object key size; `None` for no bound.
    pub max_set_size: Option<usize>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            api_filter: ApiFilter::default(),
            max_branch_nodes: 10,
            min_method_instructions: 7,
            max_set_size: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SkipReason {
    TooShort,
    TooManyBranches,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MethodOutcome {
    /// Distinct (key, sequence) pairs across every path of the method.
    Extracted(Vec<(ObjectKey, ApiSequence)>),
    Skipped(SkipReason),
}

pub fn extract_method(method: &Method, config: &ExtractConfig) -> Result<MethodOutcome, ArusError> {
    if method.instructions.len() < config.min_method_instructions {
        return Ok(MethodOutcome::Skipped(SkipReason::TooShort));
    }
    let cfg = build_cfg(method);
    let graphs = match build_arus(method, &cfg, config.max_branch_nodes) {
        Ok(g) => g,
        Err(ArusError::BranchCapExceeded { .. }) => {
            return Ok(MethodOutcome::Skipped(SkipReason::TooManyBranches))
        }
        Err(e) => return Err(e),
    };
    let filter = &config.api_filter;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for arus in &graphs {
        let mut found = extract_single(arus, filter);
        for key in usage_dependent_sets(arus, filter) {
            if config.max_set_size.is_some_and(|cap| key.len() > cap) {
                continue;
            }
            if let Some(seq) = extract_multi(arus, &key, filter) {
                found.push((key, seq));
            }
        }
        for pair in found {
            if seen.insert(pair.clone()) {
                out.push(pair);
            }
        }
    }
    Ok(MethodOutcome::Extracted(out))
}

/// Counts each (key, sequence) once per method that produced it.
pub fn aggregate_corpus<I>(outputs: I) -> Corpus
where
    I: IntoIterator<Item = Vec<(ObjectKey, ApiSequence)>>,
{
    let mut corpus = Corpus::new();
    for method in outputs {
        for (key, seq) in method {
            corpus.add(key, seq, 1);
        }
    }
    corpus
}
