//! Per-instruction control-flow graph.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::ir::{Instruction, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Normal,
    Control,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CfgNode {
    pub instruction: Instruction,
    pub kind: NodeKind,
    /// Fallthrough first, then branch targets in source order.
    pub successors: Vec<usize>,
}

/// One node per instruction; node 0 is the entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
}

impl Cfg {
    pub const ENTRY: usize = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn successors(&self, idx: usize) -> &[usize] {
        &self.nodes[idx].successors
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.nodes[idx].kind
    }

    pub fn instruction(&self, idx: usize) -> &Instruction {
        &self.nodes[idx].instruction
    }

    /// Nodes reachable from the entry.
    pub fn reachable(&self) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![Self::ENTRY];
        while let Some(n) = stack.pop() {
            if n < self.len() && seen.insert(n) {
                stack.extend(self.successors(n).iter().copied());
            }
        }
        seen
    }

    /// Nodes the entry can never reach; exploration never visits them.
    pub fn unreachable(&self) -> Vec<usize> {
        let reach = self.reachable();
        (0..self.len()).filter(|n| !reach.contains(n)).collect()
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
        let _ = writeln!(out, "  node [fontname=\"monospace\"];");
        for (i, node) in self.nodes.iter().enumerate() {
            let shape = match node.kind {
                NodeKind::Normal => "box",
                NodeKind::Control => "diamond",
            };
            let _ = writeln!(
                out,
                "  n{i} [shape={shape}, label=\"{i}: {}\"];",
                escape(&node.instruction.to_string())
            );
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for s in &node.successors {
                let _ = writeln!(out, "  n{i} -> n{s};");
            }
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn build_cfg(method: &Method) -> Cfg {
    let n = method.instructions.len();
    let nodes = method
        .instructions
        .iter()
        .enumerate()
        .map(|(i, ins)| {
            let mut successors = Vec::new();
            if ins.falls_through() && i + 1 < n {
                successors.push(i + 1);
            }
            successors.extend(ins.branch_labels().into_iter().map(|l| {
                method
                    .label_target(l)
                    .expect("parser guarantees labels resolve")
            }));
            CfgNode {
                instruction: ins.clone(),
                kind: if ins.is_control() {
                    NodeKind::Control
                } else {
                    NodeKind::Normal
                },
                successors,
            }
        })
        .collect();
    Cfg { nodes }
}

/// Number of `if` instructions, counting a switch with L labels as L ifs.
pub fn count_branch_nodes(cfg: &Cfg) -> usize {
    cfg.nodes
        .iter()
        .map(|n| match &n.instruction {
            Instruction::If { .. } => 1,
            Instruction::Switch { labels, .. } => labels.len(),
            _ => 0,
        })
        .sum()
}
