//! Usage graphs built per execution path.
//!
//! An [`Arus`] records, for one path through a method, the objects involved
//! (object nodes), the operations performed on them in execution order
//! (action nodes, totally ordered) and the data edges telling which objects
//! each action consumed or produced.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::cfg::{count_branch_nodes, escape, Cfg, NodeKind};
use crate::ir::{Instruction, InvokeKind, Method, Register};

pub type ObjectId = usize;
pub type ActionId = usize;

/// Type label of objects whose type cannot be inferred.
pub const UNKNOWN_TYPE: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectNode {
    pub id: ObjectId,
    pub ty: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionKind {
    /// Allocation half of `new-instance`; never part of an API sequence.
    Alloc,
    Invoke,
    FieldGet,
    FieldPut,
    /// Arithmetic and other operators, labeled by the operator name.
    Operation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionNode {
    pub id: ActionId,
    pub label: String,
    pub kind: ActionKind,
    /// Owning class for member actions.
    pub class: Option<String>,
    /// CFG node that produced the action.
    pub node: usize,
    pub is_api: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataRole {
    /// object -> action
    Param,
    /// action -> object
    Result,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DataEdge {
    pub object: ObjectId,
    pub action: ActionId,
    pub role: DataRole,
}

/// Usage graph of one execution path. Control edges are implicit: actions
/// are stored in execution order and each one follows its predecessor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Arus {
    pub objects: Vec<ObjectNode>,
    pub actions: Vec<ActionNode>,
    pub data_edges: Vec<DataEdge>,
    /// CFG nodes visited, in order.
    pub path: Vec<usize>,
}

impl Arus {
    fn add_object(&mut self, ty: impl Into<String>) -> ObjectId {
        let id = self.objects.len();
        self.objects.push(ObjectNode { id, ty: ty.into() });
        id
    }

    fn add_action(
        &mut self,
        label: String,
        kind: ActionKind,
        class: Option<String>,
        node: usize,
    ) -> ActionId {
        let id = self.actions.len();
        self.actions.push(ActionNode {
            id,
            label,
            kind,
            class,
            node,
            is_api: false,
        });
        id
    }

    fn add_edge(&mut self, object: ObjectId, action: ActionId, role: DataRole) {
        let edge = DataEdge {
            object,
            action,
            role,
        };
        if !self.data_edges.contains(&edge) {
            self.data_edges.push(edge);
        }
    }

    /// Control edges as consecutive action pairs.
    pub fn control_edges(&self) -> impl Iterator<Item = (ActionId, ActionId)> + '_ {
        self.actions.windows(2).map(|w| (w[0].id, w[1].id))
    }

    /// Objects data-adjacent to an action, in edge order.
    pub fn objects_of(&self, action: ActionId) -> impl Iterator<Item = ObjectId> + '_ {
        self.data_edges
            .iter()
            .filter(move |e| e.action == action)
            .map(|e| e.object)
    }

    /// Whether the action has a data edge to the object in either direction.
    pub fn touches(&self, action: ActionId, object: ObjectId) -> bool {
        self.data_edges
            .iter()
            .any(|e| e.action == action && e.object == object)
    }

    /// Flags member invocations whose owning class passes `is_api_class`.
    pub fn mark_api(&mut self, is_api_class: impl Fn(&str) -> bool) {
        for a in &mut self.actions {
            a.is_api = a.kind == ActionKind::Invoke
                && a.class.as_deref().is_some_and(&is_api_class);
        }
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
        for o in &self.objects {
            let _ = writeln!(
                out,
                "  o{} [shape=box, style=rounded, label=\"{}\"];",
                o.id,
                escape(&o.ty)
            );
        }
        for a in &self.actions {
            let _ = writeln!(out, "  a{} [shape=box, label=\"{}\"];", a.id, escape(&a.label));
        }
        for (from, to) in self.control_edges() {
            let _ = writeln!(out, "  a{from} -> a{to};");
        }
        for e in &self.data_edges {
            match e.role {
                DataRole::Param => {
                    let _ = writeln!(out, "  o{} -> a{} [style=dashed];", e.object, e.action);
                }
                DataRole::Result => {
                    let _ = writeln!(out, "  a{} -> o{} [style=dashed];", e.action, e.object);
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArusError {
    #[error("method has {branches} branch nodes, above the cap of {cap}")]
    BranchCapExceeded { branches: usize, cap: usize },
    #[error("move-result at node {node} has no preceding invoke on this path")]
    MalformedPath { node: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingResult {
    pub action: ActionId,
    pub ty: String,
}

/// An incomplete execution path and the usage graph built along it.
#[derive(Debug, Clone)]
pub struct ExplorationState {
    pub start_node: usize,
    /// Normal nodes already executed on this path.
    pub explored: BTreeSet<usize>,
    /// Control edges already followed on this path.
    pub taken: BTreeSet<(usize, usize)>,
    pub arus: Arus,
    pub registers: HashMap<Register, ObjectId>,
    /// Invoke whose result a following `move-result` may bind.
    pub pending_result: Option<PendingResult>,
}

impl ExplorationState {
    /// Fresh state at the method entry with one object node per parameter.
    pub fn start(method: &Method) -> Self {
        let mut arus = Arus::default();
        let mut registers = HashMap::new();
        for p in &method.params {
            let id = arus.add_object(p.ty.clone());
            registers.insert(p.reg, id);
        }
        Self {
            start_node: 0,
            explored: BTreeSet::new(),
            taken: BTreeSet::new(),
            arus,
            registers,
            pending_result: None,
        }
    }

    fn object_in(&mut self, reg: Register, fallback_ty: &str) -> ObjectId {
        if let Some(&id) = self.registers.get(&reg) {
            return id;
        }
        let id = self.arus.add_object(fallback_ty);
        self.registers.insert(reg, id);
        id
    }

    fn bind_fresh(&mut self, reg: Register, ty: impl Into<String>) -> ObjectId {
        let id = self.arus.add_object(ty);
        self.registers.insert(reg, id);
        id
    }

    /// Extends the usage graph with one normal instruction at CFG node `node`.
    pub fn apply(&mut self, node: usize, ins: &Instruction) -> Result<(), ArusError> {
        let pending = self.pending_result.take();
        match ins {
            Instruction::NewInstance { dst, class } => {
                let act = self.arus.add_action(
                    format!("{class}.init-alloc"),
                    ActionKind::Alloc,
                    Some(class.clone()),
                    node,
                );
                let obj = self.bind_fresh(*dst, class.clone());
                self.arus.add_edge(obj, act, DataRole::Result);
            }
            Instruction::Invoke {
                kind,
                target,
                args,
                ret,
            } => {
                let objs: Vec<ObjectId> = args
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let receiver = i == 0 && *kind != InvokeKind::Static;
                        let ty = if receiver {
                            target.class_name.as_str()
                        } else {
                            UNKNOWN_TYPE
                        };
                        self.object_in(*r, ty)
                    })
                    .collect();
                let act = self.arus.add_action(
                    target.to_string(),
                    ActionKind::Invoke,
                    Some(target.class_name.clone()),
                    node,
                );
                for o in objs {
                    self.arus.add_edge(o, act, DataRole::Param);
                }
                self.pending_result = Some(PendingResult {
                    action: act,
                    ty: ret.clone().unwrap_or_else(|| UNKNOWN_TYPE.to_string()),
                });
            }
            Instruction::MoveResult { dst } => {
                let pending = pending.ok_or(ArusError::MalformedPath { node })?;
                let obj = self.bind_fresh(*dst, pending.ty);
                self.arus.add_edge(obj, pending.action, DataRole::Result);
            }
            Instruction::Const { dst, literal } => {
                self.bind_fresh(*dst, literal_type(literal));
            }
            Instruction::Move { dst, src } => {
                let obj = self.object_in(*src, UNKNOWN_TYPE);
                self.registers.insert(*dst, obj);
            }
            Instruction::Binop { op, dst, a, b } => {
                let oa = self.object_in(*a, UNKNOWN_TYPE);
                let ob = self.object_in(*b, UNKNOWN_TYPE);
                let act = self
                    .arus
                    .add_action(op.clone(), ActionKind::Operation, None, node);
                self.arus.add_edge(oa, act, DataRole::Param);
                self.arus.add_edge(ob, act, DataRole::Param);
                let ty = op
                    .rsplit_once('-')
                    .map(|(_, ty)| ty)
                    .unwrap_or(UNKNOWN_TYPE)
                    .to_string();
                let out = self.bind_fresh(*dst, ty);
                self.arus.add_edge(out, act, DataRole::Result);
            }
            Instruction::FieldGet { dst, obj, field } => {
                let o = self.object_in(*obj, &field.class_name);
                let act = self.arus.add_action(
                    field.to_string(),
                    ActionKind::FieldGet,
                    Some(field.class_name.clone()),
                    node,
                );
                self.arus.add_edge(o, act, DataRole::Param);
                let out = self.bind_fresh(*dst, UNKNOWN_TYPE);
                self.arus.add_edge(out, act, DataRole::Result);
            }
            Instruction::FieldPut { src, obj, field } => {
                let v = self.object_in(*src, UNKNOWN_TYPE);
                let o = self.object_in(*obj, &field.class_name);
                let act = self.arus.add_action(
                    field.to_string(),
                    ActionKind::FieldPut,
                    Some(field.class_name.clone()),
                    node,
                );
                self.arus.add_edge(v, act, DataRole::Param);
                self.arus.add_edge(o, act, DataRole::Param);
            }
            Instruction::If { .. }
            | Instruction::Goto { .. }
            | Instruction::Switch { .. }
            | Instruction::Return { .. }
            | Instruction::Throw { .. } => {
                unreachable!("control instructions never reach the usage-graph builder")
            }
        }
        Ok(())
    }
}

fn literal_type(literal: &str) -> &'static str {
    if literal.starts_with('"') {
        "string"
    } else {
        "int"
    }
}

/// Enumerates execution paths of `cfg` and builds one usage graph per path
/// that ends in a `return`.
///
/// Each normal node runs at most once per path and each control edge is
/// followed at most once, so a loop body executes zero or one times while
/// the loop header may be re-evaluated to leave the loop. Paths ending in
/// `throw` are dropped. Output order is deterministic: the fallthrough
/// successor is explored first.
pub fn build_arus(method: &Method, cfg: &Cfg, max_branch_nodes: usize) -> Result<Vec<Arus>, ArusError> {
    let branches = count_branch_nodes(cfg);
    if branches > max_branch_nodes {
        return Err(ArusError::BranchCapExceeded {
            branches,
            cap: max_branch_nodes,
        });
    }
    let mut done = Vec::new();
    let mut frontier = vec![ExplorationState::start(method)];
    'paths: while let Some(mut state) = frontier.pop() {
        let mut node = state.start_node;
        while cfg.kind(node) == NodeKind::Normal {
            if !state.explored.insert(node) {
                continue 'paths;
            }
            state.arus.path.push(node);
            state.apply(node, cfg.instruction(node))?;
            node = cfg.successors(node)[0];
        }
        state.arus.path.push(node);
        match cfg.instruction(node) {
            Instruction::Return { .. } => {
                done.push(state.arus);
                continue;
            }
            Instruction::Throw { .. } => continue,
            _ => {}
        }
        // Control nodes do not consume a pending invoke result.
        for &next in cfg.successors(node).iter().rev() {
            if state.explored.contains(&next) || state.taken.contains(&(node, next)) {
                continue;
            }
            let mut fork = state.clone();
            fork.taken.insert((node, next));
            fork.start_node = next;
            frontier.push(fork);
        }
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::build_cfg;
    use crate::ir::parse_method;

    fn arus_of(text: &str) -> Vec<Arus> {
        let m = parse_method(text).unwrap();
        build_arus(&m, &build_cfg(&m), 10).unwrap()
    }

    fn labels(a: &Arus) -> Vec<&str> {
        a.actions.iter().map(|a| a.label.as_str()).collect()
    }

    #[test]
    fn new_instance_maps_destination() {
        let m = parse_method(".method A.f 1 ()\n  new-instance v0 java.io.FileReader\n  return\n.end\n").unwrap();
        let mut st = ExplorationState::start(&m);
        st.apply(0, &m.instructions[0]).unwrap();
        let obj = st.registers[&Register(0)];
        assert_eq!(st.arus.objects[obj].ty, "java.io.FileReader");
        assert_eq!(st.arus.actions[0].label, "java.io.FileReader.init-alloc");
        assert_eq!(st.arus.actions[0].kind, ActionKind::Alloc);
    }

    #[test]
    fn invoke_then_move_result() {
        let m = parse_method(
            "\
.method A.f 3 (v2:java.io.BufferedReader)
  move v0 v2
  invoke-virtual java.io.BufferedReader.readLine (v0) java.lang.String
  move-result v1
  return
.end
",
        )
        .unwrap();
        let mut st = ExplorationState::start(&m);
        for (i, ins) in m.instructions.iter().take(3).enumerate() {
            st.apply(i, ins).unwrap();
        }
        let reader = st.registers[&Register(2)];
        assert_eq!(st.registers[&Register(0)], reader);
        let line = st.registers[&Register(1)];
        assert_eq!(st.arus.objects[line].ty, "java.lang.String");
        assert_eq!(st.arus.actions.len(), 1);
        assert_eq!(st.arus.actions[0].label, "java.io.BufferedReader.readLine");
        assert_eq!(
            st.arus.data_edges,
            vec![
                DataEdge {
                    object: reader,
                    action: 0,
                    role: DataRole::Param
                },
                DataEdge {
                    object: line,
                    action: 0,
                    role: DataRole::Result
                },
            ]
        );
    }

    #[test]
    fn move_aliases_without_new_nodes() {
        let m = parse_method(".method A.f 4 ()\n  new-instance v0 a.B\n  move v3 v0\n  return\n.end\n").unwrap();
        let mut st = ExplorationState::start(&m);
        st.apply(0, &m.instructions[0]).unwrap();
        let before = (st.arus.objects.len(), st.arus.actions.len());
        st.apply(1, &m.instructions[1]).unwrap();
        assert_eq!(st.registers[&Register(3)], st.registers[&Register(0)]);
        assert_eq!((st.arus.objects.len(), st.arus.actions.len()), before);
    }

    #[test]
    fn move_result_without_invoke_is_malformed() {
        let m = parse_method(".method A.f 1 ()\n  move-result v0\n  return\n.end\n").unwrap();
        assert_eq!(
            build_arus(&m, &build_cfg(&m), 10),
            Err(ArusError::MalformedPath { node: 0 })
        );
    }

    #[test]
    fn one_if_two_paths() {
        let all = arus_of(
            "\
.method A.f 2 ()
  new-instance v0 a.B
  const v1 0
  if eqz v1 0 :else
  invoke-virtual a.B.x (v0)
  goto :end
:else
  invoke-virtual a.B.y (v0)
:end
  return
.end
",
        );
        assert_eq!(all.len(), 2);
        assert_eq!(labels(&all[0]), vec!["a.B.init-alloc", "a.B.x"]);
        assert_eq!(labels(&all[1]), vec!["a.B.init-alloc", "a.B.y"]);
    }

    #[test]
    fn loop_runs_zero_or_one_times() {
        let all = arus_of(
            "\
.method A.f 2 ()
  new-instance v0 a.It
  const v1 0
:top
  if eqz v1 0 :out
  invoke-virtual a.It.next (v0)
  goto :top
:out
  invoke-virtual a.It.close (v0)
  return
.end
",
        );
        assert_eq!(all.len(), 2);
        let mut seqs: Vec<_> = all.iter().map(labels).collect();
        seqs.sort();
        assert_eq!(
            seqs,
            vec![
                vec!["a.It.init-alloc", "a.It.close"],
                vec!["a.It.init-alloc", "a.It.next", "a.It.close"],
            ]
        );
    }

    #[test]
    fn throw_paths_are_dropped() {
        let all = arus_of(
            "\
.method A.f 1 ()
  const v0 0
  if eqz v0 0 :bad
  return
:bad
  throw v0
.end
",
        );
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn control_only_cycle_terminates() {
        let all = arus_of(
            "\
.method A.f 1 ()
  const v0 0
:a
  if eqz v0 0 :b
  return
:b
  goto :a
.end
",
        );
        assert_eq!(all.len(), 2);
    }

    #[test]
    fn no_return_means_no_arus() {
        assert!(arus_of(".method A.f 1 ()\n  const v0 0\n  throw v0\n.end\n").is_empty());
    }

    #[test]
    fn branch_cap_enforced() {
        let mut text = String::from(".method A.f 1 ()\n  const v0 0\n");
        for i in 0..11 {
            text.push_str(&format!("  if eqz v0 0 :l{i}\n:l{i}\n"));
        }
        text.push_str("  return\n.end\n");
        let m = parse_method(&text).unwrap();
        assert_eq!(
            build_arus(&m, &build_cfg(&m), 10),
            Err(ArusError::BranchCapExceeded {
                branches: 11,
                cap: 10
            })
        );
        assert!(build_arus(&m, &build_cfg(&m), 11).is_ok());
    }

    #[test]
    fn unmapped_receiver_typed_by_target() {
        let all = arus_of(".method A.f 2 ()\n  invoke-virtual a.B.go (v0, v1)\n  return\n.end\n");
        let tys: Vec<_> = all[0].objects.iter().map(|o| o.ty.as_str()).collect();
        assert_eq!(tys, vec!["a.B", UNKNOWN_TYPE]);
    }

    #[test]
    fn dot_uses_rounded_objects_and_dashed_data_edges() {
        let all = arus_of(".method A.f 1 ()\n  new-instance v0 a.B\n  invoke-virtual a.B.go (v0)\n  return\n.end\n");
        let dot = all[0].to_dot("A.f");
        assert!(dot.contains("o0 [shape=box, style=rounded, label=\"a.B\"]"));
        assert!(dot.contains("a0 -> a1;"));
        assert!(dot.contains("o0 -> a1 [style=dashed];"));
        assert!(dot.contains("a0 -> o0 [style=dashed];"));
    }
}
