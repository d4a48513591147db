#![allow(dead_code)]

use std::collections::BTreeSet;

use apimine_core::cfg::Cfg;
use apimine_core::ir::Instruction;
use proptest::prelude::*;

pub const REGS: u16 = 6;

#[derive(Debug, Clone)]
pub enum Block {
    Straight(Vec<String>),
    Diamond(Vec<String>, Vec<String>),
    Loop(Vec<String>),
}

fn reg() -> impl Strategy<Value = String> {
    (0..REGS).prop_map(|r| format!("v{r}"))
}

fn class() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["java.io.File", "java.util.List", "android.view.View", "app.Local"])
        .prop_map(str::to_string)
}

fn member() -> impl Strategy<Value = String> {
    (class(), prop::sample::select(vec!["open", "add", "close", "init"]))
        .prop_map(|(c, m)| format!("{c}.{m}"))
}

pub fn instruction() -> impl Strategy<Value = String> {
    prop_oneof![
        (reg(), class()).prop_map(|(d, c)| format!("new-instance {d} {c}")),
        (
            prop::sample::select(vec!["invoke-virtual", "invoke-static", "invoke-direct"]),
            member(),
            prop::collection::vec(reg(), 0..3),
            prop::option::of(class()),
            reg(),
            any::<bool>(),
        )
            .prop_map(|(k, m, args, ret, dst, mv)| {
                let mut s = format!("{k} {m} ({})", args.join(", "));
                if let Some(r) = ret {
                    s.push(' ');
                    s.push_str(&r);
                }
                if mv {
                    s.push_str(&format!("\n  move-result {dst}"));
                }
                s
            }),
        (reg(), 0..100i32).prop_map(|(d, l)| format!("const {d} {l}")),
        (reg(), "[a-z]{1,4}").prop_map(|(d, l)| format!("const {d} \"{l}\"")),
        (reg(), reg()).prop_map(|(d, s)| format!("move {d} {s}")),
        (reg(), reg(), reg()).prop_map(|(d, a, b)| format!("binop add-int {d} {a} {b}")),
        (reg(), reg(), class()).prop_map(|(d, o, c)| format!("iget {d} {o} {c}.f")),
        (reg(), reg(), class()).prop_map(|(s, o, c)| format!("iput {s} {o} {c}.f")),
    ]
}

fn straight() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(instruction(), 1..4)
}

pub fn block() -> impl Strategy<Value = Block> {
    prop_oneof![
        straight().prop_map(Block::Straight),
        (straight(), straight()).prop_map(|(a, b)| Block::Diamond(a, b)),
        straight().prop_map(Block::Loop),
    ]
}

/// Renders blocks as a method body; every label is unique.
pub fn render(name: &str, blocks: &[Block]) -> String {
    let mut out = format!(".method app.Gen.{name} {REGS} ()\n");
    let push = |out: &mut String, lines: &[String]| {
        for l in lines {
            out.push_str("  ");
            out.push_str(l);
            out.push('\n');
        }
    };
    for (i, b) in blocks.iter().enumerate() {
        match b {
            Block::Straight(lines) => push(&mut out, lines),
            Block::Diamond(a, b) => {
                out.push_str(&format!("  if eqz v0 0 :else{i}\n"));
                push(&mut out, a);
                out.push_str(&format!("  goto :join{i}\n:else{i}\n"));
                push(&mut out, b);
                out.push_str(&format!(":join{i}\n"));
            }
            Block::Loop(body) => {
                out.push_str(&format!(":top{i}\n  if eqz v0 0 :out{i}\n"));
                push(&mut out, body);
                out.push_str(&format!("  goto :top{i}\n:out{i}\n"));
            }
        }
    }
    out.push_str("  return\n.end\n");
    out
}

pub fn program() -> impl Strategy<Value = String> {
    prop::collection::vec(block(), 1..6).prop_map(|b| render("gen", &b))
}

/// Paths from the entry to any return, by plain recursive DFS over simple paths.
pub fn count_simple_paths(cfg: &Cfg) -> usize {
    fn go(cfg: &Cfg, n: usize, on_path: &mut BTreeSet<usize>) -> usize {
        if matches!(cfg.instruction(n), Instruction::Return { .. }) {
            return 1;
        }
        if !on_path.insert(n) {
            return 0;
        }
        let total = cfg
            .successors(n)
            .iter()
            .map(|&s| go(cfg, s, on_path))
            .sum();
        on_path.remove(&n);
        total
    }
    go(cfg, Cfg::ENTRY, &mut BTreeSet::new())
}

pub fn produces_action(ins: &Instruction) -> bool {
    matches!(
        ins,
        Instruction::NewInstance { .. }
            | Instruction::Invoke { .. }
            | Instruction::Binop { .. }
            | Instruction::FieldGet { .. }
            | Instruction::FieldPut { .. }
    )
}
