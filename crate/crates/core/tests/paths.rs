mod common;

use std::collections::HashSet;

use apimine_core::arus::DataRole;
use apimine_core::cfg::NodeKind;
use apimine_core::ir::{parse_method, Instruction};
use apimine_core::{build_arus, build_cfg};
use common::{count_simple_paths, produces_action, program, render, Block};
use proptest::prelude::*;

fn diamonds(s: usize) -> String {
    let blocks: Vec<Block> = (0..s)
        .map(|i| {
            Block::Diamond(
                vec![format!("invoke-virtual java.io.File.a{i} (v1)")],
                vec![format!("invoke-virtual java.io.File.b{i} (v1)")],
            )
        })
        .collect();
    render("diamonds", &blocks)
}

#[test]
fn three_diamonds_give_eight_paths() {
    let m = parse_method(&diamonds(3)).unwrap();
    let cfg = build_cfg(&m);
    assert_eq!(count_simple_paths(&cfg), 8);
    assert_eq!(build_arus(&m, &cfg, 10).unwrap().len(), 8);
}

proptest! {
    #[test]
    fn diamond_series_path_count_matches_oracle(s in 0usize..=7) {
        let m = parse_method(&diamonds(s)).unwrap();
        let cfg = build_cfg(&m);
        let expected = count_simple_paths(&cfg);
        prop_assert_eq!(expected, 1 << s);
        prop_assert_eq!(build_arus(&m, &cfg, 10).unwrap().len(), expected);
    }

    #[test]
    fn generated_programs_obey_path_invariants(text in program()) {
        let m = parse_method(&text).unwrap();
        let cfg = build_cfg(&m);
        let all = build_arus(&m, &cfg, 10).unwrap();
        prop_assert!(!all.is_empty());
        for arus in &all {
            let normal: Vec<usize> = arus
                .path
                .iter()
                .copied()
                .filter(|&n| cfg.kind(n) == NodeKind::Normal)
                .collect();
            let distinct: HashSet<_> = normal.iter().collect();
            prop_assert_eq!(distinct.len(), normal.len(), "normal node repeated");

            let mut edges = HashSet::new();
            for w in arus.path.windows(2) {
                if cfg.kind(w[0]) == NodeKind::Control {
                    prop_assert!(edges.insert((w[0], w[1])), "control edge repeated");
                }
                prop_assert!(cfg.successors(w[0]).contains(&w[1]));
            }
            let last = *arus.path.last().unwrap();
            let ends_in_return = matches!(cfg.instruction(last), Instruction::Return { .. });
            prop_assert!(ends_in_return);

            let producing = normal
                .iter()
                .filter(|&&n| produces_action(cfg.instruction(n)))
                .count();
            prop_assert_eq!(arus.actions.len(), producing);

            for e in &arus.data_edges {
                prop_assert!(e.object < arus.objects.len());
                prop_assert!(e.action < arus.actions.len());
            }
            for e in arus.data_edges.iter().filter(|e| e.role == DataRole::Param) {
                for p in arus
                    .data_edges
                    .iter()
                    .filter(|p| p.role == DataRole::Result && p.object == e.object)
                {
                    prop_assert!(p.action < e.action, "object used before it was produced");
                }
            }
            let mut producers = HashSet::new();
            for e in arus.data_edges.iter().filter(|e| e.role == DataRole::Result) {
                prop_assert!(producers.insert(e.object), "object produced twice");
            }
        }
    }

    #[test]
    fn pretty_print_round_trips(text in program()) {
        let m = parse_method(&text).unwrap();
        prop_assert_eq!(parse_method(&m.to_string()).unwrap(), m);
    }

    #[test]
    fn parsed_programs_respect_register_and_label_invariants(text in program()) {
        let m = parse_method(&text).unwrap();
        for ins in &m.instructions {
            for r in ins.registers() {
                prop_assert!(r.0 < m.register_count);
            }
            for l in ins.branch_labels() {
                prop_assert!(m.labels.get(l).is_some_and(|&i| i < m.instructions.len()));
            }
        }
    }
}

#[test]
fn loop_method_gives_two_paths() {
    let text = render(
        "loop",
        &[
            Block::Straight(vec!["new-instance v1 java.util.Iterator".into()]),
            Block::Loop(vec!["invoke-virtual java.util.Iterator.next (v1)".into()]),
        ],
    );
    let m = parse_method(&text).unwrap();
    let all = build_arus(&m, &build_cfg(&m), 10).unwrap();
    assert_eq!(all.len(), 2);
    let counts: Vec<usize> = all.iter().map(|a| a.actions.len()).collect();
    assert!(counts.contains(&1) && counts.contains(&2), "{counts:?}");
}
