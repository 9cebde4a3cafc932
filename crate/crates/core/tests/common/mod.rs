//! Independent oracles shared by the integration tests. Nothing here calls
//! into the height analysis, the solver or the scorer.
#![allow(dead_code)]

use proptest::prelude::*;
use slsynth_core::grammar::build::grammar;
use slsynth_core::{CategoryId, CategoryKind, Children, Grammar, MgRule, NmgRule, NodeId, SyncType, SyntaxTree};

/// Horn-clause reading of a grammar: `C :- D1, ..., Dk` for every rule
/// `C(D1..Dk)`. Naive forward chaining returns the set of derivable
/// categories.
pub fn horn_derivable(g: &Grammar) -> Vec<bool> {
    let clauses: Vec<(usize, Vec<usize>)> = g
        .mg_rules
        .iter()
        .map(|r| (r.head.index(), r.left.iter().chain(&r.right).map(|c| c.index()).collect()))
        .chain(g.nmg_rules.iter().map(|r| (r.head.index(), vec![r.dependent.index()])))
        .collect();
    let mut known = vec![false; g.categories.len()];
    loop {
        let mut fired = false;
        for (head, body) in &clauses {
            if !known[*head] && body.iter().all(|b| known[*b]) {
                known[*head] = true;
                fired = true;
            }
        }
        if !fired {
            return known;
        }
    }
}

/// Shallowest derivation depth of every category, by building the table
/// `within[d][c]` = "c has a derivation tree of depth at most d" layer by
/// layer up to `max_depth`.
pub fn brute_heights(g: &Grammar, max_depth: u32) -> Vec<Option<u32>> {
    let n = g.categories.len();
    let mut within = vec![false; n];
    let mut out = vec![None; n];
    for d in 1..=max_depth {
        let prev = within.clone();
        for c in 0..n {
            let cat = CategoryId(c as u32);
            let mg = g
                .mg_rules
                .iter()
                .filter(|r| r.head == cat)
                .any(|r| r.left.iter().chain(&r.right).all(|x| prev[x.index()]));
            let nmg = g.nmg_rules.iter().filter(|r| r.head == cat).any(|r| prev[r.dependent.index()]);
            if mg || nmg {
                within[c] = true;
                out[c].get_or_insert(d);
            }
        }
    }
    out
}

/// Manual gestures of a tree in in-order: left dependents, head, right
/// dependents, with markers passing through to their dependent.
pub fn manual_in_order(t: &SyntaxTree) -> Vec<NodeId> {
    fn go(t: &SyntaxTree, n: NodeId, out: &mut Vec<NodeId>) {
        match &t.nodes[n as usize].children {
            Children::Mg { left, right } => {
                left.iter().for_each(|&c| go(t, c, out));
                out.push(n);
                right.iter().for_each(|&c| go(t, c, out));
            }
            Children::Nmg { marked } => go(t, *marked, out),
        }
    }
    let mut out = Vec::new();
    go(t, t.root, &mut out);
    out
}

/// A small random grammar: up to `max_cats` categories (the first manual),
/// up to three rules each, dependents drawn from all categories. May well
/// be infinite.
pub fn small_grammar(max_cats: usize) -> impl Strategy<Value = Grammar> {
    (1..=max_cats)
        .prop_flat_map(|n| {
            let kinds = proptest::collection::vec(any::<bool>(), n);
            let rules =
                proptest::collection::vec((0..n, proptest::collection::vec(0..n, 0..=3), 0usize..=3), 0..=(3 * n));
            (Just(n), kinds, rules)
        })
        .prop_map(|(n, kinds, rules)| {
            let labels: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
            let cats: Vec<(&str, CategoryKind)> = labels
                .iter()
                .zip(&kinds)
                .enumerate()
                .map(|(i, (l, nmg))| (l.as_str(), if *nmg && i > 0 { CategoryKind::Nmg } else { CategoryKind::Mg }))
                .collect();
            let mut g = grammar(&cats).with_units(SyncType::NmgFull, 0.5);
            for (id, (head, deps, star)) in rules.into_iter().enumerate() {
                let head = CategoryId(head as u32);
                let deps: Vec<CategoryId> = deps.into_iter().map(|d| CategoryId(d as u32)).collect();
                match g.kind(head).unwrap() {
                    CategoryKind::Mg => {
                        let star = star.min(deps.len());
                        g.mg_rules.push(MgRule {
                            id: id as u32,
                            head,
                            left: deps[..star].to_vec(),
                            right: deps[star..].to_vec(),
                            permutation_of: None,
                        });
                    }
                    CategoryKind::Nmg => {
                        let dependent = deps.first().copied().unwrap_or(CategoryId(0));
                        g.nmg_rules.push(NmgRule { id: id as u32, head, dependent });
                    }
                }
            }
            g
        })
}
