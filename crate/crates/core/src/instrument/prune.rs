use std::collections::BTreeSet;

use super::*;
use crate::contract::{call_graph, reachable_from, walk_stmts, RESERVED_PREFIX};

/// Removes exit checks that no function reachable from their entry function
/// can trigger, then drops call-depth tracking from entry functions that no
/// longer need it. Returns the number of checks removed.
pub fn prune_checks(program: &Program, spec: &TypedSpec) -> (Program, usize) {
    let graph = call_graph(program).expect("checked program");
    let mut out = program.clone();
    let mut pruned = 0;
    for f in out.functions.iter_mut().filter(|f| f.entry) {
        let mut stored = BTreeSet::new();
        for g in reachable_from(&graph, &f.name) {
            let g = program.function(&g).expect("callee exists");
            walk_stmts(&g.body, &mut |s| {
                if let Stmt::Store(a, _) = s {
                    if !a.var.starts_with(RESERVED_PREFIX) {
                        stored.insert(a.var.clone());
                    }
                }
            });
        }
        let mut body = Vec::with_capacity(f.body.len());
        let mut i = 0;
        while i < f.body.len() {
            if let (Some(rule), Some(Stmt::If(..))) = (gate_rule(&f.body[i]), f.body.get(i + 1)) {
                let deps = match spec.spec.rules.get(rule) {
                    Some(crate::spec_lang::Rule::ForAll(fa)) => spec.spec.expand_vars(&fa.vars()),
                    _ => BTreeSet::new(),
                };
                if deps.is_disjoint(&stored) {
                    pruned += 1;
                    i += 2;
                    continue;
                }
            }
            body.push(f.body[i].clone());
            i += 1;
        }
        f.body = body;
    }

    let checked: BTreeSet<String> = out
        .functions
        .iter()
        .filter(|f| f.body.iter().any(|s| gate_rule(s).is_some()))
        .map(|f| f.name.clone())
        .collect();
    for f in out.functions.iter_mut().filter(|f| f.entry) {
        if checked.contains(&f.name) {
            continue;
        }
        let needed = reachable_from(&graph, &f.name)
            .iter()
            .any(|g| *g != f.name && checked.contains(g));
        if !needed {
            strip_plumbing(&mut f.body);
        }
    }
    (out, pruned)
}

fn is_depth_store(s: &Stmt) -> bool {
    matches!(s, Stmt::Store(a, _) if a.var == CALL_DEPTH)
}

fn strip_plumbing(body: &mut Vec<Stmt>) {
    let head = matches!(body.first(), Some(Stmt::Load(t, a)) if t == DEPTH_BEFORE && a.var == CALL_DEPTH)
        && body.len() >= 4
        && is_depth_store(&body[2])
        && body.last().is_some_and(is_depth_store);
    if head {
        body.pop();
        body.drain(..3);
    }
}
