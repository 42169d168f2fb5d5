use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::ContractError;

/// Function name to the set of functions it calls directly.
pub type CallGraph = BTreeMap<String, BTreeSet<String>>;

/// Builds the direct-call graph. Every `Call` statement contributes an edge,
/// whether or not it can execute.
pub fn call_graph(program: &Program) -> Result<CallGraph, ContractError> {
    let mut graph = CallGraph::new();
    for f in &program.functions {
        let mut callees = BTreeSet::new();
        let mut unknown = None;
        walk_stmts(&f.body, &mut |s| {
            if let Stmt::Call(callee, _) = s {
                if program.function(callee).is_none() && unknown.is_none() {
                    unknown = Some(callee.clone());
                }
                callees.insert(callee.clone());
            }
        });
        if let Some(callee) = unknown {
            return Err(ContractError::UnknownCallee {
                caller: f.name.clone(),
                callee,
            });
        }
        graph.insert(f.name.clone(), callees);
    }
    Ok(graph)
}

/// Functions reachable from `root`, including `root` itself.
pub fn reachable_from(graph: &CallGraph, root: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![root.to_string()];
    while let Some(f) = stack.pop() {
        if !seen.insert(f.clone()) {
            continue;
        }
        if let Some(callees) = graph.get(&f) {
            stack.extend(callees.iter().filter(|c| !seen.contains(*c)).cloned());
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::super::parse_contract;
    use super::*;

    #[test]
    fn no_calls_means_no_edges() {
        let p = parse_contract("contract C { state a: int; entry fn f() { store a, 1; } }").unwrap();
        let g = call_graph(&p).unwrap();
        assert!(g.values().all(|c| c.is_empty()));
    }

    #[test]
    fn cycles_are_kept() {
        let p = parse_contract("contract C { entry fn f() { g(); } fn g() { f(); } }").unwrap();
        let g = call_graph(&p).unwrap();
        assert!(g["f"].contains("g"));
        assert!(g["g"].contains("f"));
        let r = reachable_from(&g, "f");
        assert_eq!(r.len(), 2);
    }

    #[test]
    fn unknown_callee_on_hand_built_program() {
        let p = Program {
            name: "C".into(),
            decls: vec![],
            functions: vec![Function {
                name: "f".into(),
                params: vec![],
                entry: true,
                body: vec![Stmt::Call("nope".into(), vec![])],
            }],
        };
        assert!(matches!(
            call_graph(&p),
            Err(ContractError::UnknownCallee { .. })
        ));
    }
}
