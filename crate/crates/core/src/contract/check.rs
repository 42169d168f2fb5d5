use std::collections::{BTreeSet, HashSet};

use super::ast::*;
use super::ContractError;

/// Well-formedness checks run after parsing.
pub fn check_program(program: &Program) -> Result<(), ContractError> {
    let mut seen = HashSet::new();
    for d in &program.decls {
        if !seen.insert(d.name.as_str()) {
            return Err(ContractError::DuplicateState(d.name.clone()));
        }
    }
    let mut fns = HashSet::new();
    for f in &program.functions {
        if !fns.insert(f.name.as_str()) {
            return Err(ContractError::DuplicateFunction(f.name.clone()));
        }
    }
    for f in &program.functions {
        let mut params = HashSet::new();
        for p in &f.params {
            if !params.insert(p.as_str()) {
                return Err(ContractError::DuplicateParam {
                    function: f.name.clone(),
                    param: p.clone(),
                });
            }
        }
        let mut defined: BTreeSet<String> = f.params.iter().cloned().collect();
        check_body(program, f, &f.body, &mut defined)?;
    }
    Ok(())
}

fn check_expr(f: &Function, e: &CExpr, defined: &BTreeSet<String>) -> Result<(), ContractError> {
    let mut missing = None;
    e.for_each_temp(&mut |t| {
        if missing.is_none() && !defined.contains(t) {
            missing = Some(t.to_string());
        }
    });
    match missing {
        Some(temp) => Err(ContractError::UndeclaredTemp {
            function: f.name.clone(),
            temp,
        }),
        None => Ok(()),
    }
}

fn check_address(
    program: &Program,
    f: &Function,
    a: &Address,
    defined: &BTreeSet<String>,
) -> Result<(), ContractError> {
    let decl = program
        .decl(&a.var)
        .ok_or_else(|| ContractError::UnknownState(a.var.clone()))?;
    if decl.arity != a.indices.len() {
        return Err(ContractError::ArityMismatch {
            var: a.var.clone(),
            expected: decl.arity,
            found: a.indices.len(),
        });
    }
    for ix in &a.indices {
        check_expr(f, ix, defined)?;
    }
    Ok(())
}

fn check_body(
    program: &Program,
    f: &Function,
    body: &[Stmt],
    defined: &mut BTreeSet<String>,
) -> Result<(), ContractError> {
    for stmt in body {
        match stmt {
            Stmt::Assign(t, e) => {
                check_expr(f, e, defined)?;
                defined.insert(t.clone());
            }
            Stmt::Load(t, a) => {
                check_address(program, f, a, defined)?;
                defined.insert(t.clone());
            }
            Stmt::Store(a, e) => {
                check_address(program, f, a, defined)?;
                check_expr(f, e, defined)?;
            }
            Stmt::If(c, inner) => {
                check_expr(f, c, defined)?;
                check_body(program, f, inner, defined)?;
            }
            Stmt::ForIn { temps, map, body } => {
                let decl = program
                    .decl(map)
                    .ok_or_else(|| ContractError::UnknownState(map.clone()))?;
                if decl.arity == 0 || temps.len() > decl.arity {
                    return Err(ContractError::ArityMismatch {
                        var: map.clone(),
                        expected: decl.arity,
                        found: temps.len(),
                    });
                }
                let distinct: HashSet<_> = temps.iter().collect();
                if distinct.len() != temps.len() {
                    return Err(ContractError::ForInUnusedIterator {
                        function: f.name.clone(),
                        map: map.clone(),
                    });
                }
                defined.extend(temps.iter().cloned());
                check_body(program, f, body, defined)?;
                if for_in_positions(temps, map, body).is_none() {
                    return Err(ContractError::ForInUnusedIterator {
                        function: f.name.clone(),
                        map: map.clone(),
                    });
                }
            }
            Stmt::Assert(c) => check_expr(f, c, defined)?,
            Stmt::Call(callee, args) => {
                let target = program
                    .function(callee)
                    .ok_or_else(|| ContractError::UnknownCallee {
                        caller: f.name.clone(),
                        callee: callee.clone(),
                    })?;
                if target.params.len() != args.len() {
                    return Err(ContractError::CallArity {
                        callee: callee.clone(),
                        expected: target.params.len(),
                        found: args.len(),
                    });
                }
                for a in args {
                    check_expr(f, a, defined)?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse_contract;
    use super::*;

    #[test]
    fn for_in_requires_iterator_as_index() {
        let src = "contract C { state balances: map^1; state total: int;
            fn f() { for i in balances { x = load total; } } }";
        assert!(matches!(
            parse_contract(src),
            Err(ContractError::ForInUnusedIterator { .. })
        ));
        let ok = "contract C { state balances: map^1;
            fn f() { for i in balances { x = load balances[i]; } } }";
        parse_contract(ok).unwrap();
    }

    #[test]
    fn duplicates_and_undeclared() {
        assert!(matches!(
            parse_contract("contract C { state a: int; state a: int; }"),
            Err(ContractError::DuplicateState(_))
        ));
        assert!(matches!(
            parse_contract("contract C { fn f() {} fn f() {} }"),
            Err(ContractError::DuplicateFunction(_))
        ));
        assert!(matches!(
            parse_contract("contract C { state a: int; fn f() { store a, y; } }"),
            Err(ContractError::UndeclaredTemp { .. })
        ));
        assert!(matches!(
            parse_contract("contract C { state a: map^2; fn f(k) { x = load a[k]; } }"),
            Err(ContractError::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse_contract("contract C { fn f() { g(); } }"),
            Err(ContractError::UnknownCallee { .. })
        ));
    }
}
