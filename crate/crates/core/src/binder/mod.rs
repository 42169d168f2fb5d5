//! Free-variable binding analysis: which invariant instances can a store to
//! a given address affect, and how to instantiate a template for them.

mod rewrite;
pub mod template;

use serde_json::{json, Value};
use thiserror::Error;

use crate::contract::{address_to_string, expr_to_string, walk_stmts, Address, CExpr, Program, Stmt};
use crate::spec_lang::{print_expr, ICond, IExpr, InvariantSpec, Rule};

pub use rewrite::{rewrite, RewriteCtx};
pub use template::{free_vars, lower, NameGen, TExpr, TStmt};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindError {
    #[error("free variable `{0}` has no binding and indexes no map to iterate")]
    UnboundFreeVarNoMap(String),
    #[error("free variable `{0}` survived rewriting")]
    ResidualFreeVar(String),
}

/// A set of `free var -> contract expression` pairs. A variable may appear
/// more than once; rewriting turns the extra pairs into equality guards.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingMap {
    pub pairs: Vec<(String, CExpr)>,
}

impl BindingMap {
    fn insert(&mut self, x: &str, e: &CExpr) {
        if !self.pairs.iter().any(|(v, f)| v == x && f == e) {
            self.pairs.push((x.to_string(), e.clone()));
        }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.pairs
                .iter()
                .map(|(x, e)| json!([x, expr_to_string(e)]))
                .collect(),
        )
    }
}

/// Union of binding maps. Empty means the store cannot affect the expression.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BindingSet {
    pub maps: Vec<BindingMap>,
}

impl BindingSet {
    pub fn empty() -> Self {
        BindingSet { maps: Vec::new() }
    }

    /// `{∅}`: the store affects the expression for every assignment.
    pub fn unit() -> Self {
        BindingSet {
            maps: vec![BindingMap::default()],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn union(mut self, other: BindingSet) -> Self {
        for m in other.maps {
            if !self.maps.contains(&m) {
                self.maps.push(m);
            }
        }
        self
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.maps.iter().map(BindingMap::to_json).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CondBinding {
    None,
    Bound(String, IExpr),
}

impl CondBinding {
    pub fn to_json(&self) -> Value {
        match self {
            CondBinding::None => Value::Null,
            CondBinding::Bound(x, e) => json!([x, print_expr(e)]),
        }
    }
}

pub fn bind_expr(addr: &Address, e: &IExpr) -> BindingSet {
    match e {
        IExpr::Int(_) | IExpr::Free(_) => BindingSet::empty(),
        IExpr::Var(v) => {
            if *v == addr.var && addr.indices.is_empty() {
                BindingSet::unit()
            } else {
                BindingSet::empty()
            }
        }
        IExpr::Index(v, xs) => {
            if *v != addr.var || xs.len() != addr.indices.len() {
                return BindingSet::empty();
            }
            let mut m = BindingMap::default();
            for (x, a) in xs.iter().zip(&addr.indices) {
                m.insert(x, a);
            }
            BindingSet { maps: vec![m] }
        }
        IExpr::Bin(_, l, r) => bind_expr(addr, l).union(bind_expr(addr, r)),
    }
}

pub fn bind_cond_expr(addr: &Address, c: &ICond) -> BindingSet {
    match c {
        ICond::Cmp(_, l, r) => bind_expr(addr, l).union(bind_expr(addr, r)),
        ICond::EqFree(e, _) => bind_expr(addr, e),
        ICond::And(l, r) => bind_cond_expr(addr, l).union(bind_cond_expr(addr, r)),
    }
}

/// Leftmost `e == x` conjunct with `x` absent from `e`. The address does not
/// influence the result; it is kept for symmetry with [`bind_expr`].
pub fn bind_cond(_addr: &Address, c: &ICond) -> CondBinding {
    match c {
        ICond::EqFree(e, x) if !e.mentions_free(x) => CondBinding::Bound(x.clone(), e.clone()),
        ICond::And(l, r) => match bind_cond(_addr, l) {
            CondBinding::None => bind_cond(_addr, r),
            b => b,
        },
        _ => CondBinding::None,
    }
}

/// Every store in `program` paired with the bindings each spec rule derives
/// for it. Stores no rule binds are omitted.
pub fn binding_dump(program: &Program, spec: &InvariantSpec) -> Value {
    let mut out = Vec::new();
    for f in &program.functions {
        walk_stmts(&f.body, &mut |s| {
            let Stmt::Store(a, _) = s else { return };
            for (i, rule) in spec.rules.iter().enumerate() {
                let (set, cb) = match rule {
                    Rule::MapSum(m) => {
                        let mut set = bind_expr(a, &m.body);
                        let mut cb = CondBinding::None;
                        if let Some(c) = &m.cond {
                            set = set.union(bind_cond_expr(a, c));
                            cb = bind_cond(a, c);
                        }
                        (set, cb)
                    }
                    Rule::ForAll(fa) => (bind_cond_expr(a, &fa.body), CondBinding::None),
                };
                if set.is_empty() {
                    continue;
                }
                out.push(json!({
                    "function": f.name,
                    "store": address_to_string(a),
                    "rule": i,
                    "bindings": set.to_json(),
                    "cond_binding": cb.to_json(),
                }));
            }
        });
    }
    Value::Array(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::{parse_spec, Rule};

    fn addr(var: &str, ix: &[&str]) -> Address {
        Address::map(var, ix.iter().map(|t| CExpr::temp(*t)).collect())
    }

    fn vote_rule() -> crate::spec_lang::MapSum {
        let spec = parse_spec(
            "s = Map a, b Sum weights[a][c] Over c Where ballots[a][c] == b && b != 0;",
        )
        .unwrap();
        match &spec.rules[0] {
            Rule::MapSum(m) => m.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn ballots_store_binds_issue_and_sender() {
        let m = vote_rule();
        let a = Address::map(
            "ballots",
            vec![CExpr::temp("issueId"), CExpr::Builtin(crate::contract::Builtin::Sender)],
        );
        let b = bind_cond_expr(&a, m.cond.as_ref().unwrap());
        assert_eq!(b.maps.len(), 1);
        assert_eq!(
            b.maps[0].pairs,
            vec![
                ("a".to_string(), CExpr::temp("issueId")),
                ("c".to_string(), CExpr::Builtin(crate::contract::Builtin::Sender)),
            ]
        );
    }

    #[test]
    fn other_base_var_binds_nothing() {
        let m = vote_rule();
        assert!(bind_expr(&addr("ballots", &["i", "j"]), &m.body).is_empty());
    }

    #[test]
    fn scalar_store() {
        assert!(bind_expr(&Address::scalar("totalSupply"), &IExpr::Int(0.into())).is_empty());
        let v = IExpr::Var("totalSupply".into());
        assert_eq!(bind_expr(&Address::scalar("totalSupply"), &v), BindingSet::unit());
    }

    #[test]
    fn cond_binding_leftmost_and_self_reference() {
        let m = vote_rule();
        let a = addr("x", &["i"]);
        assert_eq!(
            bind_cond(&a, m.cond.as_ref().unwrap()),
            CondBinding::Bound(
                "b".into(),
                IExpr::Index("ballots".into(), vec!["a".into(), "c".into()])
            )
        );
        let own = ICond::EqFree(
            IExpr::bin(crate::spec_lang::ArithOp::Add, IExpr::Free("x".into()), IExpr::Int(1.into())),
            "x".into(),
        );
        assert_eq!(bind_cond(&a, &own), CondBinding::None);
    }

    #[test]
    fn repeated_occurrences_are_deduplicated() {
        let spec = parse_spec("t = Map Sum balances[y] + balances[y] Over y;").unwrap();
        let Rule::MapSum(m) = &spec.rules[0] else { unreachable!() };
        let b = bind_expr(&addr("balances", &["to"]), &m.body);
        assert_eq!(b.maps.len(), 1);
        assert_eq!(b.to_json(), json!([[["y", "to"]]]));
    }
}
