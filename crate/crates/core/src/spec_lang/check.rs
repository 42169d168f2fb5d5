use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::SpecError;
use crate::contract::{Program, Storage, RESERVED_PREFIX};

/// A spec whose every variable reference has been resolved against a
/// contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedSpec {
    pub spec: InvariantSpec,
    /// Arity of every contract state variable the spec reads.
    pub state_arities: BTreeMap<String, usize>,
    /// Arity of every intermediate, in declaration order of rules.
    pub intermediates: BTreeMap<String, usize>,
}

impl TypedSpec {
    pub fn arity(&self, name: &str) -> Option<usize> {
        self.state_arities
            .get(name)
            .or_else(|| self.intermediates.get(name))
            .copied()
    }

    pub fn is_intermediate(&self, name: &str) -> bool {
        self.intermediates.contains_key(name)
    }
}

/// Resolves `spec` against the persistent state of `program`.
pub fn check_spec(spec: &InvariantSpec, program: &Program) -> Result<TypedSpec, SpecError> {
    let state: BTreeMap<&str, usize> = program
        .decls
        .iter()
        .filter(|d| d.storage == Storage::Persistent)
        .map(|d| (d.name.as_str(), d.arity))
        .collect();
    let mut intermediates: BTreeMap<String, usize> = BTreeMap::new();
    let mut state_arities = BTreeMap::new();

    for rule in &spec.rules {
        let free: Vec<&String> = match rule {
            Rule::MapSum(m) => m.free_vars().collect(),
            Rule::ForAll(f) => f.quant_vars.iter().collect(),
        };
        let mut seen = BTreeSet::new();
        for x in &free {
            if !seen.insert(x.as_str()) {
                return Err(SpecError::DuplicateFreeVar(x.to_string()));
            }
            if x.starts_with(RESERVED_PREFIX) {
                return Err(SpecError::ReservedIdentifier(x.to_string()));
            }
            if state.contains_key(x.as_str()) || intermediates.contains_key(x.as_str()) {
                return Err(SpecError::FreeVarShadows(x.to_string()));
            }
        }
        let mut resolver = Resolver {
            state: &state,
            intermediates: &intermediates,
            free: &seen,
            used_state: &mut state_arities,
        };
        match rule {
            Rule::MapSum(m) => {
                resolver.expr(&m.body)?;
                if let Some(c) = &m.cond {
                    resolver.cond(c)?;
                }
                let uses = m.index_uses();
                let indexed: BTreeSet<&str> = uses.iter().map(|(_, _, x)| *x).collect();
                let determined = m.determined_vars();
                for x in m.free_vars() {
                    if indexed.contains(x.as_str()) {
                        continue;
                    }
                    let Some((_, src)) = determined.iter().find(|(v, _)| v == x) else {
                        return Err(SpecError::UnconstrainedFreeVar(x.clone()));
                    };
                    // The defining expression may only use key-enumerated variables.
                    for y in m.free_vars() {
                        if !indexed.contains(y.as_str()) && src.mentions_free(y) {
                            return Err(SpecError::UnconstrainedFreeVar(x.clone()));
                        }
                    }
                }
                if m.target.starts_with(RESERVED_PREFIX) {
                    return Err(SpecError::ReservedIdentifier(m.target.clone()));
                }
                if state.contains_key(m.target.as_str()) {
                    return Err(SpecError::IntermediateCollision(m.target.clone()));
                }
                if intermediates.contains_key(&m.target) {
                    return Err(SpecError::DuplicateIntermediate(m.target.clone()));
                }
                intermediates.insert(m.target.clone(), m.index_vars.len());
            }
            Rule::ForAll(f) => {
                resolver.cond(&f.body)?;
                let mut uses = Vec::new();
                f.body.index_uses(&mut uses);
                for q in &f.quant_vars {
                    if !uses.iter().any(|(_, _, x)| x == q) {
                        return Err(SpecError::UnconstrainedFreeVar(q.clone()));
                    }
                }
            }
        }
    }
    Ok(TypedSpec {
        spec: spec.clone(),
        state_arities,
        intermediates,
    })
}

struct Resolver<'a> {
    state: &'a BTreeMap<&'a str, usize>,
    intermediates: &'a BTreeMap<String, usize>,
    free: &'a BTreeSet<&'a str>,
    used_state: &'a mut BTreeMap<String, usize>,
}

impl Resolver<'_> {
    fn lookup(&mut self, name: &str, found: usize) -> Result<(), SpecError> {
        let expected = if let Some(&a) = self.state.get(name) {
            self.used_state.insert(name.to_string(), a);
            a
        } else if let Some(&a) = self.intermediates.get(name) {
            a
        } else {
            return Err(SpecError::UnknownVariable(name.to_string()));
        };
        if expected != found {
            return Err(SpecError::ArityMismatch {
                var: name.to_string(),
                expected,
                found,
            });
        }
        Ok(())
    }

    fn expr(&mut self, e: &IExpr) -> Result<(), SpecError> {
        match e {
            IExpr::Int(_) => Ok(()),
            IExpr::Var(v) => self.lookup(v, 0),
            IExpr::Free(x) => {
                if self.free.contains(x.as_str()) {
                    Ok(())
                } else {
                    Err(SpecError::FreeVarScopeError(x.clone()))
                }
            }
            IExpr::Index(v, ix) => {
                for x in ix {
                    if !self.free.contains(x.as_str()) {
                        return Err(SpecError::FreeVarScopeError(x.clone()));
                    }
                }
                self.lookup(v, ix.len())
            }
            IExpr::Bin(_, l, r) => {
                self.expr(l)?;
                self.expr(r)
            }
        }
    }

    fn cond(&mut self, c: &ICond) -> Result<(), SpecError> {
        match c {
            ICond::Cmp(_, l, r) => {
                self.expr(l)?;
                self.expr(r)
            }
            ICond::EqFree(e, x) => {
                if !self.free.contains(x.as_str()) {
                    return Err(SpecError::FreeVarScopeError(x.clone()));
                }
                self.expr(e)
            }
            ICond::And(l, r) => {
                self.cond(l)?;
                self.cond(r)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_spec;
    use super::*;
    use crate::contract::parse_contract;

    const ERC20: &str = "contract T { state balances: map^1; state totalSupply: int; }";
    const SUPPLY: &str = "t = Map Sum balances[y] Over y; ForAll Assert t == totalSupply;";

    #[test]
    fn erc20_spec_resolves() {
        let p = parse_contract(ERC20).unwrap();
        let typed = check_spec(&parse_spec(SUPPLY).unwrap(), &p).unwrap();
        assert_eq!(typed.arity("balances"), Some(1));
        assert_eq!(typed.arity("t"), Some(0));
        assert!(typed.is_intermediate("t"));
    }

    #[test]
    fn missing_state_is_unknown() {
        let p = parse_contract("contract T { state balances: map^1; }").unwrap();
        assert_eq!(
            check_spec(&parse_spec(SUPPLY).unwrap(), &p),
            Err(SpecError::UnknownVariable("totalSupply".into()))
        );
    }

    #[test]
    fn arity_mismatch() {
        let p = parse_contract(ERC20).unwrap();
        let spec = parse_spec("t = Map Sum balances[x][y] Over x, y;").unwrap();
        assert!(matches!(
            check_spec(&spec, &p),
            Err(SpecError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn free_var_outside_rule() {
        let p = parse_contract(ERC20).unwrap();
        let spec = parse_spec("t = Map Sum balances[y] Over y; ForAll Assert balances[y] >= 0;")
            .unwrap();
        assert_eq!(
            check_spec(&spec, &p),
            Err(SpecError::FreeVarScopeError("y".into()))
        );
    }

    #[test]
    fn unconstrained_and_shadowing() {
        let p = parse_contract(ERC20).unwrap();
        let spec = parse_spec("t = Map z Sum balances[y] Over y;").unwrap();
        assert_eq!(
            check_spec(&spec, &p),
            Err(SpecError::UnconstrainedFreeVar("z".into()))
        );
        let spec = parse_spec("t = Map Sum balances[totalSupply] Over totalSupply;").unwrap();
        assert!(matches!(
            check_spec(&spec, &p),
            Err(SpecError::FreeVarShadows(_))
        ));
        let spec = parse_spec("balances = Map Sum 1;").unwrap();
        assert!(matches!(
            check_spec(&spec, &p),
            Err(SpecError::IntermediateCollision(_))
        ));
    }

    #[test]
    fn later_intermediate_is_not_visible() {
        let p = parse_contract(ERC20).unwrap();
        let spec = parse_spec("ForAll Assert t == totalSupply; t = Map Sum balances[y] Over y;")
            .unwrap();
        assert_eq!(
            check_spec(&spec, &p),
            Err(SpecError::UnknownVariable("t".into()))
        );
    }

    #[test]
    fn condition_bound_index_var() {
        let p = parse_contract(
            "contract V { state ballots: map^2; state weights: map^2; state weightedVoteCount: map^2; }",
        )
        .unwrap();
        let spec = parse_spec(
            "s = Map a, b Sum weights[a][c] Over c Where ballots[a][c] == b && b != 0;
             ForAll x, y Assert s[x][y] == weightedVoteCount[x][y];",
        )
        .unwrap();
        let typed = check_spec(&spec, &p).unwrap();
        assert_eq!(typed.intermediates["s"], 2);
    }
}
