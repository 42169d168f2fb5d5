//! Brute-force evaluation of an invariant over a full state.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::spec_lang::{print_cond, ArithOp, CmpOp, ICond, IExpr, MapSum, Rule, TypedSpec};
use crate::vm::{Key, StateStore};

pub type Table = BTreeMap<Key, BigInt>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub satisfied: bool,
    /// Every intermediate's denotation, keyed by index tuple. Only tuples
    /// produced by some satisfied condition appear; others are zero.
    pub intermediates: BTreeMap<String, Table>,
    /// Human-readable description of the first few failing instances.
    pub violations: Vec<String>,
}

const MAX_REPORTED: usize = 8;

struct DivByZero;

struct Env<'a> {
    state: &'a StateStore,
    inter: &'a BTreeMap<String, Table>,
}

impl Env<'_> {
    fn read(&self, var: &str, key: &[BigInt]) -> BigInt {
        match self.inter.get(var) {
            Some(t) => t.get(key).cloned().unwrap_or_else(BigInt::zero),
            None => self.state.get(var, key),
        }
    }

    /// Distinct values found at `pos` among the defined keys of `var`.
    fn project(&self, var: &str, pos: usize, out: &mut BTreeSet<BigInt>) {
        match self.inter.get(var) {
            Some(t) => out.extend(t.keys().map(|k| k[pos].clone())),
            None => out.extend(self.state.slots().entries(var).map(|(k, _)| k[pos].clone())),
        }
    }

    fn domain(&self, x: &str, uses: &[(&str, usize, &str)]) -> Vec<BigInt> {
        let mut out = BTreeSet::new();
        for (v, p, y) in uses {
            if *y == x {
                self.project(v, *p, &mut out);
            }
        }
        out.into_iter().collect()
    }

    fn expr(&self, e: &IExpr, a: &BTreeMap<&str, BigInt>) -> Result<BigInt, DivByZero> {
        Ok(match e {
            IExpr::Int(v) => v.clone(),
            IExpr::Var(v) => self.read(v, &[]),
            IExpr::Free(x) => a[x.as_str()].clone(),
            IExpr::Index(v, xs) => {
                let key: Vec<BigInt> = xs.iter().map(|x| a[x.as_str()].clone()).collect();
                self.read(v, &key)
            }
            IExpr::Bin(op, l, r) => {
                let (l, r) = (self.expr(l, a)?, self.expr(r, a)?);
                match op {
                    ArithOp::Add => l + r,
                    ArithOp::Sub => l - r,
                    ArithOp::Mul => l * r,
                    ArithOp::Div => {
                        if r.is_zero() {
                            return Err(DivByZero);
                        }
                        l / r
                    }
                }
            }
        })
    }

    fn cond(&self, c: &ICond, a: &BTreeMap<&str, BigInt>) -> Result<bool, DivByZero> {
        Ok(match c {
            ICond::Cmp(op, l, r) => {
                let (l, r) = (self.expr(l, a)?, self.expr(r, a)?);
                match op {
                    CmpOp::Eq => l == r,
                    CmpOp::Ne => l != r,
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Gt => l > r,
                    CmpOp::Ge => l >= r,
                }
            }
            ICond::EqFree(e, x) => self.expr(e, a)? == a[x.as_str()],
            // Both sides are evaluated, as in the instrumented code.
            ICond::And(l, r) => {
                let l = self.cond(l, a)?;
                let r = self.cond(r, a)?;
                l && r
            }
        })
    }
}

/// Calls `f` for every assignment in the product of the variables' domains.
fn product<'v>(
    vars: &[&'v str],
    domains: &[Vec<BigInt>],
    a: &mut BTreeMap<&'v str, BigInt>,
    f: &mut impl FnMut(&BTreeMap<&'v str, BigInt>) -> bool,
) -> bool {
    let Some((x, rest)) = vars.split_first() else {
        return f(a);
    };
    for v in &domains[0] {
        a.insert(x, v.clone());
        if !product(rest, &domains[1..], a, f) {
            return false;
        }
    }
    a.remove(x);
    true
}

fn compute(env: &Env<'_>, m: &MapSum) -> Result<Table, DivByZero> {
    let uses = m.index_uses();
    let determined = m.determined_vars();
    let vars: Vec<&str> = m
        .free_vars()
        .filter(|x| uses.iter().any(|(_, _, y)| y == x))
        .map(String::as_str)
        .collect();
    let domains: Vec<Vec<BigInt>> = vars.iter().map(|x| env.domain(x, &uses)).collect();
    let mut table = Table::new();
    let mut failed = false;
    product(&vars, &domains, &mut BTreeMap::new(), &mut |a| {
        let mut a = a.clone();
        let step: Result<(), DivByZero> = (|| {
            for (x, e) in &determined {
                let v = env.expr(e, &a)?;
                a.insert(x.as_str(), v);
            }
            if let Some(c) = &m.cond {
                if !env.cond(c, &a)? {
                    return Ok(());
                }
            }
            let v = env.expr(&m.body, &a)?;
            let key: Key = m.index_vars.iter().map(|x| a[x.as_str()].clone()).collect();
            *table.entry(key).or_insert_with(BigInt::zero) += v;
            Ok(())
        })();
        failed = step.is_err();
        !failed
    });
    if failed {
        Err(DivByZero)
    } else {
        Ok(table)
    }
}

/// Recomputes every intermediate and checks every assertion instance.
/// A division by zero anywhere counts as a violation.
pub fn oracle_check(state: &StateStore, spec: &TypedSpec) -> OracleResult {
    let mut inter: BTreeMap<String, Table> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut satisfied = true;
    for rule in &spec.spec.rules {
        match rule {
            Rule::MapSum(m) => {
                let env = Env {
                    state,
                    inter: &inter,
                };
                let table = match compute(&env, m) {
                    Ok(t) => t,
                    Err(DivByZero) => {
                        satisfied = false;
                        violations.push(format!("{}: division by zero", m.target));
                        Table::new()
                    }
                };
                inter.insert(m.target.clone(), table);
            }
            Rule::ForAll(fa) => {
                let env = Env {
                    state,
                    inter: &inter,
                };
                let mut uses = Vec::new();
                fa.body.index_uses(&mut uses);
                let vars: Vec<&str> = fa.quant_vars.iter().map(String::as_str).collect();
                let domains: Vec<Vec<BigInt>> = vars.iter().map(|x| env.domain(x, &uses)).collect();
                product(&vars, &domains, &mut BTreeMap::new(), &mut |a| {
                    let ok = matches!(env.cond(&fa.body, a), Ok(true));
                    if !ok {
                        satisfied = false;
                        if violations.len() < MAX_REPORTED {
                            let at: Vec<String> = a.iter().map(|(k, v)| format!("{k}={v}")).collect();
                            violations.push(format!("{} at [{}]", print_cond(&fa.body), at.join(", ")));
                        }
                    }
                    true
                });
            }
        }
    }
    OracleResult {
        satisfied,
        intermediates: inter,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse_contract;
    use crate::spec_lang::{check_spec, parse_spec};

    fn erc20() -> (StateStore, TypedSpec) {
        let p = parse_contract("contract T { state balances: map^1; state totalSupply: int; }").unwrap();
        let spec = parse_spec("t = Map Sum balances[y] Over y; ForAll Assert t == totalSupply;").unwrap();
        let typed = check_spec(&spec, &p).unwrap();
        (StateStore::new(&p), typed)
    }

    #[test]
    fn genesis_is_satisfied() {
        let (st, spec) = erc20();
        let r = oracle_check(&st, &spec);
        assert!(r.satisfied);
        assert!(r.intermediates["t"].is_empty());
    }

    #[test]
    fn supply_matches_sum() {
        let (mut st, spec) = erc20();
        st.set("balances", vec![1.into()], 3.into());
        st.set("balances", vec![2.into()], 4.into());
        st.set("totalSupply", vec![], 7.into());
        let r = oracle_check(&st, &spec);
        assert!(r.satisfied);
        assert_eq!(r.intermediates["t"][&vec![]], BigInt::from(7));
        st.set("totalSupply", vec![], 8.into());
        let r = oracle_check(&st, &spec);
        assert!(!r.satisfied);
        assert_eq!(r.violations.len(), 1);
    }

    #[test]
    fn vote_double_count_is_flagged() {
        let p = parse_contract(
            "contract V { state ballots: map^2; state weights: map^2; state weightedVoteCount: map^2; }",
        )
        .unwrap();
        let spec = parse_spec(
            "s = Map a, b Sum weights[a][c] Over c Where ballots[a][c] == b && b != 0;
             ForAll x, y Assert s[x][y] == weightedVoteCount[x][y];",
        )
        .unwrap();
        let spec = check_spec(&spec, &p).unwrap();
        let mut st = StateStore::new(&p);
        let k = |a: i32, b: i32| vec![BigInt::from(a), BigInt::from(b)];
        st.set("weights", k(1, 7), 5.into());
        st.set("ballots", k(1, 7), 2.into());
        st.set("weightedVoteCount", k(1, 2), 5.into());
        let r = oracle_check(&st, &spec);
        assert!(r.satisfied, "{:?}", r.violations);
        assert_eq!(r.intermediates["s"][&k(1, 2)], BigInt::from(5));
        // The same voter's earlier vote for option 1 still counts there.
        st.set("weightedVoteCount", k(1, 1), 5.into());
        assert!(!oracle_check(&st, &spec).satisfied);
    }
}
