use super::template::{accesses, free_vars, subst_all, NameGen, TExpr, TStmt};
use super::{BindError, BindingSet, CondBinding};
use crate::contract::BinOp;
use crate::spec_lang::IExpr;

/// Context shared by every instantiation of one template.
pub struct RewriteCtx<'a> {
    pub names: &'a mut NameGen,
    /// Maps spec variable names to the contract variables that hold them.
    pub storage: &'a dyn Fn(&str) -> String,
    /// Extra map accesses used to pick a loop domain when the template does
    /// not index a missing free variable itself (e.g. an assertion body).
    pub hints: Vec<TStmt>,
    /// Map never chosen as a loop domain (the template's own target).
    pub avoid: Option<String>,
    /// `e == x` conjuncts other than the condition binding. An unbound
    /// variable listed here is substituted instead of iterated.
    pub determined: Vec<(String, IExpr)>,
}

/// Instantiates `template` once per binding map and concatenates the results.
pub fn rewrite(
    template: &[TStmt],
    bindings: &BindingSet,
    cond: &CondBinding,
    ctx: &mut RewriteCtx<'_>,
) -> Result<Vec<TStmt>, BindError> {
    let storage = ctx.storage;
    let cond_pair = match cond {
        CondBinding::None => None,
        CondBinding::Bound(x, e) => Some((x.clone(), TExpr::from_iexpr(e, &storage))),
    };
    let vars = free_vars(template);
    let mut out = Vec::new();
    for map in &bindings.maps {
        let mut pairs: Vec<(String, TExpr)> = map
            .pairs
            .iter()
            .map(|(x, e)| (x.clone(), TExpr::from_cexpr(e)))
            .collect();
        if let Some(p) = &cond_pair {
            pairs.push(p.clone());
        }
        let mut early: Vec<(String, TExpr)> = Vec::new();
        let mut body = template.to_vec();
        for x in &vars {
            let mine: Vec<TExpr> = pairs
                .iter()
                .filter(|(v, _)| v == x)
                .map(|(_, e)| e.clone())
                .collect();
            if mine.len() > 1 {
                let guard = mine[1..]
                    .iter()
                    .map(|e| TExpr::bin(BinOp::Eq, mine[0].clone(), e.clone()))
                    .reduce(|l, r| TExpr::bin(BinOp::And, l, r))
                    .expect("at least one extra pair");
                body = vec![TStmt::If(guard, body)];
                let mut kept = false;
                pairs.retain(|(v, _)| {
                    if v != x {
                        return true;
                    }
                    let keep = !kept;
                    kept = true;
                    keep
                });
            } else if mine.is_empty() {
                if let Some((_, e)) = ctx.determined.iter().find(|(v, _)| v == x) {
                    early.push((x.clone(), TExpr::from_iexpr(e, &storage)));
                    continue;
                }
                let (map, probe) = loop_domain(x, template, ctx)?;
                let t = ctx.names.fresh("__t");
                let mut inner = Vec::new();
                if let Some(read) = probe {
                    inner.push(TStmt::Assign(ctx.names.fresh("__p"), read));
                }
                inner.extend(body);
                body = vec![TStmt::ForIn(vec![t.clone()], map, inner)];
                pairs.push((x.clone(), TExpr::Temp(t)));
            }
        }
        for (x, e) in &early {
            body = subst_all(&body, x, e);
        }
        if let Some((x, e)) = &cond_pair {
            body = subst_all(&body, x, e);
            if let Some(i) = pairs.iter().position(|(v, f)| v == x && f == e) {
                pairs.remove(i);
            }
        }
        for (x, e) in &pairs {
            body = subst_all(&body, x, e);
        }
        if let Some(x) = free_vars(&body).into_iter().next() {
            return Err(BindError::ResidualFreeVar(x));
        }
        out.extend(body);
    }
    Ok(out)
}

/// First map indexing `x`, searching the template then the hints. A map
/// found only in the hints needs a probe read inside the loop so the
/// iterator is used as an index of the iterated map.
fn loop_domain(
    x: &str,
    template: &[TStmt],
    ctx: &RewriteCtx<'_>,
) -> Result<(String, Option<TExpr>), BindError> {
    let indexes = |ix: &[TExpr]| ix.iter().any(|i| *i == TExpr::Free(x.to_string()));
    let avoid = |v: &str| ctx.avoid.as_deref() == Some(v);
    if let Some((v, _)) = accesses(template)
        .into_iter()
        .find(|(v, ix)| !avoid(v) && indexes(ix))
    {
        return Ok((v, None));
    }
    if let Some((v, ix)) = accesses(&ctx.hints)
        .into_iter()
        .find(|(v, ix)| !avoid(v) && indexes(ix))
    {
        return Ok((v.clone(), Some(TExpr::Read(v, ix))));
    }
    if let Some((v, _)) = accesses(template).into_iter().find(|(_, ix)| indexes(ix)) {
        return Ok((v, None));
    }
    Err(BindError::UnboundFreeVarNoMap(x.to_string()))
}

#[cfg(test)]
mod tests {
    use super::super::{bind_cond, bind_cond_expr, bind_expr, lower};
    use super::*;
    use crate::contract::{stmts_to_string, Address, Builtin, CExpr};
    use crate::spec_lang::{parse_spec, ICond, MapSum, Rule};

    fn rule(text: &str) -> MapSum {
        match &parse_spec(text).unwrap().rules[0] {
            Rule::MapSum(m) => m.clone(),
            _ => unreachable!(),
        }
    }

    fn ident(s: &str) -> String {
        s.to_string()
    }

    fn pre_template(m: &MapSum) -> Vec<TStmt> {
        let target = TExpr::read(
            m.target.clone(),
            m.index_vars.iter().map(|x| TExpr::Free(x.clone())).collect(),
        );
        let TExpr::Read(v, ix) = target.clone() else { unreachable!() };
        let body = vec![TStmt::Store(
            v,
            ix,
            TExpr::bin(BinOp::SubChecked, target, TExpr::from_iexpr(&m.body, &ident)),
        )];
        match &m.cond {
            Some(c) => vec![TStmt::If(TExpr::from_icond(c, &ident), body)],
            None => body,
        }
    }

    fn run(m: &MapSum, a: &Address, hints: Vec<TStmt>) -> Result<String, BindError> {
        let mut b = bind_expr(a, &m.body);
        let mut cond = CondBinding::None;
        if let Some(c) = &m.cond {
            b = b.union(bind_cond_expr(a, c));
            cond = bind_cond(a, c);
        }
        let mut names = NameGen::default();
        let mut ctx = RewriteCtx {
            names: &mut names,
            storage: &ident,
            hints,
            avoid: Some(m.target.clone()),
            determined: Vec::new(),
        };
        let t = rewrite(&pre_template(m), &b, &cond, &mut ctx)?;
        let stmts = lower(&t, ctx.names)?;
        Ok(stmts_to_string(&stmts))
    }

    #[test]
    fn vote_pre_update() {
        let m = rule("s = Map a, b Sum weights[a][c] Over c Where ballots[a][c] == b && b != 0;");
        let a = Address::map("ballots", vec![CExpr::temp("issueId"), CExpr::Builtin(Builtin::Sender)]);
        let out = run(&m, &a, Vec::new()).unwrap();
        assert_eq!(
            out,
            "__t0 = load ballots[issueId][sender];\n\
             if __t0 == __t0 && __t0 != 0 {\n\
             \x20 __t1 = load s[issueId][__t0];\n\
             \x20 __t2 = load weights[issueId][sender];\n\
             \x20 store s[issueId][__t0], __t1 -! __t2;\n\
             }\n"
        );
    }

    #[test]
    fn duplicate_pairs_become_guard() {
        let m = rule("s = Map Sum pairs[a][a] Over a;");
        let a = Address::map("pairs", vec![CExpr::temp("i"), CExpr::temp("j")]);
        let out = run(&m, &a, Vec::new()).unwrap();
        assert!(out.starts_with("if i == j {"), "{out}");
        assert!(out.contains("load pairs[i][i]"), "{out}");
    }

    #[test]
    fn missing_binding_becomes_loop() {
        let m = rule("t = Map Sum balances[y] * rate Over y;");
        let out = run(&m, &Address::scalar("rate"), Vec::new()).unwrap();
        assert!(out.starts_with("for __t0 in balances {"), "{out}");
        assert!(out.contains("load balances[__t0]"), "{out}");
    }

    #[test]
    fn loop_from_hint_gets_probe() {
        let tmpl = vec![TStmt::Store(
            "mk".into(),
            vec![TExpr::Free("x".into())],
            TExpr::Int(1.into()),
        )];
        let hint = vec![TStmt::Assert(TExpr::from_icond(
            &ICond::Cmp(
                crate::spec_lang::CmpOp::Le,
                IExpr::Index("a".into(), vec!["x".into()]),
                IExpr::Var("cap".into()),
            ),
            &ident,
        ))];
        let mut names = NameGen::default();
        let mut ctx = RewriteCtx {
            names: &mut names,
            storage: &ident,
            hints: hint,
            avoid: Some("mk".into()),
            determined: Vec::new(),
        };
        let t = rewrite(&tmpl, &BindingSet::unit(), &CondBinding::None, &mut ctx).unwrap();
        let out = stmts_to_string(&lower(&t, ctx.names).unwrap());
        assert_eq!(
            out,
            "for __t0 in a {\n  __t2 = load a[__t0];\n  __p1 = __t2;\n  store mk[__t0], 1;\n}\n"
        );
    }

    #[test]
    fn no_map_is_an_error() {
        let tmpl = vec![TStmt::Assert(TExpr::bin(
            BinOp::Eq,
            TExpr::Free("x".into()),
            TExpr::Int(0.into()),
        ))];
        let mut names = NameGen::default();
        let mut ctx = RewriteCtx {
            names: &mut names,
            storage: &ident,
            hints: Vec::new(),
            avoid: None,
            determined: Vec::new(),
        };
        assert_eq!(
            rewrite(&tmpl, &BindingSet::unit(), &CondBinding::None, &mut ctx),
            Err(BindError::UnboundFreeVarNoMap("x".into()))
        );
    }

    #[test]
    fn empty_bindings_emit_nothing() {
        let m = rule("t = Map Sum balances[y] Over y;");
        assert_eq!(run(&m, &Address::scalar("other"), Vec::new()).unwrap(), "");
    }
}
