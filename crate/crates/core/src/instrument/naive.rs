//! Baseline: recompute every needed intermediate and check every assertion
//! instance when the transaction ends.

use std::collections::BTreeSet;

use super::*;
use crate::binder::template::subst_all;
use crate::spec_lang::Rule;

pub(super) fn instrument(
    program: &Program,
    spec: &TypedSpec,
) -> Result<(Program, InstrumentStats), InstrumentError> {
    let mut out = program.clone();
    let mut names = NameGen::for_program(program);
    let mut checks = Vec::new();
    for (i, fa) in spec.spec.assertions() {
        let needed = spec.spec.expand_vars(&fa.vars());
        let storage = |v: &str| {
            if spec.is_intermediate(v) {
                format!("__nv{i}_{v}")
            } else {
                v.to_string()
            }
        };
        let mut domains = 0;
        let mut check = Vec::new();
        for rule in &spec.spec.rules[..i] {
            let Rule::MapSum(m) = rule else { continue };
            if !needed.contains(&m.target) {
                continue;
            }
            let target = storage(&m.target);
            declare(&mut out, target.clone(), m.index_vars.len(), Storage::Memory)?;
            let body = TExpr::from_iexpr(&m.body, &storage);
            let ix: Vec<TExpr> = m.index_vars.iter().map(|x| TExpr::Free(x.clone())).collect();
            let add = TStmt::Store(
                target.clone(),
                ix.clone(),
                TExpr::bin(BinOp::AddChecked, TExpr::read(target, ix), body),
            );
            let mut inner = match &m.cond {
                Some(c) => vec![TStmt::If(TExpr::from_icond(c, &storage), vec![add])],
                None => vec![add],
            };
            for (x, e) in m.determined_vars() {
                inner = subst_all(&inner, &x, &TExpr::from_iexpr(&e, &storage));
            }
            let uses: Vec<(String, usize, String)> = m
                .index_uses()
                .into_iter()
                .map(|(v, p, x)| (storage(v), p, x.to_string()))
                .collect();
            let vars: Vec<String> = m
                .free_vars()
                .filter(|x| uses.iter().any(|(_, _, y)| y == *x))
                .cloned()
                .collect();
            check.extend(enumerate(
                &vars, &uses, inner, i, &mut domains, &mut out, &mut names,
            )?);
        }
        let mut uses = Vec::new();
        fa.body.index_uses(&mut uses);
        let uses: Vec<(String, usize, String)> = uses
            .into_iter()
            .map(|(v, p, x)| (storage(v), p, x.to_string()))
            .collect();
        let inner = vec![TStmt::Assert(TExpr::from_icond(&fa.body, &storage))];
        check.extend(enumerate(
            &fa.quant_vars,
            &uses,
            inner,
            i,
            &mut domains,
            &mut out,
            &mut names,
        )?);
        checks.push((i, lower(&check, &mut names)?));
    }
    let stats = InstrumentStats {
        checks_emitted: add_plumbing(&mut out, &checks)?,
        ..InstrumentStats::default()
    };
    Ok((out, stats))
}

/// Runs `inner` once per assignment of `vars`, each ranging over the defined
/// keys of every map position it indexes. A variable indexing a single
/// position loops over that map directly; otherwise the union of its
/// positions is first collected into a fresh memory map.
#[allow(clippy::too_many_arguments)]
fn enumerate(
    vars: &[String],
    uses: &[(String, usize, String)],
    mut inner: Vec<TStmt>,
    rule: usize,
    domains: &mut usize,
    program: &mut Program,
    names: &mut NameGen,
) -> Result<Vec<TStmt>, InstrumentError> {
    let mut setup = Vec::new();
    for x in vars.iter().rev() {
        let sources: BTreeSet<(&str, usize)> = uses
            .iter()
            .filter(|(_, _, y)| y == x)
            .map(|(v, p, _)| (v.as_str(), *p))
            .collect();
        let t = names.fresh("__t");
        inner = subst_all(&inner, x, &TExpr::temp(t.clone()));
        if sources.len() == 1 {
            let (map, _) = sources.into_iter().next().expect("one source");
            inner = vec![TStmt::ForIn(vec![t], map.to_string(), inner)];
            continue;
        }
        let dm = format!("__dm{rule}_{domains}");
        *domains += 1;
        declare(program, dm.clone(), 1, Storage::Memory)?;
        for (map, pos) in sources {
            let arity = program.decl(map).expect("checked map").arity;
            let ks: Vec<String> = (0..arity).map(|_| names.fresh("__t")).collect();
            let key: Vec<TExpr> = ks.iter().map(|k| TExpr::temp(k.clone())).collect();
            setup.push(TStmt::ForIn(
                ks.clone(),
                map.to_string(),
                vec![
                    TStmt::Assign(names.fresh("__p"), TExpr::read(map, key)),
                    TStmt::Store(dm.clone(), vec![TExpr::temp(ks[pos].clone())], TExpr::Int(1.into())),
                ],
            ));
        }
        let mut body = vec![TStmt::Assign(
            names.fresh("__p"),
            TExpr::read(dm.clone(), vec![TExpr::temp(t.clone())]),
        )];
        body.extend(inner);
        inner = vec![TStmt::ForIn(vec![t], dm, body)];
    }
    setup.extend(inner);
    Ok(setup)
}
