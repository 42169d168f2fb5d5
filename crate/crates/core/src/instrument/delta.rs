use super::*;
use crate::binder::{bind_cond, bind_cond_expr, bind_expr, rewrite, CondBinding, RewriteCtx};
use crate::contract::RESERVED_PREFIX;
use crate::spec_lang::{MapSum, Rule};

/// Stores to user state and to maintained intermediates can change an
/// invariant; markers and call-depth bookkeeping cannot.
fn relevant(var: &str) -> bool {
    !var.starts_with(RESERVED_PREFIX) || var.starts_with(INTERMEDIATE_PREFIX)
}

pub(super) fn instrument(
    program: &Program,
    spec: &TypedSpec,
) -> Result<(Program, InstrumentStats), InstrumentError> {
    let mut out = program.clone();
    let mut names = NameGen::for_program(program);
    let storage = |v: &str| {
        if spec.is_intermediate(v) {
            format!("{INTERMEDIATE_PREFIX}{v}")
        } else {
            v.to_string()
        }
    };
    let mut stats = InstrumentStats::default();
    let mut checks = Vec::new();

    for (i, rule) in spec.spec.rules.iter().enumerate() {
        match rule {
            Rule::MapSum(m) => {
                let target = storage(&m.target);
                declare(&mut out, target.clone(), m.index_vars.len(), Storage::Persistent)?;
                let body = rename_expr(&m.body, &storage);
                let cond = m.cond.as_ref().map(|c| rename_cond(c, &storage));
                let pre = update_template(&target, m, &body, cond.as_ref(), BinOp::SubChecked);
                let post = update_template(&target, m, &body, cond.as_ref(), BinOp::AddChecked);
                let determined: Vec<(String, IExpr)> = m
                    .determined_vars()
                    .into_iter()
                    .map(|(x, e)| (x, rename_expr(&e, &storage)))
                    .collect();
                for f in &mut out.functions {
                    let (b, n) = around_stores(&f.body, &mut |a: &Address| {
                        if !relevant(&a.var) || a.var == target {
                            return Ok((Vec::new(), Vec::new()));
                        }
                        let mut bindings = bind_expr(a, &body);
                        let mut cb = CondBinding::None;
                        if let Some(c) = &cond {
                            bindings = bindings.union(bind_cond_expr(a, c));
                            cb = bind_cond(a, c);
                        }
                        if bindings.is_empty() {
                            return Ok((Vec::new(), Vec::new()));
                        }
                        let determined = determined
                            .iter()
                            .filter(|(x, _)| !matches!(&cb, CondBinding::Bound(y, _) if y == x))
                            .cloned()
                            .collect();
                        let mut ctx = RewriteCtx {
                            names: &mut names,
                            storage: &|v: &str| v.to_string(),
                            hints: Vec::new(),
                            avoid: Some(target.clone()),
                            determined,
                        };
                        let pre = rewrite(&pre, &bindings, &cb, &mut ctx)?;
                        let post = rewrite(&post, &bindings, &cb, &mut ctx)?;
                        Ok::<_, InstrumentError>((lower(&pre, &mut names)?, lower(&post, &mut names)?))
                    })?;
                    f.body = b;
                    stats.stores_instrumented += n;
                }
            }
            Rule::ForAll(fa) => {
                let marker = format!("{MARKER_PREFIX}{i}");
                declare(&mut out, marker.clone(), fa.quant_vars.len().max(1), Storage::Memory)?;
                let body = rename_cond(&fa.body, &storage);
                let body_t = TExpr::from_icond(&body, &|v: &str| v.to_string());
                let key = if fa.quant_vars.is_empty() {
                    vec![TExpr::Int(0.into())]
                } else {
                    fa.quant_vars.iter().map(|x| TExpr::Free(x.clone())).collect()
                };
                let template = vec![TStmt::Store(marker.clone(), key, TExpr::Int(1.into()))];
                for f in &mut out.functions {
                    let (b, n) = around_stores(&f.body, &mut |a: &Address| {
                        if !relevant(&a.var) {
                            return Ok((Vec::new(), Vec::new()));
                        }
                        let bindings = bind_cond_expr(a, &body);
                        if bindings.is_empty() {
                            return Ok((Vec::new(), Vec::new()));
                        }
                        let mut ctx = RewriteCtx {
                            names: &mut names,
                            storage: &|v: &str| v.to_string(),
                            hints: vec![TStmt::Assert(body_t.clone())],
                            avoid: Some(marker.clone()),
                            determined: Vec::new(),
                        };
                        let mark = rewrite(&template, &bindings, &CondBinding::None, &mut ctx)?;
                        let before = lower(&mark, &mut names)?;
                        let after = lower(&mark, &mut names)?;
                        Ok::<_, InstrumentError>((before, after))
                    })?;
                    f.body = b;
                    stats.stores_instrumented += n;
                }
                checks.push((i, marker_check(&marker, &fa.quant_vars, &body_t, &mut names)?));
            }
        }
    }
    stats.checks_emitted = add_plumbing(&mut out, &checks)?;
    Ok((out, stats))
}

/// `if c { v[x..] = v[x..] op e; }` with free variables still in place.
fn update_template(
    target: &str,
    m: &MapSum,
    body: &IExpr,
    cond: Option<&ICond>,
    op: BinOp,
) -> Vec<TStmt> {
    let id = |v: &str| v.to_string();
    let ix: Vec<TExpr> = m.index_vars.iter().map(|x| TExpr::Free(x.clone())).collect();
    let update = TStmt::Store(
        target.to_string(),
        ix.clone(),
        TExpr::bin(op, TExpr::read(target, ix), TExpr::from_iexpr(body, &id)),
    );
    match cond {
        Some(c) => vec![TStmt::If(TExpr::from_icond(c, &id), vec![update])],
        None => vec![update],
    }
}
