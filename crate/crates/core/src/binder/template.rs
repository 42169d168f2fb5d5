//! Statement templates: contract statements whose expressions may still read
//! state inline and mention invariant free variables. Rewriting removes the
//! free variables; lowering hoists state reads into `load` statements.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use super::BindError;
use crate::contract::{Address, BinOp, Builtin, CExpr, Program, Stmt};
use crate::spec_lang::{ArithOp, CmpOp, ICond, IExpr};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TExpr {
    Int(BigInt),
    Temp(String),
    Builtin(Builtin),
    Free(String),
    /// Inline state read `v[e1]...`.
    Read(String, Vec<TExpr>),
    Bin(BinOp, Box<TExpr>, Box<TExpr>),
}

impl TExpr {
    pub fn bin(op: BinOp, l: TExpr, r: TExpr) -> Self {
        TExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn read(var: impl Into<String>, indices: Vec<TExpr>) -> Self {
        TExpr::Read(var.into(), indices)
    }

    pub fn temp(name: impl Into<String>) -> Self {
        TExpr::Temp(name.into())
    }

    pub fn from_cexpr(e: &CExpr) -> Self {
        match e {
            CExpr::Int(v) => TExpr::Int(v.clone()),
            CExpr::Temp(t) => TExpr::Temp(t.clone()),
            CExpr::Builtin(b) => TExpr::Builtin(*b),
            CExpr::Bin(op, l, r) => TExpr::bin(*op, Self::from_cexpr(l), Self::from_cexpr(r)),
        }
    }

    /// Converts an invariant expression. `storage` maps a spec variable name
    /// to the contract variable holding it. Arithmetic becomes overflow-checked.
    pub fn from_iexpr(e: &IExpr, storage: &impl Fn(&str) -> String) -> Self {
        match e {
            IExpr::Int(v) => TExpr::Int(v.clone()),
            IExpr::Var(v) => TExpr::Read(storage(v), Vec::new()),
            IExpr::Free(x) => TExpr::Free(x.clone()),
            IExpr::Index(v, xs) => {
                TExpr::Read(storage(v), xs.iter().map(|x| TExpr::Free(x.clone())).collect())
            }
            IExpr::Bin(op, l, r) => {
                let op = match op {
                    ArithOp::Add => BinOp::AddChecked,
                    ArithOp::Sub => BinOp::SubChecked,
                    ArithOp::Mul => BinOp::MulChecked,
                    ArithOp::Div => BinOp::Div,
                };
                TExpr::bin(op, Self::from_iexpr(l, storage), Self::from_iexpr(r, storage))
            }
        }
    }

    pub fn from_icond(c: &ICond, storage: &impl Fn(&str) -> String) -> Self {
        match c {
            ICond::Cmp(op, l, r) => {
                let op = match op {
                    CmpOp::Eq => BinOp::Eq,
                    CmpOp::Ne => BinOp::Ne,
                    CmpOp::Lt => BinOp::Lt,
                    CmpOp::Le => BinOp::Le,
                    CmpOp::Gt => BinOp::Gt,
                    CmpOp::Ge => BinOp::Ge,
                };
                TExpr::bin(op, Self::from_iexpr(l, storage), Self::from_iexpr(r, storage))
            }
            ICond::EqFree(e, x) => TExpr::bin(
                BinOp::Eq,
                Self::from_iexpr(e, storage),
                TExpr::Free(x.clone()),
            ),
            ICond::And(l, r) => TExpr::bin(
                BinOp::And,
                Self::from_icond(l, storage),
                Self::from_icond(r, storage),
            ),
        }
    }

    pub fn subst(&self, x: &str, with: &TExpr) -> TExpr {
        match self {
            TExpr::Free(v) if v == x => with.clone(),
            TExpr::Read(v, ix) => TExpr::Read(v.clone(), ix.iter().map(|i| i.subst(x, with)).collect()),
            TExpr::Bin(op, l, r) => TExpr::bin(*op, l.subst(x, with), r.subst(x, with)),
            other => other.clone(),
        }
    }

    fn free_vars_into(&self, out: &mut Vec<String>) {
        match self {
            TExpr::Free(x) => {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
            TExpr::Read(_, ix) => ix.iter().for_each(|i| i.free_vars_into(out)),
            TExpr::Bin(_, l, r) => {
                l.free_vars_into(out);
                r.free_vars_into(out);
            }
            _ => {}
        }
    }

    /// Inline reads `(var, indices)` in evaluation order, outermost first.
    fn reads_into<'a>(&'a self, out: &mut Vec<(&'a str, &'a [TExpr])>) {
        match self {
            TExpr::Read(v, ix) => {
                out.push((v, ix));
                ix.iter().for_each(|i| i.reads_into(out));
            }
            TExpr::Bin(_, l, r) => {
                l.reads_into(out);
                r.reads_into(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TStmt {
    Assign(String, TExpr),
    Store(String, Vec<TExpr>, TExpr),
    If(TExpr, Vec<TStmt>),
    ForIn(Vec<String>, String, Vec<TStmt>),
    Assert(TExpr),
}

impl TStmt {
    pub fn subst(&self, x: &str, with: &TExpr) -> TStmt {
        let sub_all = |v: &[TStmt]| v.iter().map(|s| s.subst(x, with)).collect();
        match self {
            TStmt::Assign(t, e) => TStmt::Assign(t.clone(), e.subst(x, with)),
            TStmt::Store(v, ix, e) => TStmt::Store(
                v.clone(),
                ix.iter().map(|i| i.subst(x, with)).collect(),
                e.subst(x, with),
            ),
            TStmt::If(c, body) => TStmt::If(c.subst(x, with), sub_all(body)),
            TStmt::ForIn(ts, v, body) => TStmt::ForIn(ts.clone(), v.clone(), sub_all(body)),
            TStmt::Assert(c) => TStmt::Assert(c.subst(x, with)),
        }
    }

    fn exprs(&self) -> Vec<&TExpr> {
        match self {
            TStmt::Assign(_, e) | TStmt::Assert(e) | TStmt::If(e, _) => vec![e],
            TStmt::Store(_, ix, e) => ix.iter().chain(std::iter::once(e)).collect(),
            TStmt::ForIn(..) => Vec::new(),
        }
    }

    fn children(&self) -> &[TStmt] {
        match self {
            TStmt::If(_, b) | TStmt::ForIn(_, _, b) => b,
            _ => &[],
        }
    }
}

pub fn subst_all(body: &[TStmt], x: &str, with: &TExpr) -> Vec<TStmt> {
    body.iter().map(|s| s.subst(x, with)).collect()
}

/// Free variables in order of first appearance.
pub fn free_vars(body: &[TStmt]) -> Vec<String> {
    fn go(body: &[TStmt], out: &mut Vec<String>) {
        for s in body {
            if let TStmt::Store(v, ix, e) = s {
                // Store target indices come before the stored value.
                TExpr::Read(v.clone(), ix.clone()).free_vars_into(out);
                e.free_vars_into(out);
            } else {
                s.exprs().into_iter().for_each(|e| e.free_vars_into(out));
            }
            go(s.children(), out);
        }
    }
    let mut out = Vec::new();
    go(body, &mut out);
    out
}

/// Every map access (inline read or store target), in template order.
pub fn accesses(body: &[TStmt]) -> Vec<(String, Vec<TExpr>)> {
    fn go(body: &[TStmt], out: &mut Vec<(String, Vec<TExpr>)>) {
        for s in body {
            let mut reads = Vec::new();
            for e in s.exprs() {
                e.reads_into(&mut reads);
            }
            out.extend(reads.into_iter().map(|(v, ix)| (v.to_string(), ix.to_vec())));
            if let TStmt::Store(v, ix, _) = s {
                out.push((v.clone(), ix.clone()));
            }
            go(s.children(), out);
        }
    }
    let mut out = Vec::new();
    go(body, &mut out);
    out
}

/// Fresh identifier source that never reuses a name already in the program.
#[derive(Debug, Clone, Default)]
pub struct NameGen {
    taken: BTreeSet<String>,
    next: usize,
}

impl NameGen {
    pub fn for_program(program: &Program) -> Self {
        let mut taken = BTreeSet::new();
        for d in &program.decls {
            taken.insert(d.name.clone());
        }
        for f in &program.functions {
            taken.insert(f.name.clone());
            taken.extend(f.params.iter().cloned());
            crate::contract::walk_stmts(&f.body, &mut |s| match s {
                Stmt::Assign(t, _) | Stmt::Load(t, _) => {
                    taken.insert(t.clone());
                }
                Stmt::ForIn { temps, .. } => taken.extend(temps.iter().cloned()),
                _ => {}
            });
        }
        NameGen { taken, next: 0 }
    }

    pub fn fresh(&mut self, prefix: &str) -> String {
        loop {
            let name = format!("{prefix}{}", self.next);
            self.next += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    pub fn reserve(&mut self, name: &str) -> bool {
        self.taken.insert(name.to_string())
    }
}

/// Turns a free-variable-free template into contract statements. Inline
/// reads become `load`s into fresh temps placed before the statement that
/// needs them. A read is reused by later statements, including nested `if`
/// bodies, until a store to the same variable or a reassignment of a temp it
/// depends on.
pub fn lower(body: &[TStmt], names: &mut NameGen) -> Result<Vec<Stmt>, BindError> {
    lower_in(body, names, &mut Vec::new())
}

fn forget_temp(seen: &mut Vec<(Address, String)>, t: &str) {
    seen.retain(|(a, v)| v != t && !a.indices.iter().any(|i| i.mentions_temp(t)));
}

fn lower_in(
    body: &[TStmt],
    names: &mut NameGen,
    seen: &mut Vec<(Address, String)>,
) -> Result<Vec<Stmt>, BindError> {
    let mut out = Vec::new();
    for s in body {
        match s {
            TStmt::Assign(t, e) => {
                let e = lower_expr(e, &mut out, seen, names)?;
                forget_temp(seen, t);
                out.push(Stmt::Assign(t.clone(), e));
            }
            TStmt::Store(v, ix, e) => {
                let indices = ix
                    .iter()
                    .map(|i| lower_expr(i, &mut out, seen, names))
                    .collect::<Result<_, _>>()?;
                let e = lower_expr(e, &mut out, seen, names)?;
                seen.retain(|(a, _)| a.var != *v);
                out.push(Stmt::Store(Address::map(v.clone(), indices), e));
            }
            TStmt::If(c, inner) => {
                let c = lower_expr(c, &mut out, seen, names)?;
                let mut nested = seen.clone();
                let inner = lower_in(inner, names, &mut nested)?;
                // Anything the branch invalidated is gone afterwards too.
                seen.retain(|entry| nested.contains(entry));
                out.push(Stmt::If(c, inner));
            }
            TStmt::ForIn(temps, map, inner) => {
                let inner = lower_in(inner, names, &mut Vec::new())?;
                let mut written = Vec::new();
                crate::contract::walk_stmts(&inner, &mut |s| match s {
                    Stmt::Store(a, _) => written.push(a.var.clone()),
                    Stmt::Assign(t, _) | Stmt::Load(t, _) => written.push(t.clone()),
                    _ => {}
                });
                for w in written.iter().chain(temps) {
                    seen.retain(|(a, _)| a.var != *w);
                    forget_temp(seen, w);
                }
                out.push(Stmt::ForIn {
                    temps: temps.clone(),
                    map: map.clone(),
                    body: inner,
                });
            }
            TStmt::Assert(c) => {
                let c = lower_expr(c, &mut out, seen, names)?;
                out.push(Stmt::Assert(c));
            }
        }
    }
    Ok(out)
}

fn lower_expr(
    e: &TExpr,
    pre: &mut Vec<Stmt>,
    seen: &mut Vec<(Address, String)>,
    names: &mut NameGen,
) -> Result<CExpr, BindError> {
    Ok(match e {
        TExpr::Int(v) => CExpr::Int(v.clone()),
        TExpr::Temp(t) => CExpr::Temp(t.clone()),
        TExpr::Builtin(b) => CExpr::Builtin(*b),
        TExpr::Free(x) => return Err(BindError::ResidualFreeVar(x.clone())),
        TExpr::Bin(op, l, r) => CExpr::bin(
            *op,
            lower_expr(l, pre, seen, names)?,
            lower_expr(r, pre, seen, names)?,
        ),
        TExpr::Read(v, ix) => {
            let indices = ix
                .iter()
                .map(|i| lower_expr(i, pre, seen, names))
                .collect::<Result<_, _>>()?;
            let addr = Address::map(v.clone(), indices);
            if let Some((_, t)) = seen.iter().find(|(a, _)| *a == addr) {
                return Ok(CExpr::Temp(t.clone()));
            }
            let t = names.fresh("__t");
            pre.push(Stmt::Load(t.clone(), addr.clone()));
            seen.push((addr, t.clone()));
            CExpr::Temp(t)
        }
    })
}
