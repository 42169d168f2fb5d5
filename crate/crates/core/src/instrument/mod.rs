//! Rewrites a contract so that every transaction violating an invariant
//! reverts.

mod cache;
mod delta;
mod naive;
mod prune;

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};
use thiserror::Error;

use crate::binder::{lower, BindError, NameGen, TExpr, TStmt};
use crate::contract::{
    check_program, Address, BinOp, CExpr, ContractError, Program, StateDecl, Stmt, Storage,
};
use crate::spec_lang::{ICond, IExpr, TypedSpec};

pub use cache::{cache_state_vars, CacheStats};
pub use prune::prune_checks;

/// Persistent call-depth counter.
pub const CALL_DEPTH: &str = "__cd";
pub const INTERMEDIATE_PREFIX: &str = "__iv_";
pub const MARKER_PREFIX: &str = "__mk_";
/// Prefix of the temp that gates the exit check of rule `i`: `__ck<i>`.
pub const CHECK_PREFIX: &str = "__ck";
const DEPTH_BEFORE: &str = "__cd0";
const DEPTH_AFTER: &str = "__cd1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InstrumentMode {
    #[default]
    Delta,
    Naive,
    None,
}

impl FromStr for InstrumentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delta" => Ok(InstrumentMode::Delta),
            "naive" => Ok(InstrumentMode::Naive),
            "none" => Ok(InstrumentMode::None),
            other => Err(format!("unknown mode `{other}` (expected delta, naive or none)")),
        }
    }
}

impl fmt::Display for InstrumentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstrumentMode::Delta => "delta",
            InstrumentMode::Naive => "naive",
            InstrumentMode::None => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrumentError {
    #[error(transparent)]
    Bind(#[from] BindError),
    #[error("generated name `{0}` is already declared")]
    InstrumentationCollision(String),
    #[error("instrumented program is malformed: {0}")]
    Malformed(#[from] ContractError),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstrumentStats {
    pub mode: InstrumentMode,
    /// Store statements that received delta updates or markers.
    pub stores_instrumented: usize,
    /// Exit checks emitted, one per assertion rule and entry function.
    pub checks_emitted: usize,
    pub checks_pruned: usize,
    pub cached_addresses: usize,
    pub forwarded_loads: usize,
}

impl InstrumentStats {
    pub fn to_json(&self) -> Value {
        json!({
            "mode": self.mode.to_string(),
            "stores_instrumented": self.stores_instrumented,
            "checks_emitted": self.checks_emitted,
            "checks_pruned": self.checks_pruned,
            "cached_addresses": self.cached_addresses,
            "forwarded_loads": self.forwarded_loads,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Options {
    pub mode: InstrumentMode,
    pub prune: bool,
    pub cache: bool,
}

impl Options {
    pub fn mode(mode: InstrumentMode) -> Self {
        Options {
            mode,
            ..Options::default()
        }
    }

    /// Delta mode with both optimizations.
    pub fn optimized() -> Self {
        Options {
            mode: InstrumentMode::Delta,
            prune: true,
            cache: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instrumented {
    pub program: Program,
    pub stats: InstrumentStats,
}

/// Instruments `program` without optimizations.
pub fn instrument(
    program: &Program,
    spec: &TypedSpec,
    mode: InstrumentMode,
) -> Result<Instrumented, InstrumentError> {
    let (program, mut stats) = match mode {
        InstrumentMode::None => (program.clone(), InstrumentStats::default()),
        InstrumentMode::Delta => delta::instrument(program, spec)?,
        InstrumentMode::Naive => naive::instrument(program, spec)?,
    };
    stats.mode = mode;
    check_program(&program)?;
    Ok(Instrumented { program, stats })
}

/// Instrumentation followed by the requested optimization passes.
pub fn compile(
    program: &Program,
    spec: &TypedSpec,
    options: &Options,
) -> Result<Instrumented, InstrumentError> {
    let mut out = instrument(program, spec, options.mode)?;
    if options.prune {
        let (p, pruned) = prune_checks(&out.program, spec);
        out.program = p;
        out.stats.checks_pruned = pruned;
    }
    if options.cache {
        let (p, cs) = cache_state_vars(&out.program);
        out.program = p;
        out.stats.cached_addresses = cs.cached_addresses;
        out.stats.forwarded_loads = cs.forwarded_loads;
    }
    check_program(&out.program)?;
    Ok(out)
}

fn declare(
    program: &mut Program,
    name: String,
    arity: usize,
    storage: Storage,
) -> Result<(), InstrumentError> {
    if program.decl(&name).is_some() {
        return Err(InstrumentError::InstrumentationCollision(name));
    }
    program.decls.push(StateDecl {
        name,
        arity,
        storage,
    });
    Ok(())
}

fn rename_expr(e: &IExpr, to: &impl Fn(&str) -> String) -> IExpr {
    match e {
        IExpr::Var(v) => IExpr::Var(to(v)),
        IExpr::Index(v, ix) => IExpr::Index(to(v), ix.clone()),
        IExpr::Bin(op, l, r) => IExpr::bin(*op, rename_expr(l, to), rename_expr(r, to)),
        other => other.clone(),
    }
}

fn rename_cond(c: &ICond, to: &impl Fn(&str) -> String) -> ICond {
    match c {
        ICond::Cmp(op, l, r) => ICond::Cmp(*op, rename_expr(l, to), rename_expr(r, to)),
        ICond::EqFree(e, x) => ICond::EqFree(rename_expr(e, to), x.clone()),
        ICond::And(l, r) => ICond::and(rename_cond(l, to), rename_cond(r, to)),
    }
}

/// Replaces each store with `before ++ [store] ++ after`, recursing into
/// blocks. Inserted statements are not revisited. Returns how many stores
/// received any insertion.
fn around_stores<E>(
    body: &[Stmt],
    f: &mut impl FnMut(&Address) -> Result<(Vec<Stmt>, Vec<Stmt>), E>,
) -> Result<(Vec<Stmt>, usize), E> {
    let mut out = Vec::new();
    let mut count = 0;
    for s in body {
        match s {
            Stmt::Store(a, _) => {
                let (pre, post) = f(a)?;
                if !pre.is_empty() || !post.is_empty() {
                    count += 1;
                }
                out.extend(pre);
                out.push(s.clone());
                out.extend(post);
            }
            Stmt::If(c, b) => {
                let (b, n) = around_stores(b, f)?;
                count += n;
                out.push(Stmt::If(c.clone(), b));
            }
            Stmt::ForIn { temps, map, body } => {
                let (b, n) = around_stores(body, f)?;
                count += n;
                out.push(Stmt::ForIn {
                    temps: temps.clone(),
                    map: map.clone(),
                    body: b,
                });
            }
            other => out.push(other.clone()),
        }
    }
    Ok((out, count))
}

/// `for k.. in quant_domain { assert body }` style checks are built by the
/// modes; this wraps them in the depth gate of rule `rule`.
fn gate(rule: usize, check: Vec<Stmt>) -> Vec<Stmt> {
    let ck = format!("{CHECK_PREFIX}{rule}");
    vec![
        Stmt::Assign(
            ck.clone(),
            CExpr::bin(BinOp::Eq, CExpr::temp(DEPTH_AFTER), CExpr::int(1)),
        ),
        Stmt::If(CExpr::temp(ck), check),
    ]
}

/// Rule index of a gate assignment `__ck<i> = ...`.
fn gate_rule(s: &Stmt) -> Option<usize> {
    match s {
        Stmt::Assign(t, _) => t.strip_prefix(CHECK_PREFIX)?.parse().ok(),
        _ => None,
    }
}

/// Adds call-depth tracking to every entry function and appends the given
/// per-rule checks before each entry function's exit.
fn add_plumbing(
    program: &mut Program,
    checks: &[(usize, Vec<Stmt>)],
) -> Result<usize, InstrumentError> {
    if checks.is_empty() {
        return Ok(0);
    }
    declare(program, CALL_DEPTH.to_string(), 0, Storage::Persistent)?;
    let mut emitted = 0;
    for f in program.functions.iter_mut().filter(|f| f.entry) {
        let mut body = vec![
            Stmt::Load(DEPTH_BEFORE.into(), Address::scalar(CALL_DEPTH)),
            Stmt::Assign(
                DEPTH_AFTER.into(),
                CExpr::bin(BinOp::Add, CExpr::temp(DEPTH_BEFORE), CExpr::int(1)),
            ),
            Stmt::Store(Address::scalar(CALL_DEPTH), CExpr::temp(DEPTH_AFTER)),
        ];
        body.append(&mut f.body);
        for (rule, check) in checks {
            body.extend(gate(*rule, check.clone()));
            emitted += 1;
        }
        body.push(Stmt::Store(Address::scalar(CALL_DEPTH), CExpr::temp(DEPTH_BEFORE)));
        f.body = body;
    }
    Ok(emitted)
}

/// `for k1.. in domain { .. }` over the quantifier variables of an assertion
/// whose instances are flagged in `marker`, checking each flagged instance.
fn marker_check(
    marker: &str,
    quant_vars: &[String],
    body: &TExpr,
    names: &mut NameGen,
) -> Result<Vec<Stmt>, BindError> {
    let temps: Vec<String> = quant_vars.iter().map(|_| names.fresh("__t")).collect();
    let mut assertion = TStmt::Assert(body.clone());
    for (x, t) in quant_vars.iter().zip(&temps) {
        assertion = assertion.subst(x, &TExpr::temp(t.clone()));
    }
    let key = if temps.is_empty() {
        vec![TExpr::Int(0.into())]
    } else {
        temps.iter().map(|t| TExpr::temp(t.clone())).collect()
    };
    let flagged = TStmt::If(TExpr::read(marker, key), vec![assertion]);
    let t = if temps.is_empty() {
        vec![flagged]
    } else {
        vec![TStmt::ForIn(temps, marker.to_string(), vec![flagged])]
    };
    lower(&t, names)
}
