use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::contract::{walk_stmts, Function};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    /// Addresses whose accesses were redirected to a temp with one initial
    /// load and one writeback.
    pub cached_addresses: usize,
    /// Loads replaced by a temp already holding the value.
    pub forwarded_loads: usize,
}

/// Reduces persistent loads and stores within each function body. Values
/// never cross a function boundary, so no other frame can observe a
/// pending write.
pub fn cache_state_vars(program: &Program) -> (Program, CacheStats) {
    let mut out = program.clone();
    let mut names = NameGen::for_program(program);
    let mut stats = CacheStats::default();
    let persistent: BTreeSet<String> = program
        .decls
        .iter()
        .filter(|d| d.storage == Storage::Persistent)
        .map(|d| d.name.clone())
        .collect();
    for f in &mut out.functions {
        stats.cached_addresses += cache_function(f, &persistent, &mut names);
        let mut fwd = Forward {
            persistent: &persistent,
            names: &mut names,
            forwarded: 0,
        };
        f.body = fwd.block(&f.body, &mut Vec::new());
        stats.forwarded_loads += fwd.forwarded;
    }
    (out, stats)
}

#[derive(Default)]
struct Usage {
    addresses: BTreeSet<Address>,
    count: usize,
    first_top: Option<bool>,
    top_store: bool,
    any_store: bool,
}

fn assigned_temps(body: &[Stmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    walk_stmts(body, &mut |s| match s {
        Stmt::Assign(t, _) | Stmt::Load(t, _) => {
            out.insert(t.clone());
        }
        Stmt::ForIn { temps, .. } => out.extend(temps.iter().cloned()),
        _ => {}
    });
    out
}

fn usage(body: &[Stmt], top: bool, persistent: &BTreeSet<String>, out: &mut BTreeMap<String, Usage>) {
    for s in body {
        let access = match s {
            Stmt::Load(_, a) => Some((a, false)),
            Stmt::Store(a, _) => Some((a, true)),
            _ => None,
        };
        if let Some((a, store)) = access.filter(|(a, _)| persistent.contains(&a.var)) {
            let u = out.entry(a.var.clone()).or_default();
            u.addresses.insert(a.clone());
            u.count += 1;
            u.first_top.get_or_insert(top);
            u.any_store |= store;
            u.top_store |= store && top;
        }
        match s {
            Stmt::If(_, b) => usage(b, false, persistent, out),
            Stmt::ForIn { body, .. } => usage(body, false, persistent, out),
            _ => {}
        }
    }
}

struct Cached {
    temp: String,
    dirty: Option<String>,
    started: bool,
}

/// Full caching: a variable touched through exactly one address whose
/// indices cannot change during the call.
fn cache_function(f: &mut Function, persistent: &BTreeSet<String>, names: &mut NameGen) -> usize {
    let mut has_call = false;
    let mut iterated = BTreeSet::new();
    walk_stmts(&f.body, &mut |s| match s {
        Stmt::Call(..) => has_call = true,
        Stmt::ForIn { map, .. } => {
            iterated.insert(map.clone());
        }
        _ => {}
    });
    if has_call {
        return 0;
    }
    let assigned = assigned_temps(&f.body);
    let mut uses = BTreeMap::new();
    usage(&f.body, true, persistent, &mut uses);
    let mut plan: BTreeMap<Address, (Cached, &Usage)> = BTreeMap::new();
    for (var, u) in &uses {
        if u.addresses.len() != 1 || u.count < 2 || u.first_top != Some(true) || iterated.contains(var)
        {
            continue;
        }
        let a = u.addresses.first().expect("one address");
        let mut stable = true;
        for i in &a.indices {
            i.for_each_temp(&mut |t| stable &= !assigned.contains(t));
        }
        if !stable {
            continue;
        }
        let dirty = (u.any_store && !u.top_store).then(|| names.fresh("__d"));
        plan.insert(
            a.clone(),
            (
                Cached {
                    temp: names.fresh("__c"),
                    dirty,
                    started: false,
                },
                u,
            ),
        );
    }
    if plan.is_empty() {
        return 0;
    }
    let mut body = redirect(&f.body, &mut plan);
    for (a, (c, u)) in &plan {
        let wb = Stmt::Store(a.clone(), CExpr::temp(c.temp.clone()));
        if u.top_store {
            body.push(wb);
        } else if let Some(d) = &c.dirty {
            body.push(Stmt::If(CExpr::temp(d.clone()), vec![wb]));
        }
    }
    f.body = body;
    plan.len()
}

fn redirect(body: &[Stmt], plan: &mut BTreeMap<Address, (Cached, &Usage)>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in body {
        match s {
            Stmt::Load(t, a) if plan.contains_key(a) => {
                let (c, _) = plan.get_mut(a).expect("planned");
                if !c.started {
                    c.started = true;
                    out.push(Stmt::Load(c.temp.clone(), a.clone()));
                    if let Some(d) = &c.dirty {
                        out.push(Stmt::Assign(d.clone(), CExpr::int(0)));
                    }
                }
                out.push(Stmt::Assign(t.clone(), CExpr::temp(c.temp.clone())));
            }
            Stmt::Store(a, e) if plan.contains_key(a) => {
                let (c, _) = plan.get_mut(a).expect("planned");
                if !c.started {
                    c.started = true;
                    if let Some(d) = &c.dirty {
                        out.push(Stmt::Assign(d.clone(), CExpr::int(0)));
                    }
                }
                out.push(Stmt::Assign(c.temp.clone(), e.clone()));
                if let Some(d) = &c.dirty {
                    out.push(Stmt::Assign(d.clone(), CExpr::int(1)));
                }
            }
            Stmt::If(cond, b) => out.push(Stmt::If(cond.clone(), redirect(b, plan))),
            Stmt::ForIn { temps, map, body } => out.push(Stmt::ForIn {
                temps: temps.clone(),
                map: map.clone(),
                body: redirect(body, plan),
            }),
            other => out.push(other.clone()),
        }
    }
    out
}

/// Load forwarding: a load of an address whose value is already in a temp
/// (from an earlier load or store in the same straight-line region) becomes
/// a temp copy.
struct Forward<'a> {
    persistent: &'a BTreeSet<String>,
    names: &'a mut NameGen,
    forwarded: usize,
}

type Known = Vec<(Address, CExpr)>;

fn forget_temp(known: &mut Known, t: &str) {
    known.retain(|(a, v)| !v.mentions_temp(t) && !a.indices.iter().any(|i| i.mentions_temp(t)));
}

fn forget_effects(known: &mut Known, body: &[Stmt]) {
    let mut vars = BTreeSet::new();
    walk_stmts(body, &mut |s| {
        if let Stmt::Store(a, _) = s {
            vars.insert(a.var.clone());
        }
    });
    known.retain(|(a, _)| !vars.contains(&a.var));
    for t in assigned_temps(body) {
        forget_temp(known, &t);
    }
}

impl Forward<'_> {
    fn block(&mut self, body: &[Stmt], known: &mut Known) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in body {
            match s {
                Stmt::Load(t, a) if self.persistent.contains(&a.var) => {
                    if let Some((_, v)) = known.iter().find(|(k, _)| k == a) {
                        out.push(Stmt::Assign(t.clone(), v.clone()));
                        self.forwarded += 1;
                        let v = v.clone();
                        forget_temp(known, t);
                        if !v.mentions_temp(t) {
                            known.push((a.clone(), CExpr::temp(t.clone())));
                        }
                        continue;
                    }
                    forget_temp(known, t);
                    if !a.indices.iter().any(|i| i.mentions_temp(t)) {
                        known.push((a.clone(), CExpr::temp(t.clone())));
                    }
                    out.push(s.clone());
                }
                Stmt::Store(a, e) if self.persistent.contains(&a.var) => {
                    known.retain(|(k, _)| k.var != a.var);
                    let v = match e {
                        CExpr::Temp(_) | CExpr::Int(_) => e.clone(),
                        _ => {
                            let f = self.names.fresh("__f");
                            out.push(Stmt::Assign(f.clone(), e.clone()));
                            CExpr::temp(f)
                        }
                    };
                    out.push(Stmt::Store(a.clone(), v.clone()));
                    known.push((a.clone(), v));
                }
                Stmt::Load(t, _) | Stmt::Assign(t, _) => {
                    forget_temp(known, t);
                    out.push(s.clone());
                }
                Stmt::If(c, b) => {
                    let inner = self.block(b, &mut known.clone());
                    forget_effects(known, b);
                    out.push(Stmt::If(c.clone(), inner));
                }
                Stmt::ForIn { temps, map, body } => {
                    forget_effects(known, body);
                    for t in temps {
                        forget_temp(known, t);
                    }
                    let inner = self.block(body, &mut known.clone());
                    out.push(Stmt::ForIn {
                        temps: temps.clone(),
                        map: map.clone(),
                        body: inner,
                    });
                }
                Stmt::Call(..) => {
                    known.clear();
                    out.push(s.clone());
                }
                Stmt::Store(..) | Stmt::Assert(_) => out.push(s.clone()),
            }
        }
        out
    }
}
