use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    /// Truncates toward zero.
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Invariant expression. State and intermediate variables share one namespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IExpr {
    Int(BigInt),
    /// Scalar state or intermediate variable.
    Var(String),
    /// A free variable used as a value, e.g. `b != 0`.
    Free(String),
    /// Full map access `v[x1][x2]...`; every index is a free variable.
    Index(String, Vec<String>),
    Bin(ArithOp, Box<IExpr>, Box<IExpr>),
}

impl IExpr {
    pub fn bin(op: ArithOp, l: IExpr, r: IExpr) -> Self {
        IExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn mentions_free(&self, x: &str) -> bool {
        match self {
            IExpr::Int(_) | IExpr::Var(_) => false,
            IExpr::Free(v) => v == x,
            IExpr::Index(_, ix) => ix.iter().any(|v| v == x),
            IExpr::Bin(_, l, r) => l.mentions_free(x) || r.mentions_free(x),
        }
    }

    /// Every `(map, position, free var)` index occurrence, left to right.
    pub fn index_uses<'a>(&'a self, out: &mut Vec<(&'a str, usize, &'a str)>) {
        match self {
            IExpr::Index(v, ix) => {
                for (p, x) in ix.iter().enumerate() {
                    out.push((v, p, x));
                }
            }
            IExpr::Bin(_, l, r) => {
                l.index_uses(out);
                r.index_uses(out);
            }
            _ => {}
        }
    }

    /// Names of state/intermediate variables read.
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            IExpr::Var(v) | IExpr::Index(v, _) => {
                out.insert(v.clone());
            }
            IExpr::Bin(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
            IExpr::Int(_) | IExpr::Free(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ICond {
    Cmp(CmpOp, IExpr, IExpr),
    /// `e == x` with `x` a free variable.
    EqFree(IExpr, String),
    And(Box<ICond>, Box<ICond>),
}

impl ICond {
    pub fn and(l: ICond, r: ICond) -> Self {
        ICond::And(Box::new(l), Box::new(r))
    }

    pub fn conjuncts(&self) -> Vec<&ICond> {
        match self {
            ICond::And(l, r) => {
                let mut v = l.conjuncts();
                v.extend(r.conjuncts());
                v
            }
            other => vec![other],
        }
    }

    pub fn mentions_free(&self, x: &str) -> bool {
        match self {
            ICond::Cmp(_, l, r) => l.mentions_free(x) || r.mentions_free(x),
            ICond::EqFree(e, v) => v == x || e.mentions_free(x),
            ICond::And(l, r) => l.mentions_free(x) || r.mentions_free(x),
        }
    }

    pub fn index_uses<'a>(&'a self, out: &mut Vec<(&'a str, usize, &'a str)>) {
        match self {
            ICond::Cmp(_, l, r) => {
                l.index_uses(out);
                r.index_uses(out);
            }
            ICond::EqFree(e, _) => e.index_uses(out),
            ICond::And(l, r) => {
                l.index_uses(out);
                r.index_uses(out);
            }
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ICond::Cmp(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
            ICond::EqFree(e, _) => e.vars(out),
            ICond::And(l, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }
}

/// `target = Map index_vars Sum body Over over_vars Where cond;`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapSum {
    pub target: String,
    pub index_vars: Vec<String>,
    pub body: IExpr,
    pub over_vars: Vec<String>,
    pub cond: Option<ICond>,
}

impl MapSum {
    pub fn free_vars(&self) -> impl Iterator<Item = &String> {
        self.index_vars.iter().chain(&self.over_vars)
    }

    pub fn index_uses(&self) -> Vec<(&str, usize, &str)> {
        let mut out = Vec::new();
        self.body.index_uses(&mut out);
        if let Some(c) = &self.cond {
            c.index_uses(&mut out);
        }
        out
    }

    /// Free variables that index no map in body or condition. Their values
    /// come from an `e == x` conjunct instead of from a key domain.
    pub fn determined_vars(&self) -> Vec<(String, IExpr)> {
        let uses = self.index_uses();
        let mut out = Vec::new();
        for x in self.free_vars() {
            if uses.iter().any(|(_, _, v)| v == x) {
                continue;
            }
            let source = self.cond.as_ref().and_then(|c| {
                c.conjuncts().into_iter().find_map(|cj| match cj {
                    ICond::EqFree(e, v) if v == x && !e.mentions_free(x) => Some(e.clone()),
                    _ => None,
                })
            });
            if let Some(e) = source {
                out.push((x.clone(), e));
            }
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.vars(&mut out);
        if let Some(c) = &self.cond {
            c.vars(&mut out);
        }
        out
    }
}

/// `ForAll quant_vars Assert body;`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForAll {
    pub quant_vars: Vec<String>,
    pub body: ICond,
}

impl ForAll {
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.vars(&mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    MapSum(MapSum),
    ForAll(ForAll),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InvariantSpec {
    pub rules: Vec<Rule>,
}

impl InvariantSpec {
    /// Intermediate name to arity, for every `Map` rule.
    pub fn intermediates(&self) -> BTreeMap<String, usize> {
        self.rules
            .iter()
            .filter_map(|r| match r {
                Rule::MapSum(m) => Some((m.target.clone(), m.index_vars.len())),
                Rule::ForAll(_) => None,
            })
            .collect()
    }

    pub fn map_sum(&self, name: &str) -> Option<&MapSum> {
        self.rules.iter().find_map(|r| match r {
            Rule::MapSum(m) if m.target == name => Some(m),
            _ => None,
        })
    }

    pub fn assertions(&self) -> impl Iterator<Item = (usize, &ForAll)> {
        self.rules.iter().enumerate().filter_map(|(i, r)| match r {
            Rule::ForAll(f) => Some((i, f)),
            Rule::MapSum(_) => None,
        })
    }

    /// Contract state variables a set of names depends on, expanding
    /// intermediates through their defining rules. Intermediate names are
    /// kept in the result too.
    pub fn expand_vars(&self, names: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<String> = names.iter().cloned().collect();
        while let Some(n) = stack.pop() {
            if !out.insert(n.clone()) {
                continue;
            }
            if let Some(m) = self.map_sum(&n) {
                stack.extend(m.vars());
            }
        }
        out
    }
}
