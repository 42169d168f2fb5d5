use std::collections::BTreeMap;

use num_bigint::BigInt;

/// Binary operators of the contract language. Comparisons and `&&` yield 0/1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Arithmetic that reverts instead of wrapping in 256-bit mode.
    AddChecked,
    SubChecked,
    MulChecked,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::AddChecked => "+!",
            BinOp::SubChecked => "-!",
            BinOp::MulChecked => "*!",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::And => 1,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 2,
            BinOp::Add | BinOp::Sub | BinOp::AddChecked | BinOp::SubChecked => 3,
            BinOp::Mul | BinOp::Div | BinOp::MulChecked => 4,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    /// Transaction originator.
    Sender,
    /// Current frame depth, 1 for the entry function.
    CallDepth,
}

impl Builtin {
    pub fn keyword(self) -> &'static str {
        match self {
            Builtin::Sender => "sender",
            Builtin::CallDepth => "calldepth",
        }
    }
}

/// State-free contract expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CExpr {
    Int(BigInt),
    Temp(String),
    Builtin(Builtin),
    Bin(BinOp, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    pub fn int(v: impl Into<BigInt>) -> Self {
        CExpr::Int(v.into())
    }

    pub fn temp(name: impl Into<String>) -> Self {
        CExpr::Temp(name.into())
    }

    pub fn bin(op: BinOp, lhs: CExpr, rhs: CExpr) -> Self {
        CExpr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Calls `f` on every temp name, left to right.
    pub fn for_each_temp<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            CExpr::Temp(name) => f(name),
            CExpr::Bin(_, l, r) => {
                l.for_each_temp(f);
                r.for_each_temp(f);
            }
            CExpr::Int(_) | CExpr::Builtin(_) => {}
        }
    }

    pub fn mentions_temp(&self, name: &str) -> bool {
        let mut found = false;
        self.for_each_temp(&mut |t| found |= t == name);
        found
    }
}

/// A persistent (or transaction-memory) slot: `v` or `v[e1][e2]...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    pub var: String,
    pub indices: Vec<CExpr>,
}

impl Address {
    pub fn scalar(var: impl Into<String>) -> Self {
        Address {
            var: var.into(),
            indices: Vec::new(),
        }
    }

    pub fn map(var: impl Into<String>, indices: Vec<CExpr>) -> Self {
        Address {
            var: var.into(),
            indices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign(String, CExpr),
    Load(String, Address),
    Store(Address, CExpr),
    If(CExpr, Vec<Stmt>),
    ForIn {
        temps: Vec<String>,
        map: String,
        body: Vec<Stmt>,
    },
    Assert(CExpr),
    Call(String, Vec<CExpr>),
}

/// Where a declared variable lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Storage {
    /// Blockchain state; survives across transactions.
    Persistent,
    /// Zeroed at every transaction start; never persisted.
    Memory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    pub arity: usize,
    pub storage: Storage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub params: Vec<String>,
    pub entry: bool,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub name: String,
    pub decls: Vec<StateDecl>,
    pub functions: Vec<Function>,
}

impl Program {
    pub fn decl(&self, name: &str) -> Option<&StateDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn entry_functions(&self) -> impl Iterator<Item = &Function> {
        self.functions.iter().filter(|f| f.entry)
    }

    /// Arity of every declared variable, by name.
    pub fn arities(&self) -> BTreeMap<String, usize> {
        self.decls.iter().map(|d| (d.name.clone(), d.arity)).collect()
    }
}

/// Visits every statement, outer before inner, in source order.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for stmt in body {
        f(stmt);
        match stmt {
            Stmt::If(_, inner) | Stmt::ForIn { body: inner, .. } => walk_stmts(inner, f),
            _ => {}
        }
    }
}

/// For a `for temps in map { body }` loop, the index position of `map` that
/// each temp ranges over. A temp's position is taken from the first access to
/// `map` in `body` (source order) that uses the temp as a bare index.
/// Returns `None` if some temp never appears that way.
pub fn for_in_positions(temps: &[String], map: &str, body: &[Stmt]) -> Option<Vec<usize>> {
    let mut positions: Vec<Option<usize>> = vec![None; temps.len()];
    walk_stmts(body, &mut |stmt| {
        let addr = match stmt {
            Stmt::Load(_, a) | Stmt::Store(a, _) => a,
            _ => return,
        };
        if addr.var != map {
            return;
        }
        for (slot, temp) in positions.iter_mut().zip(temps) {
            if slot.is_none() {
                *slot = addr
                    .indices
                    .iter()
                    .position(|ix| matches!(ix, CExpr::Temp(t) if t == temp));
            }
        }
    });
    positions.into_iter().collect()
}
