//! Invariant specification language: intermediate `Map ... Sum` declarations
//! and `ForAll ... Assert` constraints over contract state.

mod ast;
mod check;
mod parser;
mod printer;

use thiserror::Error;

use crate::lexer::Pos;

pub use ast::*;
pub use check::{check_spec, TypedSpec};
pub use parser::parse_spec;
pub use printer::{print_cond, print_expr, print_rule, print_spec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unknown operator `{op}` at {pos}")]
    UnknownOperator { op: String, pos: Pos },
    #[error("intermediate `{0}` declared twice")]
    DuplicateIntermediate(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("`{var}` has arity {expected} but is used with {found} indices")]
    ArityMismatch {
        var: String,
        expected: usize,
        found: usize,
    },
    #[error("free variable `{0}` is not declared by its rule")]
    FreeVarScopeError(String),
    #[error("free variable `{0}` is declared twice in one rule")]
    DuplicateFreeVar(String),
    #[error("free variable `{0}` shadows a state or intermediate variable")]
    FreeVarShadows(String),
    #[error("intermediate `{0}` collides with a contract state variable")]
    IntermediateCollision(String),
    #[error("identifier `{0}` uses the reserved `__` prefix")]
    ReservedIdentifier(String),
    #[error("free variable `{0}` has no domain: it indexes no map and no `e == {0}` conjunct fixes it")]
    UnconstrainedFreeVar(String),
}
