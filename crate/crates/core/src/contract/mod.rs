//! The core contract language: state declarations, functions, and the
//! load/store/if/for/assert statement forms, plus intra-contract calls.

mod ast;
mod callgraph;
mod check;
mod parser;
mod printer;

use thiserror::Error;

use crate::lexer::Pos;

pub use ast::*;
pub use callgraph::{call_graph, reachable_from, CallGraph};
pub use check::check_program;
pub use parser::{parse_contract, parse_instrumented, RESERVED_PREFIX};
pub use printer::{address_to_string, expr_to_string, pretty_print, stmts_to_string};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("identifier `{name}` at {pos} uses the reserved `__` prefix")]
    ReservedIdentifier { pos: Pos, name: String },
    #[error("state variable `{0}` declared twice")]
    DuplicateState(String),
    #[error("function `{0}` defined twice")]
    DuplicateFunction(String),
    #[error("parameter `{param}` repeated in `{function}`")]
    DuplicateParam { function: String, param: String },
    #[error("temp `{temp}` used before assignment in `{function}`")]
    UndeclaredTemp { function: String, temp: String },
    #[error("loop over `{map}` in `{function}` has an iterator that never indexes `{map}`")]
    ForInUnusedIterator { function: String, map: String },
    #[error("unknown state variable `{0}`")]
    UnknownState(String),
    #[error("`{var}` has arity {expected} but is used with {found} indices")]
    ArityMismatch {
        var: String,
        expected: usize,
        found: usize,
    },
    #[error("`{caller}` calls unknown function `{callee}`")]
    UnknownCallee { caller: String, callee: String },
    #[error("`{callee}` takes {expected} arguments, called with {found}")]
    CallArity {
        callee: String,
        expected: usize,
        found: usize,
    },
}
