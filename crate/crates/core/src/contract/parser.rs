use num_bigint::BigInt;

use super::ast::*;
use super::check::check_program;
use super::ContractError;
use crate::lexer::{tokenize, LexError, Pos, Tok, Token};

const KEYWORDS: &[&str] = &[
    "contract", "state", "memory", "entry", "fn", "load", "store", "if", "for", "in", "assert",
    "int", "map", "sender", "calldepth",
];

/// Prefix reserved for names generated by the instrumenter.
pub const RESERVED_PREFIX: &str = "__";

/// Parses and checks a user-written contract. Identifiers starting with
/// `__` are rejected.
pub fn parse_contract(text: &str) -> Result<Program, ContractError> {
    parse_with(text, false)
}

/// Like [`parse_contract`] but accepts reserved `__` identifiers, as found in
/// instrumenter output.
pub fn parse_instrumented(text: &str) -> Result<Program, ContractError> {
    parse_with(text, true)
}

fn parse_with(text: &str, allow_reserved: bool) -> Result<Program, ContractError> {
    let tokens = tokenize(text).map_err(|e| match e {
        LexError::UnknownOperator { op, pos } => ContractError::Syntax {
            pos,
            msg: format!("unknown operator `{op}`"),
        },
        LexError::UnexpectedChar { ch, pos } => ContractError::Syntax {
            pos,
            msg: format!("unexpected character `{ch}`"),
        },
    })?;
    let mut p = Parser {
        tokens,
        at: 0,
        allow_reserved,
    };
    let program = p.program()?;
    check_program(&program)?;
    Ok(program)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    allow_reserved: bool,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        let i = (self.at + 1).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ContractError> {
        Err(ContractError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ContractError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ContractError> {
        if self.is_kw(kw) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, ContractError> {
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                if !self.allow_reserved && name.starts_with(RESERVED_PREFIX) {
                    return Err(ContractError::ReservedIdentifier {
                        pos: self.pos(),
                        name,
                    });
                }
                self.next();
                Ok(name)
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    fn program(&mut self) -> Result<Program, ContractError> {
        self.expect_kw("contract")?;
        let name = self.ident()?;
        self.expect(Tok::LBrace)?;
        let mut decls = Vec::new();
        let mut functions = Vec::new();
        while *self.peek() != Tok::RBrace {
            if self.is_kw("state") || self.is_kw("memory") {
                decls.push(self.decl()?);
            } else if self.is_kw("entry") || self.is_kw("fn") {
                functions.push(self.function()?);
            } else {
                return self.err(format!(
                    "expected `state`, `memory`, `entry` or `fn`, found {}",
                    self.peek()
                ));
            }
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::Eof)?;
        Ok(Program {
            name,
            decls,
            functions,
        })
    }

    fn decl(&mut self) -> Result<StateDecl, ContractError> {
        let storage = if self.is_kw("state") {
            Storage::Persistent
        } else {
            Storage::Memory
        };
        self.next();
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let arity = if self.is_kw("int") {
            self.next();
            0
        } else if self.is_kw("map") {
            self.next();
            self.expect(Tok::Caret)?;
            match self.next().tok {
                Tok::Int(k) if k >= BigInt::from(1) && k <= BigInt::from(16) => {
                    usize::try_from(k).expect("small arity")
                }
                _ => return self.err("map arity must be an integer between 1 and 16"),
            }
        } else {
            return self.err(format!("expected `int` or `map^k`, found {}", self.peek()));
        };
        self.expect(Tok::Semi)?;
        Ok(StateDecl {
            name,
            arity,
            storage,
        })
    }

    fn function(&mut self) -> Result<Function, ContractError> {
        let entry = self.is_kw("entry");
        if entry {
            self.next();
        }
        self.expect_kw("fn")?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            entry,
            body,
        })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ContractError> {
        self.expect(Tok::LBrace)?;
        let mut body = Vec::new();
        while *self.peek() != Tok::RBrace {
            body.push(self.stmt()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(body)
    }

    fn stmt(&mut self) -> Result<Stmt, ContractError> {
        if self.is_kw("store") {
            self.next();
            let addr = self.address()?;
            self.expect(Tok::Comma)?;
            let value = self.expr()?;
            self.expect(Tok::Semi)?;
            return Ok(Stmt::Store(addr, value));
        }
        if self.is_kw("if") {
            self.next();
            let cond = self.expr()?;
            let body = self.block()?;
            return Ok(Stmt::If(cond, body));
        }
        if self.is_kw("for") {
            self.next();
            let mut temps = vec![self.ident()?];
            while *self.peek() == Tok::Comma {
                self.next();
                temps.push(self.ident()?);
            }
            self.expect_kw("in")?;
            let map = self.ident()?;
            let body = self.block()?;
            return Ok(Stmt::ForIn { temps, map, body });
        }
        if self.is_kw("assert") {
            self.next();
            let cond = self.expr()?;
            self.expect(Tok::Semi)?;
            return Ok(Stmt::Assert(cond));
        }
        if *self.peek2() == Tok::LParen {
            let callee = self.ident()?;
            self.expect(Tok::LParen)?;
            let mut args = Vec::new();
            if *self.peek() != Tok::RParen {
                loop {
                    args.push(self.expr()?);
                    if *self.peek() == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
            self.expect(Tok::Semi)?;
            return Ok(Stmt::Call(callee, args));
        }
        let target = self.ident()?;
        self.expect(Tok::Assign)?;
        if self.is_kw("load") {
            self.next();
            let addr = self.address()?;
            self.expect(Tok::Semi)?;
            return Ok(Stmt::Load(target, addr));
        }
        let value = self.expr()?;
        self.expect(Tok::Semi)?;
        Ok(Stmt::Assign(target, value))
    }

    fn address(&mut self) -> Result<Address, ContractError> {
        let var = self.ident()?;
        let mut indices = Vec::new();
        while *self.peek() == Tok::LBracket {
            self.next();
            indices.push(self.expr()?);
            self.expect(Tok::RBracket)?;
        }
        Ok(Address { var, indices })
    }

    fn expr(&mut self) -> Result<CExpr, ContractError> {
        self.expr_prec(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::PlusChecked => BinOp::AddChecked,
            Tok::MinusChecked => BinOp::SubChecked,
            Tok::StarChecked => BinOp::MulChecked,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::AndAnd => BinOp::And,
            _ => return None,
        })
    }

    fn expr_prec(&mut self, min: u8) -> Result<CExpr, ContractError> {
        let mut lhs = self.primary()?;
        while let Some(op) = self.binop() {
            if op.precedence() < min {
                break;
            }
            self.next();
            let rhs = self.expr_prec(op.precedence() + 1)?;
            lhs = CExpr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<CExpr, ContractError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(CExpr::Int(v))
            }
            Tok::Minus if matches!(self.peek2(), Tok::Int(_)) => {
                self.next();
                let Tok::Int(v) = self.next().tok else {
                    unreachable!()
                };
                Ok(CExpr::Int(-v))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) if name == "sender" => {
                self.next();
                Ok(CExpr::Builtin(Builtin::Sender))
            }
            Tok::Ident(name) if name == "calldepth" => {
                self.next();
                Ok(CExpr::Builtin(Builtin::CallDepth))
            }
            Tok::Ident(name) if name == "load" => {
                self.err("`load` is a statement; write `t = load a;`")
            }
            Tok::Ident(_) => Ok(CExpr::Temp(self.ident()?)),
            other => self.err(format!("expected expression, found {other}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_is_left_associative() {
        let p = parse_contract("contract C { fn f(a, b, c) { x = a - b - c * 2; } }").unwrap();
        let Stmt::Assign(_, e) = &p.functions[0].body[0] else {
            panic!()
        };
        let expected = CExpr::bin(
            BinOp::Sub,
            CExpr::bin(BinOp::Sub, CExpr::temp("a"), CExpr::temp("b")),
            CExpr::bin(BinOp::Mul, CExpr::temp("c"), CExpr::int(2)),
        );
        assert_eq!(*e, expected);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_contract("contract C {\n  fn f() { store x 1; }\n}").unwrap_err();
        match err {
            ContractError::Syntax { pos, .. } => assert_eq!(pos.line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reserved_names_rejected_unless_instrumented() {
        let src = "contract C { state __iv_x: int; }";
        assert!(matches!(
            parse_contract(src),
            Err(ContractError::ReservedIdentifier { .. })
        ));
        assert!(parse_instrumented(src).is_ok());
    }

    #[test]
    fn empty_contract() {
        let p = parse_contract("contract Empty {}").unwrap();
        assert!(p.functions.is_empty());
        assert!(p.decls.is_empty());
    }
}
