use std::collections::BTreeSet;

use super::ast::*;
use super::SpecError;
use crate::lexer::{tokenize, LexError, Pos, Tok, Token};

const KEYWORDS: &[&str] = &["Map", "Sum", "Over", "Where", "ForAll", "Assert"];

/// Parses `.inv` text. Rules end with `;`; `#` starts a comment.
pub fn parse_spec(text: &str) -> Result<InvariantSpec, SpecError> {
    let tokens = tokenize(text).map_err(|e| match e {
        LexError::UnknownOperator { op, pos } => SpecError::UnknownOperator { op, pos },
        LexError::UnexpectedChar { ch, pos } => SpecError::Syntax {
            pos,
            msg: format!("unexpected character `{ch}`"),
        },
    })?;
    let mut p = Parser { tokens, at: 0 };
    let mut rules = Vec::new();
    let mut targets = BTreeSet::new();
    while *p.peek() != Tok::Eof {
        let rule = p.rule()?;
        if let Rule::MapSum(m) = &rule {
            if !targets.insert(m.target.clone()) {
                return Err(SpecError::DuplicateIntermediate(m.target.clone()));
            }
        }
        rules.push(rule);
    }
    Ok(InvariantSpec { rules })
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn next(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SpecError> {
        Err(SpecError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SpecError> {
        if self.is_kw(kw) {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SpecError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.err(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> Result<String, SpecError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other}")),
        }
    }

    /// Possibly empty comma-separated identifier list.
    fn var_list(&mut self) -> Result<Vec<String>, SpecError> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str())) {
            out.push(self.ident()?);
            while *self.peek() == Tok::Comma {
                self.next();
                out.push(self.ident()?);
            }
        }
        Ok(out)
    }

    fn rule(&mut self) -> Result<Rule, SpecError> {
        if self.is_kw("ForAll") {
            self.next();
            let quant_vars = self.var_list()?;
            self.expect_kw("Assert")?;
            let body = self.cond()?;
            self.expect(Tok::Semi)?;
            let free: BTreeSet<_> = quant_vars.iter().cloned().collect();
            return Ok(Rule::ForAll(ForAll {
                quant_vars,
                body: resolve_cond(body, &free),
            }));
        }
        let target = self.ident()?;
        self.expect(Tok::Assign)?;
        self.expect_kw("Map")?;
        let index_vars = self.var_list()?;
        self.expect_kw("Sum")?;
        let body = self.expr()?;
        let over_vars = if self.is_kw("Over") {
            self.next();
            self.var_list()?
        } else {
            Vec::new()
        };
        let cond = if self.is_kw("Where") {
            self.next();
            Some(self.cond()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        let free: BTreeSet<_> = index_vars.iter().chain(&over_vars).cloned().collect();
        Ok(Rule::MapSum(MapSum {
            target,
            index_vars,
            body: resolve_expr(body, &free),
            over_vars,
            cond: cond.map(|c| resolve_cond(c, &free)),
        }))
    }

    fn cond(&mut self) -> Result<ICond, SpecError> {
        let mut lhs = self.cmp()?;
        while *self.peek() == Tok::AndAnd {
            self.next();
            let rhs = self.cmp()?;
            lhs = ICond::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<ICond, SpecError> {
        if *self.peek() == Tok::LParen && self.paren_holds_cond() {
            self.next();
            let c = self.cond()?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::EqEq => CmpOp::Eq,
            Tok::NotEq => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::PlusChecked | Tok::MinusChecked | Tok::StarChecked => {
                return Err(SpecError::UnknownOperator {
                    op: self.peek().to_string().trim_matches('`').to_string(),
                    pos: self.pos(),
                })
            }
            other => return self.err(format!("expected comparison operator, found {other}")),
        };
        self.next();
        let rhs = self.expr()?;
        Ok(ICond::Cmp(op, lhs, rhs))
    }

    /// Whether the parenthesis at the cursor wraps a condition (contains a
    /// comparison or `&&` at its own nesting level) rather than an expression.
    fn paren_holds_cond(&self) -> bool {
        let mut depth = 0usize;
        for t in &self.tokens[self.at..] {
            match t.tok {
                Tok::LParen => depth += 1,
                Tok::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        return false;
                    }
                }
                Tok::EqEq | Tok::NotEq | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::AndAnd
                    if depth == 1 =>
                {
                    return true
                }
                Tok::Eof => return false,
                _ => {}
            }
        }
        false
    }

    fn expr(&mut self) -> Result<IExpr, SpecError> {
        self.expr_prec(1)
    }

    fn arith(&self) -> Result<Option<ArithOp>, SpecError> {
        Ok(match self.peek() {
            Tok::Plus => Some(ArithOp::Add),
            Tok::Minus => Some(ArithOp::Sub),
            Tok::Star => Some(ArithOp::Mul),
            Tok::Slash => Some(ArithOp::Div),
            Tok::PlusChecked | Tok::MinusChecked | Tok::StarChecked => {
                return Err(SpecError::UnknownOperator {
                    op: self.peek().to_string().trim_matches('`').to_string(),
                    pos: self.pos(),
                })
            }
            _ => None,
        })
    }

    fn expr_prec(&mut self, min: u8) -> Result<IExpr, SpecError> {
        let mut lhs = self.primary()?;
        while let Some(op) = self.arith()? {
            if op.precedence() < min {
                break;
            }
            self.next();
            let rhs = self.expr_prec(op.precedence() + 1)?;
            lhs = IExpr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<IExpr, SpecError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(IExpr::Int(v))
            }
            Tok::Minus => {
                self.next();
                match self.next() {
                    Tok::Int(v) => Ok(IExpr::Int(-v)),
                    _ => self.err("expected integer after unary `-`"),
                }
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if *self.peek() != Tok::LBracket {
                    return Ok(IExpr::Var(name));
                }
                let mut indices = Vec::new();
                while *self.peek() == Tok::LBracket {
                    self.next();
                    indices.push(self.ident()?);
                    self.expect(Tok::RBracket)?;
                }
                Ok(IExpr::Index(name, indices))
            }
            other => self.err(format!("expected expression, found {other}")),
        }
    }
}

fn resolve_expr(e: IExpr, free: &BTreeSet<String>) -> IExpr {
    match e {
        IExpr::Var(v) if free.contains(&v) => IExpr::Free(v),
        IExpr::Bin(op, l, r) => IExpr::bin(op, resolve_expr(*l, free), resolve_expr(*r, free)),
        other => other,
    }
}

fn resolve_cond(c: ICond, free: &BTreeSet<String>) -> ICond {
    match c {
        ICond::Cmp(op, l, r) => {
            let l = resolve_expr(l, free);
            match resolve_expr(r, free) {
                IExpr::Free(x) if op == CmpOp::Eq => ICond::EqFree(l, x),
                r => ICond::Cmp(op, l, r),
            }
        }
        ICond::And(l, r) => ICond::and(resolve_cond(*l, free), resolve_cond(*r, free)),
        eq @ ICond::EqFree(..) => eq,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const VOTE: &str = "s = Map a, b Sum weights[a][c] Over c Where ballots[a][c] == b && b != 0;
                        ForAll x, y Assert s[x][y] == weightedVoteCount[x][y];";

    #[test]
    fn vote_spec_shape() {
        let spec = parse_spec(VOTE).unwrap();
        assert_eq!(spec.rules.len(), 2);
        let Rule::MapSum(m) = &spec.rules[0] else {
            panic!()
        };
        assert_eq!(m.index_vars, vec!["a", "b"]);
        assert_eq!(m.over_vars, vec!["c"]);
        let cond = m.cond.as_ref().unwrap();
        let cj = cond.conjuncts();
        assert!(matches!(cj[0], ICond::EqFree(IExpr::Index(v, _), x) if v == "ballots" && x == "b"));
        assert!(matches!(cj[1], ICond::Cmp(CmpOp::Ne, IExpr::Free(x), IExpr::Int(_)) if x == "b"));
        assert!(matches!(&spec.rules[1], Rule::ForAll(f) if f.quant_vars == ["x", "y"]));
    }

    #[test]
    fn scalar_intermediate_and_unquantified_assert() {
        let spec = parse_spec("t = Map Sum balances[y] Over y; ForAll Assert t == totalSupply;")
            .unwrap();
        let Rule::MapSum(m) = &spec.rules[0] else {
            panic!()
        };
        assert!(m.index_vars.is_empty());
        assert!(m.cond.is_none());
        let Rule::ForAll(f) = &spec.rules[1] else {
            panic!()
        };
        assert!(f.quant_vars.is_empty());
        assert_eq!(
            f.body,
            ICond::Cmp(CmpOp::Eq, IExpr::Var("t".into()), IExpr::Var("totalSupply".into()))
        );
    }

    #[test]
    fn empty_input_is_empty_spec() {
        assert!(parse_spec("").unwrap().rules.is_empty());
        assert!(parse_spec("  # only a comment\n").unwrap().rules.is_empty());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_spec("t = Map Sum a[y] Over y; t = Map Sum b[y] Over y;"),
            Err(SpecError::DuplicateIntermediate(n)) if n == "t"
        ));
        assert!(matches!(
            parse_spec("ForAll Assert a % 2 == 0;"),
            Err(SpecError::UnknownOperator { .. })
        ));
        assert!(matches!(
            parse_spec("ForAll Assert a == ;"),
            Err(SpecError::Syntax { .. })
        ));
        match parse_spec("t = Map Sum x\n  Over y").unwrap_err() {
            SpecError::Syntax { pos, .. } => assert_eq!(pos.line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parenthesized_condition() {
        let spec = parse_spec("ForAll x Assert (a[x] > 0 && a[x] < 10) && (b[x] + 1) > 0;").unwrap();
        let Rule::ForAll(f) = &spec.rules[0] else {
            panic!()
        };
        assert_eq!(f.body.conjuncts().len(), 3);
    }
}
