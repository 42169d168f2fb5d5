use std::fmt::Write;

use super::ast::*;

/// Canonical `.inv` text, one rule per line.
pub fn print_spec(spec: &InvariantSpec) -> String {
    let mut out = String::new();
    for r in &spec.rules {
        out.push_str(&print_rule(r));
        out.push('\n');
    }
    out
}

pub fn print_rule(rule: &Rule) -> String {
    match rule {
        Rule::MapSum(m) => {
            let mut s = format!("{} = Map", m.target);
            if !m.index_vars.is_empty() {
                write!(s, " {}", m.index_vars.join(", ")).unwrap();
            }
            write!(s, " Sum {}", print_expr(&m.body)).unwrap();
            if !m.over_vars.is_empty() {
                write!(s, " Over {}", m.over_vars.join(", ")).unwrap();
            }
            if let Some(c) = &m.cond {
                write!(s, " Where {}", print_cond(c)).unwrap();
            }
            s.push(';');
            s
        }
        Rule::ForAll(f) => {
            let mut s = "ForAll".to_string();
            if !f.quant_vars.is_empty() {
                write!(s, " {}", f.quant_vars.join(", ")).unwrap();
            }
            write!(s, " Assert {};", print_cond(&f.body)).unwrap();
            s
        }
    }
}

pub fn print_expr(e: &IExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &IExpr, min: u8) {
    match e {
        IExpr::Int(v) => write!(out, "{v}").unwrap(),
        IExpr::Var(v) | IExpr::Free(v) => out.push_str(v),
        IExpr::Index(v, ix) => {
            out.push_str(v);
            for x in ix {
                write!(out, "[{x}]").unwrap();
            }
        }
        IExpr::Bin(op, l, r) => {
            let p = op.precedence();
            if p < min {
                out.push('(');
            }
            write_expr(out, l, p);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, r, p + 1);
            if p < min {
                out.push(')');
            }
        }
    }
}

pub fn print_cond(c: &ICond) -> String {
    match c {
        ICond::Cmp(op, l, r) => format!("{} {} {}", print_expr(l), op.symbol(), print_expr(r)),
        ICond::EqFree(e, x) => format!("{} == {x}", print_expr(e)),
        ICond::And(l, r) => {
            let rhs = match **r {
                ICond::And(..) => format!("({})", print_cond(r)),
                _ => print_cond(r),
            };
            format!("{} && {rhs}", print_cond(l))
        }
    }
}
