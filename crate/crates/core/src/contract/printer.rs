use std::fmt::Write;

use super::ast::*;

/// Canonical text for `program`, indented by two spaces per level.
/// `parse_instrumented(&pretty_print(p))` yields a structurally equal program.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    writeln!(out, "contract {} {{", program.name).unwrap();
    for d in &program.decls {
        let kw = match d.storage {
            Storage::Persistent => "state",
            Storage::Memory => "memory",
        };
        let ty = if d.arity == 0 {
            "int".to_string()
        } else {
            format!("map^{}", d.arity)
        };
        writeln!(out, "  {kw} {}: {ty};", d.name).unwrap();
    }
    for f in &program.functions {
        out.push('\n');
        let entry = if f.entry { "entry " } else { "" };
        writeln!(out, "  {entry}fn {}({}) {{", f.name, f.params.join(", ")).unwrap();
        print_body(&mut out, &f.body, 2);
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

pub fn print_body(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        print_stmt(out, s, depth);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match s {
        Stmt::Assign(t, e) => writeln!(out, "{pad}{t} = {};", expr_to_string(e)).unwrap(),
        Stmt::Load(t, a) => writeln!(out, "{pad}{t} = load {};", address_to_string(a)).unwrap(),
        Stmt::Store(a, e) => writeln!(
            out,
            "{pad}store {}, {};",
            address_to_string(a),
            expr_to_string(e)
        )
        .unwrap(),
        Stmt::If(c, body) => {
            writeln!(out, "{pad}if {} {{", expr_to_string(c)).unwrap();
            print_body(out, body, depth + 1);
            writeln!(out, "{pad}}}").unwrap();
        }
        Stmt::ForIn { temps, map, body } => {
            writeln!(out, "{pad}for {} in {map} {{", temps.join(", ")).unwrap();
            print_body(out, body, depth + 1);
            writeln!(out, "{pad}}}").unwrap();
        }
        Stmt::Assert(c) => writeln!(out, "{pad}assert {};", expr_to_string(c)).unwrap(),
        Stmt::Call(f, args) => {
            let args: Vec<String> = args.iter().map(expr_to_string).collect();
            writeln!(out, "{pad}{f}({});", args.join(", ")).unwrap();
        }
    }
}

/// Statements at top-level indentation, one per line.
pub fn stmts_to_string(body: &[Stmt]) -> String {
    let mut out = String::new();
    print_body(&mut out, body, 0);
    out
}

pub fn address_to_string(a: &Address) -> String {
    let mut s = a.var.clone();
    for ix in &a.indices {
        write!(s, "[{}]", expr_to_string(ix)).unwrap();
    }
    s
}

pub fn expr_to_string(e: &CExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn write_expr(out: &mut String, e: &CExpr, min_prec: u8) {
    match e {
        CExpr::Int(v) => write!(out, "{v}").unwrap(),
        CExpr::Temp(t) => out.push_str(t),
        CExpr::Builtin(b) => out.push_str(b.keyword()),
        CExpr::Bin(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, l, prec);
            write!(out, " {} ", op.symbol()).unwrap();
            // Right operand of a left-associative operator needs parens at equal precedence.
            write_expr(out, r, prec + 1);
            if paren {
                out.push(')');
            }
        }
    }
}
