use std::fmt::{self, Write};

use num_bigint::BigInt;
use num_traits::Signed;

use super::ast::*;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Or, ..) => 1,
        Expr::Binary(BinOp::And, ..) => 2,
        Expr::Unary(UnOp::Not, _) => 3,
        Expr::Binary(BinOp::Cmp(_), ..) => 4,
        Expr::Binary(BinOp::Arith(op), ..) => match op {
            crate::interval::ArithOp::Add | crate::interval::ArithOp::Sub => 5,
            _ => 6,
        },
        Expr::Unary(UnOp::Neg, _) => 7,
        _ => 8,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_bound(f: &mut fmt::Formatter<'_>, v: &BigInt) -> fmt::Result {
    write!(f, "{v}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(v) => f.write_str(v),
            Expr::Nondet(None, None) => f.write_str("nondet()"),
            Expr::Nondet(lo, hi) => {
                f.write_str("nondet(")?;
                // Half-bounded nondets have no concrete syntax; render the
                // missing side as the widest literal we can print.
                match lo {
                    Some(v) => write_bound(f, v)?,
                    None => f.write_str("-9223372036854775808")?,
                }
                f.write_str(", ")?;
                match hi {
                    Some(v) => write_bound(f, v)?,
                    None => f.write_str("9223372036854775807")?,
                }
                f.write_str(")")
            }
            Expr::Unary(UnOp::Not, e) => match &**e {
                Expr::Bool(_) => write!(f, "!{e}"),
                _ => write!(f, "!({e})"),
            },
            Expr::Unary(UnOp::Neg, e) => {
                let bare = matches!(&**e, Expr::Var(_) | Expr::Unary(UnOp::Neg, _));
                f.write_str("-")?;
                write_child(f, e, !bare)
            }
            Expr::Binary(op, l, r) => {
                let p = precedence(self);
                write_child(f, l, precedence(l) < p)?;
                write!(f, " {} ", op.symbol())?;
                // Negative literals print as `-3`; keep them apart from a
                // preceding `-` only by the space above.
                let right_parens = precedence(r) <= p && !matches!(&**r, Expr::Int(v) if v.is_negative());
                write_child(f, r, right_parens)
            }
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_block(out: &mut String, block: &[Stmt], depth: usize) {
    for s in block {
        write_stmt(out, s, depth);
    }
}

fn write_stmt(out: &mut String, s: &Stmt, depth: usize) {
    indent(out, depth);
    match s {
        Stmt::Assign { target, rhs } => {
            let _ = writeln!(out, "{target} = {rhs};");
        }
        Stmt::Assume(c) => {
            let _ = writeln!(out, "assume({c});");
        }
        Stmt::Assert(c) => {
            let _ = writeln!(out, "assert({c});");
        }
        Stmt::Return(e) => {
            let _ = writeln!(out, "return {e};");
        }
        Stmt::Skip => out.push_str("skip;\n"),
        Stmt::Call { callee, args, result } => {
            if let Some(r) = result {
                let _ = write!(out, "{r} = ");
            }
            let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "{callee}({});", args.join(", "));
        }
        Stmt::If { cond, then_block, else_block } => {
            let _ = writeln!(out, "if ({cond}) {{");
            write_block(out, then_block, depth + 1);
            indent(out, depth);
            match else_block {
                Some(e) => {
                    out.push_str("} else {\n");
                    write_block(out, e, depth + 1);
                    indent(out, depth);
                    out.push_str("}\n");
                }
                None => out.push_str("}\n"),
            }
        }
        Stmt::While { cond, body } => {
            let _ = writeln!(out, "while ({cond}) {{");
            write_block(out, body, depth + 1);
            indent(out, depth);
            out.push_str("}\n");
        }
    }
}

/// Renders one statement on a single line; compound statements show only
/// their head (`if (c)`, `while (c)`).
pub fn stmt_head(s: &Stmt) -> String {
    match s {
        Stmt::If { cond, .. } => format!("if ({cond})"),
        Stmt::While { cond, .. } => format!("while ({cond})"),
        other => {
            let mut out = String::new();
            write_stmt(&mut out, other, 0);
            out.trim_end().to_string()
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let _ = writeln!(out, "fn {}({}) {{", self.name, self.params.join(", "));
        for l in &self.locals {
            indent(&mut out, 1);
            let _ = writeln!(out, "int {l};");
        }
        write_block(&mut out, &self.body, 1);
        out.push_str("}\n");
        f.write_str(&out)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, func) in self.functions.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{func}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    fn roundtrip(src: &str) {
        let p = parse_program(src).unwrap();
        let printed = p.to_string();
        let q = parse_program(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
        assert_eq!(p, q, "{printed}");
    }

    #[test]
    fn precedence_survives_printing() {
        roundtrip("int x; int y; x = (1 - 2) - (3 - y); y = -(5) * -x - -4; y = x / (y * 2);");
        roundtrip("int x; if ((x < 1 || x > 3) && !(x == 2)) { x = 1; } else { skip; }");
        roundtrip("int x; assert(x < 1 || (x > 3 || x != 2)); assume(!true && (x + 1) * 2 >= -x);");
        roundtrip("int x = nondet(-3, 4); int y = nondet(); while (x < 10) { x = x + 1; }");
    }

    #[test]
    fn functions_print_with_hoisted_locals() {
        let src = "fn f(a, b) { int t = a * b; return t + 1; } fn main() { int r; r = f(1, 2); f(r, r); }";
        roundtrip(src);
        let text = parse_program(src).unwrap().to_string();
        assert!(text.contains("fn f(a, b) {\n    int t;\n    t = a * b;\n    return t + 1;\n}"), "{text}");
    }

    #[test]
    fn stmt_heads() {
        let p = parse_program("int x; if (x > 0) { x = 1; }").unwrap();
        assert_eq!(stmt_head(&p.functions[0].body[0]), "if (x > 0)");
    }
}
