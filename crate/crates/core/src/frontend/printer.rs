use std::fmt::Write;

use super::ast::{BinOp, Expr, UnitaryDef};

// Grammar levels, loosest first. A child printed at a tighter position than
// its own level gets parentheses.
const EXPR: u8 = 0;
const TERM: u8 = 1;
const FACTOR: u8 = 2;
const PRIMARY: u8 = 3;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op: BinOp::Add | BinOp::Sub, .. } => EXPR,
        Expr::Binary { op: BinOp::Mul | BinOp::Div, .. } | Expr::Neg(..) => TERM,
        Expr::Binary { op: BinOp::Pow, .. } => FACTOR,
        _ => PRIMARY,
    }
}

fn write_at(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_list(out: &mut String, items: &[Expr]) {
    for (k, item) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write_expr(out, item);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Var(name, _) => out.push_str(name),
        Expr::Const { int, frac, .. } => {
            out.push_str(int);
            if let Some(f) = frac {
                out.push('.');
                out.push_str(f);
            }
        }
        Expr::Call { name, args, .. } => {
            out.push_str(name);
            out.push('(');
            write_list(out, args);
            out.push(')');
        }
        Expr::Matrix { rows, .. } => {
            out.push('[');
            for (k, row) in rows.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                out.push('[');
                write_list(out, row);
                out.push(']');
            }
            out.push(']');
        }
        Expr::Neg(a, _) => {
            out.push('~');
            // Only a factor, or another negation, may follow `~`.
            if matches!(**a, Expr::Neg(..)) {
                write_expr(out, a);
            } else {
                write_at(out, a, FACTOR);
            }
        }
        Expr::Binary { op, lhs, rhs, .. } => match op {
            BinOp::Add | BinOp::Sub => {
                write_at(out, lhs, EXPR);
                let _ = write!(out, " {} ", op.symbol());
                write_at(out, rhs, TERM);
            }
            BinOp::Mul | BinOp::Div => {
                write_at(out, lhs, TERM);
                out.push_str(op.symbol());
                write_at(out, rhs, FACTOR);
            }
            BinOp::Pow => {
                write_at(out, lhs, PRIMARY);
                out.push('^');
                write_at(out, rhs, FACTOR);
            }
        },
    }
}

/// Render an expression in QGL surface syntax with minimal parentheses.
pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

/// Render a definition in QGL surface syntax. Top-level matrix rows go on
/// separate lines.
pub fn print_def(def: &UnitaryDef) -> String {
    let mut out = String::new();
    let _ = write!(out, "utry {}", def.name);
    if def.explicit_radices {
        let rs: Vec<String> = def.radices.iter().map(usize::to_string).collect();
        let _ = write!(out, "<{}>", rs.join(", "));
    }
    let _ = writeln!(out, "({}) {{", def.params.join(", "));
    match &def.body {
        Expr::Matrix { rows, .. } => {
            out.push_str("  [\n");
            for row in rows {
                out.push_str("    [");
                write_list(&mut out, row);
                out.push_str("],\n");
            }
            out.push_str("  ]\n");
        }
        body => {
            out.push_str("  ");
            write_expr(&mut out, body);
            out.push('\n');
        }
    }
    out.push_str("}\n");
    out
}
