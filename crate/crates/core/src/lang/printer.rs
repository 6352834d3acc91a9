//! Rendering programs back to `.dpp` text.
//!
//! `parse(render_program(p))` is structurally the identity on every valid
//! program; the printer inserts parentheses from the same precedence table
//! the parser uses.

use super::ast::{BoolOp, Expr, Program};

/// Binding strength; larger binds tighter. `let` is weakest because its
/// body extends as far right as possible.
fn level(e: &Expr) -> u8 {
    match e {
        Expr::Let { .. } => 0,
        Expr::Bool { op: BoolOp::Iff, .. } => 1,
        Expr::Bool { op: BoolOp::Or, .. } => 2,
        Expr::Bool { op: BoolOp::Xor, .. } => 3,
        Expr::Bool { op: BoolOp::And, .. } => 4,
        Expr::IntGe(_, _) | Expr::IntEq(_, _) => 5,
        Expr::IntAdd { .. } => 6,
        Expr::Not(_) => 7,
        _ => 8,
    }
}

fn write_expr(out: &mut String, e: &Expr, min_level: u8) {
    let lvl = level(e);
    let parens = lvl < min_level;
    if parens {
        out.push('(');
    }
    match e {
        Expr::BoolConst(true) => out.push_str("true"),
        Expr::BoolConst(false) => out.push_str("false"),
        Expr::IntConst { value, width } => {
            out.push_str(&format!("int({width}, {value})"));
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Flip(p) => out.push_str(&format!("flip {p}")),
        Expr::Categorical { weights, .. } => {
            out.push_str("categorical [");
            for (i, w) in weights.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&w.to_string());
            }
            out.push(']');
        }
        Expr::Not(inner) => {
            out.push('!');
            write_expr(out, inner, 7);
        }
        Expr::Bool { op, lhs, rhs } => {
            let sym = match op {
                BoolOp::And => "&&",
                BoolOp::Or => "||",
                BoolOp::Xor => "^",
                BoolOp::Iff => "<->",
            };
            write_expr(out, lhs, lvl);
            out.push_str(&format!(" {sym} "));
            write_expr(out, rhs, lvl + 1);
        }
        Expr::IntAdd {
            lhs,
            rhs,
            saturating,
        } => {
            write_expr(out, lhs, lvl);
            out.push_str(if *saturating { " + " } else { " +% " });
            write_expr(out, rhs, lvl + 1);
        }
        Expr::IntGe(l, r) => {
            write_expr(out, l, lvl + 1);
            out.push_str(" >= ");
            write_expr(out, r, lvl + 1);
        }
        Expr::IntEq(l, r) => {
            write_expr(out, l, lvl + 1);
            out.push_str(" == ");
            write_expr(out, r, lvl + 1);
        }
        Expr::Ite {
            cond,
            then_branch,
            else_branch,
        } => {
            out.push_str("if ");
            write_expr(out, cond, 1);
            out.push_str(" { ");
            write_expr(out, then_branch, 0);
            out.push_str(" } else { ");
            write_expr(out, else_branch, 0);
            out.push_str(" }");
        }
        Expr::Let { name, bound, body } => {
            out.push_str(&format!("let {name} = "));
            write_expr(out, bound, 1);
            out.push_str(" in ");
            write_expr(out, body, 0);
        }
        Expr::Tuple(elems) => {
            out.push('(');
            for (i, elem) in elems.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, elem, 0);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

/// Renders a program as parseable `.dpp` text.
pub fn render_program(p: &Program) -> String {
    let mut out = String::from("fun(");
    for (i, param) in p.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{}: {}", param.name, param.ty));
    }
    out.push_str(") {\n  ");
    write_expr(&mut out, &p.body, 0);
    out.push_str("\n}\n");
    out
}
