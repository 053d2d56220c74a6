use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "  ";

pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for item in &program.items {
        if let Some(p) = &item.pattern {
            out.push_str(&pattern(p));
            out.push_str(" = ");
        }
        expr_top(&item.expr, 0, &mut out);
        out.push_str(";\n");
    }
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr_top(e, 0, &mut out);
    out
}

pub fn print_annotation(a: &Annotation) -> String {
    match a {
        Annotation::Tensor { elem, shape, .. } => match (elem, shape) {
            (Some(e), Some(s)) => format!("{e} {s}"),
            (Some(e), None) => e.clone(),
            (None, Some(s)) => s.to_string(),
            (None, None) => "[]".to_string(),
        },
        Annotation::Tuple(parts, _) => {
            let parts: Vec<_> = parts.iter().map(print_annotation).collect();
            format!("({})", parts.join(", "))
        }
    }
}

fn pattern(p: &Pattern) -> String {
    let parts: Vec<&str> = p
        .items
        .iter()
        .map(|i| match i {
            PatItem::Name(id) => id.name.as_str(),
            PatItem::Wildcard(_) => "_",
        })
        .collect();
    parts.join(", ")
}

/// Prints an expression where an unparenthesized comma tuple is allowed.
fn expr_top(e: &Expr, depth: usize, out: &mut String) {
    match &e.kind {
        ExprKind::Tuple(parts) => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(p, 0, depth, out);
            }
        }
        _ => expr(e, 0, depth, out),
    }
}

fn expr(e: &Expr, min_prec: u8, depth: usize, out: &mut String) {
    match &e.kind {
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::Lit(lit) => {
            let _ = write!(out, "{lit}");
        }
        ExprKind::OpRef(op) => out.push_str(op.symbol()),
        ExprKind::Tuple(parts) => {
            out.push('(');
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(p, 0, depth, out);
            }
            out.push(')');
        }
        ExprKind::Call { callee, args } => {
            out.push_str(&callee.name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(a, 0, depth, out);
            }
            out.push(')');
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            expr(lhs, prec, depth, out);
            let _ = write!(out, " {op} ");
            expr(rhs, prec + 1, depth, out);
            if paren {
                out.push(')');
            }
        }
        ExprKind::Fn(f) => fn_expr(f, depth, out),
    }
}

fn fn_expr(f: &FnExpr, depth: usize, out: &mut String) {
    out.push_str("fn (");
    for (i, p) in f.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&p.name.name);
        if let Some(a) = &p.annotation {
            out.push_str(" : ");
            out.push_str(&print_annotation(a));
        }
    }
    out.push(')');
    if let Some(a) = &f.ret {
        out.push_str(" : ");
        out.push_str(&print_annotation(a));
    }
    out.push_str(" {\n");
    let inner = INDENT.repeat(depth + 1);
    for l in &f.body.lets {
        out.push_str(&inner);
        out.push_str(&pattern(&l.pattern));
        out.push_str(" = ");
        expr(&l.value, 0, depth + 1, out);
        out.push_str(";\n");
    }
    out.push_str(&inner);
    expr_top(&f.body.result, depth + 1, out);
    out.push('\n');
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
}
