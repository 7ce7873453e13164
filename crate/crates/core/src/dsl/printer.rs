//! Canonical text form: 2-space indentation, one declaration per line,
//! ports before children before transitions, `exec` last.

use crate::model::{
    Binding, Child, Component, ConditionExpr, DeviceCall, Expr, Reference, SourceFile, Transition, Value,
};
use std::fmt::Write;

pub fn print(sf: &SourceFile) -> String {
    let mut out = String::new();
    for u in &sf.uses {
        let _ = writeln!(out, "use {};", quote(&u.path));
    }
    for (i, c) in sf.components.iter().enumerate() {
        if i > 0 || !sf.uses.is_empty() {
            out.push('\n');
        }
        component(&mut out, c, 0);
    }
    out
}

pub fn print_component(c: &Component) -> String {
    let mut out = String::new();
    component(&mut out, c, 0);
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn component(out: &mut String, c: &Component, depth: usize) {
    indent(out, depth);
    out.push_str(&c.level.keyword());
    out.push(' ');
    out.push_str(&c.name);
    if !c.params.is_empty() {
        out.push('(');
        for (i, p) in c.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(p.ptype.keyword());
            out.push(' ');
            out.push_str(&p.name);
            if let Some(d) = &p.default {
                out.push_str(" = ");
                out.push_str(&value(d));
            }
        }
        out.push(')');
    }
    if let Some(base) = &c.extends {
        out.push_str(" extends ");
        out.push_str(base);
    }
    out.push_str(" {\n");
    for p in &c.ports {
        indent(out, depth + 1);
        out.push_str(match p.kind {
            crate::model::PortKind::Start => "start ",
            crate::model::PortKind::End => "end ",
        });
        out.push_str(&p.name);
        if let Some(g) = &p.guard {
            out.push_str(" when ");
            out.push_str(&condition(g));
        }
        out.push_str(";\n");
    }
    for ch in &c.children {
        match ch {
            Child::Inline(inner) => component(out, inner, depth + 1),
            Child::Reference(r) => reference(out, r, depth + 1),
        }
    }
    for t in &c.transitions {
        transition(out, t, depth + 1);
    }
    if let Some(e) = &c.exec {
        exec(out, e, depth + 1);
    }
    indent(out, depth);
    out.push_str("}\n");
}

fn bindings(list: &[Binding]) -> String {
    list.iter()
        .map(|b| format!("{} = {}", b.name, expr(&b.value)))
        .collect::<Vec<_>>()
        .join(", ")
}

fn reference(out: &mut String, r: &Reference, depth: usize) {
    indent(out, depth);
    let _ = write!(out, "uses {} as {}", r.target, r.alias);
    if !r.args.is_empty() {
        let _ = write!(out, "({})", bindings(&r.args));
    }
    out.push_str(";\n");
}

fn transition(out: &mut String, t: &Transition, depth: usize) {
    indent(out, depth);
    let _ = write!(out, "on {} -> {}", t.source, t.target);
    if let Some(pre) = &t.pre {
        let _ = write!(out, " pre {}", condition(pre));
    }
    if let Some(post) = &t.post {
        let _ = write!(out, " post {}", condition(post));
    }
    if !t.bindings.is_empty() {
        let _ = write!(out, " set {}", bindings(&t.bindings));
    }
    out.push_str(";\n");
}

fn exec(out: &mut String, e: &DeviceCall, depth: usize) {
    indent(out, depth);
    let _ = write!(out, "exec {}.{}({})", e.device, e.command, bindings(&e.args));
    if let Some(stop) = &e.stop {
        let _ = write!(out, " until {}", condition(stop));
    }
    if !e.updates.is_empty() {
        let ups = e
            .updates
            .iter()
            .map(|u| format!("{} := result.{}", u.path_string(), u.field))
            .collect::<Vec<_>>()
            .join(", ");
        let _ = write!(out, " yields {ups}");
    }
    out.push_str(";\n");
}

/// Shortest round-trip decimal form.
pub fn number(x: f64) -> String {
    format!("{x:?}").trim_end_matches(".0").to_string()
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out.push('"');
    out
}

pub fn value(v: &Value) -> String {
    match v {
        Value::Num(x) => number(*x),
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => quote(s),
        Value::Vec(items) => format!("[{}]", items.iter().map(|x| number(*x)).collect::<Vec<_>>().join(", ")),
        Value::Frame(f) => {
            let offset = f.offset.iter().map(|x| number(*x)).collect::<Vec<_>>().join(", ");
            match &f.link {
                Some(l) => format!("frame({}, [{}], {})", quote(&f.reference), offset, quote(l)),
                None => format!("frame({}, [{}])", quote(&f.reference), offset),
            }
        }
    }
}

pub fn expr(e: &Expr) -> String {
    expr_prec(e, 0)
}

// Precedence levels: 1 additive, 2 multiplicative, 3 unary/atom.
fn expr_prec(e: &Expr, min: u8) -> String {
    match e {
        Expr::Num(x) => number(*x),
        Expr::Bool(b) => b.to_string(),
        Expr::Str(s) => quote(s),
        Expr::Param(p) => p.clone(),
        Expr::List(items) => format!("[{}]", items.iter().map(expr).collect::<Vec<_>>().join(", ")),
        Expr::Frame { reference, offset, link } => match link {
            Some(l) => format!("frame({}, {}, {})", expr(reference), expr(offset), expr(l)),
            None => format!("frame({}, {})", expr(reference), expr(offset)),
        },
        Expr::Neg(inner) => {
            let body = match inner.as_ref() {
                Expr::Param(_) | Expr::Frame { .. } | Expr::List(_) | Expr::Str(_) | Expr::Bool(_) => expr(inner),
                _ => format!("({})", expr(inner)),
            };
            format!("-{body}")
        }
        Expr::Binary(op, lhs, rhs) => {
            let p = op.precedence();
            // Left-associative: the right operand needs strictly higher
            // precedence to print without parentheses.
            let s = format!("{} {} {}", expr_prec(lhs, p), op.symbol(), expr_prec(rhs, p + 1));
            if p < min {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

pub fn condition(c: &ConditionExpr) -> String {
    cond_prec(c, 0)
}

// 1 or, 2 and, 3 not/atom.
fn cond_prec(c: &ConditionExpr, min: u8) -> String {
    let (s, p) = match c {
        ConditionExpr::Or(a, b) => (format!("{} or {}", cond_prec(a, 1), cond_prec(b, 2)), 1),
        ConditionExpr::And(a, b) => (format!("{} and {}", cond_prec(a, 2), cond_prec(b, 3)), 2),
        ConditionExpr::Not(a) => (format!("not {}", cond_prec(a, 3)), 3),
        ConditionExpr::Compare { channel, op, value } => {
            (format!("{} {} {}", channel, op.symbol(), number(*value)), 3)
        }
        ConditionExpr::Channel(ch) => (ch.clone(), 3),
        ConditionExpr::Const(b) => (b.to_string(), 3),
    };
    if p < min {
        format!("({s})")
    } else {
        s
    }
}
