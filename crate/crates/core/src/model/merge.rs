//! `extends` merging and cycle detection over references and extensions.
//!
//! Merging is additive: the extender adds ports, children and transitions
//! after the base's and may override parameter defaults (same type only).
//! Anything else that clashes is E020.

use super::resolve::Model;
use super::{Child, Component};
use crate::diag::{Code, Diagnostic, Span};
use std::collections::{BTreeMap, BTreeSet};

/// Outgoing `uses`/`extends` edges of a definition: (target key, span).
fn edges(model: &Model, ns: &str, c: &Component, out: &mut Vec<(String, Span)>) {
    if let Some(b) = &c.extends {
        if let Some(k) = model.resolve_key(ns, b) {
            out.push((k, c.span.clone()));
        }
    }
    for ch in &c.children {
        match ch {
            Child::Inline(inner) => edges(model, ns, inner, out),
            Child::Reference(r) => {
                if let Some(k) = model.resolve_key(ns, &r.target) {
                    out.push((k, r.span.clone()));
                }
            }
        }
    }
}

/// E021 for every back edge of the reference/extension graph.
/// Also returns the keys on a cycle.
pub(crate) fn find_cycles(model: &Model) -> (Vec<Diagnostic>, BTreeSet<String>) {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        model: &Model,
        key: &str,
        marks: &mut BTreeMap<String, Mark>,
        stack: &mut Vec<String>,
        out: &mut Vec<Diagnostic>,
        cyclic: &mut BTreeSet<String>,
    ) {
        marks.insert(key.to_string(), Mark::Active);
        stack.push(key.to_string());
        let sym = &model.symbols[key];
        let mut es = Vec::new();
        edges(model, &sym.ns, &sym.component, &mut es);
        for (target, span) in es {
            match marks.get(&target) {
                Some(Mark::Active) => {
                    let from = stack.iter().position(|k| *k == target).unwrap_or(0);
                    let mut cycle: Vec<&str> = stack[from..].iter().map(String::as_str).collect();
                    cycle.push(&target);
                    out.push(Diagnostic::new(Code::E021, span, format!("cyclic reference: {}", cycle.join(" -> "))));
                    cyclic.extend(stack[from..].iter().cloned());
                }
                Some(Mark::Done) => {}
                None => visit(model, &target, marks, stack, out, cyclic),
            }
        }
        stack.pop();
        marks.insert(key.to_string(), Mark::Done);
    }
    let mut marks = BTreeMap::new();
    let mut out = Vec::new();
    let mut cyclic = BTreeSet::new();
    for key in &model.order {
        if !marks.contains_key(key) {
            visit(model, key, &mut marks, &mut Vec::new(), &mut out, &mut cyclic);
        }
    }
    (out, cyclic)
}

/// Merges `ext` onto a copy of `base`.
pub(crate) fn merge_pair(base: &Component, ext: &Component, diags: &mut Vec<Diagnostic>) -> Component {
    let mut out = base.clone();
    out.name = ext.name.clone();
    out.level = ext.level;
    out.span = ext.span.clone();
    out.extends = None;
    for p in &ext.params {
        match out.params.iter_mut().find(|b| b.name == p.name) {
            Some(b) if b.ptype != p.ptype => diags.push(Diagnostic::new(
                Code::E020,
                p.span.clone(),
                format!(
                    "parameter `{}` redeclared as {} but `{}` declares it {}",
                    p.name,
                    p.ptype.keyword(),
                    base.name,
                    b.ptype.keyword()
                ),
            )),
            Some(b) => {
                if p.default.is_some() {
                    b.default = p.default.clone();
                }
            }
            None => out.params.push(p.clone()),
        }
    }
    for p in &ext.ports {
        if base.port(&p.name).is_some() {
            diags.push(Diagnostic::new(
                Code::E020,
                p.span.clone(),
                format!("port `{}` already declared by `{}`", p.name, base.name),
            ));
        } else {
            out.ports.push(p.clone());
        }
    }
    for c in &ext.children {
        if base.child(c.alias()).is_some() {
            diags.push(Diagnostic::new(
                Code::E020,
                c.span().clone(),
                format!("child `{}` already declared by `{}`", c.alias(), base.name),
            ));
        } else {
            out.children.push(c.clone());
        }
    }
    out.transitions.extend(ext.transitions.iter().cloned());
    match (&base.exec, &ext.exec) {
        (Some(_), Some(e)) => diags.push(Diagnostic::new(
            Code::E020,
            e.span.clone(),
            format!("`{}` already declares `exec`", base.name),
        )),
        (None, Some(e)) => out.exec = Some(e.clone()),
        _ => {}
    }
    out
}

struct Merger<'a> {
    model: &'a Model,
    done: BTreeMap<String, Component>,
    active: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

impl Merger<'_> {
    fn key(&mut self, key: &str) -> Option<Component> {
        if let Some(c) = self.done.get(key) {
            return Some(c.clone());
        }
        if !self.active.insert(key.to_string()) {
            return None;
        }
        let sym = &self.model.symbols[key];
        let merged = self.component(&sym.component, &sym.ns.clone());
        self.active.remove(key);
        self.done.insert(key.to_string(), merged.clone());
        Some(merged)
    }

    fn component(&mut self, c: &Component, ns: &str) -> Component {
        let mut own = c.clone();
        for ch in &mut own.children {
            if let Child::Inline(inner) = ch {
                *inner = self.component(inner, ns);
            }
        }
        let Some(base_name) = &c.extends else { return own };
        let Some(base_key) = self.model.resolve_key(ns, base_name) else { return own };
        match self.key(&base_key) {
            Some(base) => merge_pair(&base, &own, &mut self.diags),
            // Cycle; reported by find_cycles.
            None => {
                own.extends = None;
                own
            }
        }
    }
}

/// Fills `model.merged` and returns E020/E021 diagnostics.
pub fn merge_extends(model: &mut Model) -> Vec<Diagnostic> {
    let (mut diags, cyclic) = find_cycles(model);
    let mut m = Merger { model, done: BTreeMap::new(), active: BTreeSet::new(), diags: Vec::new() };
    for key in &model.order {
        m.key(key);
    }
    let Merger { done, diags: merge_diags, .. } = m;
    diags.extend(merge_diags);
    model.merged = done;
    model.merge_diags = Some(diags.clone());
    model.cyclic = cyclic;
    diags
}
