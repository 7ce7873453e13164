//! Structural well-formedness of Generic Action Components.

use super::merge::merge_extends;
use super::resolve::Model;
use super::{Child, Component, Owner, PortKind, Transition, ValueType};
use crate::devices::check_call;
use crate::diag::{normalize, Code, Diagnostic, Span};
use crate::model::EvalError;
use std::collections::{BTreeMap, BTreeSet};

/// Level discipline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// Task, Skill and Action levels step down by exactly one and only
    /// actions execute device calls. Generic levels only decrease.
    #[default]
    Standard,
    /// Levels only have to decrease strictly.
    Generic,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Profile, String> {
        match s {
            "standard" => Ok(Profile::Standard),
            "generic" => Ok(Profile::Generic),
            other => Err(format!("unknown profile `{other}` (expected standard or generic)")),
        }
    }
}

struct Checker<'a> {
    model: &'a Model,
    profile: Profile,
    /// Ports connected from outside, per top-level key.
    external: BTreeMap<String, BTreeSet<String>>,
    /// Keys referenced or extended by some other definition.
    used: BTreeSet<String>,
    diags: Vec<Diagnostic>,
}

fn scope_of(c: &Component) -> BTreeMap<String, ValueType> {
    c.params.iter().map(|p| (p.name.clone(), p.ptype.value_type())).collect()
}

/// Definition and namespace of a child as seen from namespace `ns`.
fn child_def<'b>(model: &'b Model, ns: &str, ch: &'b Child) -> Option<(&'b Component, String)> {
    match ch {
        Child::Inline(c) => Some((c, ns.to_string())),
        Child::Reference(r) => model.lookup(ns, &r.target).map(|(_, d, ns)| (d, ns.to_string())),
    }
}

impl<'a> Checker<'a> {
    fn err(&mut self, code: Code, span: &Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(code, span.clone(), msg));
    }

    fn collect_external(&mut self) {
        let mut external: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        let mut used = BTreeSet::new();
        for key in &self.model.order {
            let sym = &self.model.symbols[key];
            if let Some(b) = &sym.component.extends {
                if let Some(k) = self.model.resolve_key(&sym.ns, b) {
                    used.insert(k);
                }
            }
            let def = self.model.definition(key).expect("key exists");
            def.walk(&mut |c| {
                for ch in &c.children {
                    let Child::Reference(r) = ch else { continue };
                    let Some(k) = self.model.resolve_key(&sym.ns, &r.target) else { continue };
                    used.insert(k.clone());
                    let ports = external.entry(k).or_default();
                    for t in &c.transitions {
                        for ep in [&t.source, &t.target] {
                            if ep.owner == Owner::Child(r.alias.clone()) {
                                ports.insert(ep.port.clone());
                            }
                        }
                    }
                }
            });
        }
        // A base's ports are connected wherever an extender's are.
        loop {
            let mut changed = false;
            for key in &self.model.order {
                let sym = &self.model.symbols[key];
                let Some(b) = &sym.component.extends else { continue };
                let Some(bk) = self.model.resolve_key(&sym.ns, b) else { continue };
                let mut add: BTreeSet<String> = external.get(key).cloned().unwrap_or_default();
                if let Some(def) = self.model.definition(key) {
                    for t in &def.transitions {
                        for ep in [&t.source, &t.target] {
                            if ep.owner == Owner::SelfRef {
                                add.insert(ep.port.clone());
                            }
                        }
                    }
                }
                let entry = external.entry(bk).or_default();
                let before = entry.len();
                entry.extend(add);
                changed |= entry.len() != before;
            }
            if !changed {
                break;
            }
        }
        self.external = external;
        self.used = used;
    }

    fn component(&mut self, c: &Component, ns: &str, external: &BTreeSet<String>, standalone_leaf: bool) {
        if c.starts().next().is_none() {
            self.err(Code::E002, &c.span, format!("`{}`: component must declare at least one start condition", c.name));
        }
        if c.ends().next().is_none() {
            self.err(Code::E001, &c.span, format!("`{}`: component must declare at least one end condition", c.name));
        }

        let mut seen = BTreeSet::new();
        for p in &c.params {
            if !seen.insert(p.name.as_str()) {
                self.err(Code::E007, &p.span, format!("duplicate parameter `{}`", p.name));
            }
            if let Some(d) = &p.default {
                if d.value_type() != p.ptype.value_type() {
                    self.err(
                        Code::E009,
                        &p.span,
                        format!("default of `{}` has type {}, expected {}", p.name, d.value_type(), p.ptype.keyword()),
                    );
                }
            }
        }
        let mut seen = BTreeSet::new();
        for p in &c.ports {
            if !seen.insert(p.name.as_str()) {
                self.err(Code::E007, &p.span, format!("duplicate port `{}`", p.name));
            }
        }
        let mut seen = BTreeSet::new();
        for ch in &c.children {
            if !seen.insert(ch.alias()) {
                self.err(Code::E007, ch.span(), format!("duplicate child `{}`", ch.alias()));
            }
        }

        match (&c.exec, c.children.is_empty()) {
            (Some(e), false) => self.err(Code::E003, &e.span, format!("`{}`: exec forbidden on composite", c.name)),
            (None, true) => self.err(Code::E004, &c.span, format!("`{}`: leaf component needs an `exec`", c.name)),
            _ => {}
        }
        if let Some(e) = &c.exec {
            if self.profile == Profile::Standard && c.children.is_empty() && c.level.value() != 0 && !matches!(c.level, super::Level::Generic(_)) {
                self.err(Code::E008, &e.span, format!("`{}`: only actions execute device calls", c.name));
            }
            let scope = scope_of(c);
            self.diags.extend(check_call(e, &scope));
        }

        let scope = scope_of(c);
        for ch in &c.children {
            let Some((def, _)) = child_def(self.model, ns, ch) else { continue };
            self.level(c, def, ch.span());
            if let Child::Reference(r) = ch {
                for a in &r.args {
                    if !a.value.is_constant() {
                        self.err(Code::E015, &a.span, format!("argument `{}` of `{}` must be a constant", a.name, r.alias));
                        continue;
                    }
                    match def.param(&a.name) {
                        None => self.err(Code::E009, &a.span, format!("`{}` has no parameter `{}`", r.target, a.name)),
                        Some(p) => self.expr_type(&a.value, p.ptype.value_type(), &BTreeMap::new(), &a.name, &a.span),
                    }
                }
            }
        }

        for t in &c.transitions {
            self.transition(c, ns, t, &scope);
        }

        // Connectivity warnings.
        let mut used_here = BTreeSet::new();
        let mut entered = BTreeSet::new();
        for t in &c.transitions {
            for ep in [&t.source, &t.target] {
                match &ep.owner {
                    Owner::SelfRef => {
                        used_here.insert(ep.port.clone());
                    }
                    Owner::Child(_) => {}
                }
            }
            if let Owner::Child(a) = &t.target.owner {
                entered.insert(a.clone());
            }
        }
        if !standalone_leaf {
            for p in &c.ports {
                if !used_here.contains(&p.name) && !external.contains(&p.name) {
                    let kind = if p.kind == PortKind::Start { "start" } else { "end" };
                    self.err(Code::W002, &p.span, format!("{kind} port `{}.{}` is not connected", c.name, p.name));
                }
            }
        }
        for ch in &c.children {
            if !entered.contains(ch.alias()) {
                self.err(Code::W001, ch.span(), format!("child `{}` is never entered", ch.alias()));
            }
        }

        for ch in &c.children {
            if let Child::Inline(inner) = ch {
                let mut ext = BTreeSet::new();
                for t in &c.transitions {
                    for ep in [&t.source, &t.target] {
                        if ep.owner == Owner::Child(inner.name.clone()) {
                            ext.insert(ep.port.clone());
                        }
                    }
                }
                // An unreachable child already has W001; its start ports add nothing.
                if !entered.contains(&inner.name) {
                    ext.extend(inner.starts().map(|p| p.name.clone()));
                }
                self.component(inner, ns, &ext, false);
            }
        }
    }

    fn level(&mut self, parent: &Component, child: &Component, span: &Span) {
        use super::Level::Generic;
        let (p, c) = (parent.level.value(), child.level.value());
        let ok = match (self.profile, parent.level, child.level) {
            (Profile::Standard, Generic(_), _) | (Profile::Standard, _, Generic(_)) | (Profile::Generic, _, _) => c < p,
            (Profile::Standard, _, _) => c + 1 == p,
        };
        if !ok {
            self.err(
                Code::E008,
                span,
                format!(
                    "{} `{}` cannot contain {} `{}`",
                    parent.level.keyword(),
                    parent.name,
                    child.level.keyword(),
                    child.name
                ),
            );
        }
    }

    fn expr_type(
        &mut self,
        e: &super::Expr,
        expected: ValueType,
        scope: &BTreeMap<String, ValueType>,
        name: &str,
        span: &Span,
    ) {
        match e.type_of(scope) {
            Ok(t) if t == expected => {}
            Ok(t) => self.err(Code::E009, span, format!("`{name}` expects {expected}, found {t}")),
            Err(EvalError::UnknownParam(p)) => self.err(Code::E014, span, format!("unknown parameter `{p}`")),
            Err(err) => self.err(Code::E009, span, format!("`{name}`: {err}")),
        }
    }

    /// `Err(None)` when the child is an unresolved reference, which is
    /// already reported as E011.
    fn port_kind(&self, c: &Component, ns: &str, owner: &Owner, port: &str) -> Result<PortKind, Option<String>> {
        match owner {
            Owner::SelfRef => c.port(port).map(|p| p.kind).ok_or_else(|| Some(format!("`{}` has no port `{port}`", c.name))),
            Owner::Child(alias) => {
                let ch = c.child(alias).ok_or_else(|| Some(format!("no child named `{alias}`")))?;
                let (def, _) = child_def(self.model, ns, ch).ok_or(None)?;
                def.port(port).map(|p| p.kind).ok_or_else(|| Some(format!("`{alias}` has no port `{port}`")))
            }
        }
    }

    fn transition(&mut self, c: &Component, ns: &str, t: &Transition, scope: &BTreeMap<String, ValueType>) {
        let src = self.port_kind(c, ns, &t.source.owner, &t.source.port);
        let dst = self.port_kind(c, ns, &t.target.owner, &t.target.port);
        let mut resolved = true;
        for r in [&src, &dst] {
            if let Err(msg) = r {
                if let Some(msg) = msg {
                    self.err(Code::E006, &t.span, format!("`{}`: {msg}", t.label()));
                }
                resolved = false;
            }
        }
        if !resolved {
            return;
        }
        let (src, dst) = (src.unwrap(), dst.unwrap());
        let legal = matches!(
            (&t.source.owner, src, &t.target.owner, dst),
            (Owner::SelfRef, PortKind::Start, Owner::Child(_), PortKind::Start)
                | (Owner::Child(_), PortKind::End, Owner::Child(_), PortKind::Start)
                | (Owner::Child(_), PortKind::End, Owner::SelfRef, PortKind::End)
        );
        if !legal {
            self.err(Code::E005, &t.span, format!("illegal endpoint shape `{}`", t.label()));
            return;
        }
        let target_def = match &t.target.owner {
            Owner::SelfRef => Some(c),
            Owner::Child(a) => c.child(a).and_then(|ch| child_def(self.model, ns, ch)).map(|(d, _)| d),
        };
        let Some(target_def) = target_def else { return };
        for b in &t.bindings {
            match target_def.param(&b.name) {
                None => self.err(Code::E009, &b.span, format!("`{}` has no parameter `{}`", target_def.name, b.name)),
                Some(p) => self.expr_type(&b.value, p.ptype.value_type(), scope, &b.name, &b.span),
            }
        }
    }
}

/// Checks every definition of `model`, including E020/E021 from merging.
/// Name-resolution errors (E010, E011) come from
/// [`resolve_names`](super::resolve_names).
pub fn validate(model: &Model, profile: Profile) -> Vec<Diagnostic> {
    let merged;
    let model = if model.merge_diags.is_none() {
        let mut m = model.clone();
        merge_extends(&mut m);
        merged = m;
        &merged
    } else {
        model
    };
    let mut ck = Checker {
        model,
        profile,
        external: BTreeMap::new(),
        used: BTreeSet::new(),
        diags: model.merge_diags.clone().unwrap_or_default(),
    };
    ck.collect_external();
    for key in model.order.iter().filter(|k| !model.cyclic.contains(*k)) {
        let sym = &model.symbols[key];
        let def = model.definition(key).expect("key exists");
        let ext = ck.external.get(key).cloned().unwrap_or_default();
        let standalone_leaf = def.children.is_empty() && !ck.used.contains(key);
        ck.component(def, &sym.ns, &ext, standalone_leaf);
    }
    let mut diags = ck.diags;
    normalize(&mut diags);
    diags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn codes(src: &str) -> Vec<Code> {
        let (m, d) = Model::from_source(src, "t.lr");
        assert!(d.is_empty(), "{d:?}");
        validate(&m, Profile::Standard).into_iter().map(|d| d.code).collect()
    }

    const OK: &str = "skill S { start s0; end done; action A { start a; end b; exec tool.release() until tool.width >= 0.05; } on self.s0 -> A.a; on A.b -> self.done; }";

    #[test]
    fn clean_skill() {
        assert_eq!(codes(OK), vec![]);
    }

    #[test]
    fn missing_end_port() {
        let (m, _) = Model::from_source(
            "skill S { start s0; action A { start a; end b; exec tool.grip(); } on self.s0 -> A.a; }",
            "t.lr",
        );
        let d = validate(&m, Profile::Standard);
        assert_eq!(d.iter().map(|d| d.code).collect::<Vec<_>>(), vec![Code::E001, Code::W002]);
        assert!(d[0].message.contains("component must declare at least one end condition"));
    }

    #[test]
    fn exec_on_composite() {
        let src = OK.replace("on self.s0", "exec tool.grip(); on self.s0");
        assert_eq!(codes(&src), vec![Code::E003]);
    }

    #[test]
    fn endpoint_shapes() {
        // All nine owner/kind pairs of (source, target) over self.start,
        // self.end and child ports; three are legal.
        let eps = ["self.s0", "self.done", "A.a", "A.b"];
        let mut legal = 0;
        for s in eps {
            for t in eps {
                let src = format!(
                    "skill S {{ start s0; end done; action A {{ start a; end b; exec tool.grip(); }} on self.s0 -> A.a; on A.b -> self.done; on {s} -> {t}; }}"
                );
                let c = codes(&src);
                if c.is_empty() {
                    legal += 1;
                } else {
                    assert_eq!(c, vec![Code::E005], "{s} -> {t}");
                }
            }
        }
        // self.s0->A.a, A.b->A.a, A.b->self.done
        assert_eq!(legal, 3);
    }

    #[test]
    fn unknown_endpoint_and_duplicates() {
        let src = OK.replace("on A.b -> self.done;", "on A.zz -> self.done; on A.b -> self.done; start s0;");
        assert_eq!(codes(&src), vec![Code::E006, Code::E007]);
    }

    #[test]
    fn level_violations() {
        let src = "task T { start s; end e; action A { start a; end b; exec tool.grip(); } on self.s -> A.a; on A.b -> self.e; }";
        assert_eq!(codes(src), vec![Code::E008]);
        let (m, _) = Model::from_source(src, "t.lr");
        assert!(validate(&m, Profile::Generic).is_empty());
        let generic = "component 5 G { start s; end e; action A { start a; end b; exec tool.grip(); } on self.s -> A.a; on A.b -> self.e; }";
        assert_eq!(codes(generic), vec![]);
    }

    #[test]
    fn type_errors() {
        let src = r#"skill S(num speed = "fast") { start s0; end done; action A(num w) { start a; end b; exec tool.release(); } on self.s0 -> A.a set w = true; on A.b -> self.done set q = 1; }"#;
        assert_eq!(codes(src), vec![Code::E009, Code::E009, Code::E009]);
    }

    #[test]
    fn unknown_param_and_nonconstant_arg() {
        let src = "skill S(num k = 1) { start s0; end done; action A(num w) { start a; end b; exec tool.release(); } on self.s0 -> A.a set w = z * 2; on A.b -> self.done; }";
        assert_eq!(codes(src), vec![Code::E014]);
        let src = format!("{}\nskill L {{ start a; end b; action B {{ start a; end b; exec tool.grip(); }} on self.a -> B.a; on B.b -> self.b; }}",
            "task T(num k = 1) { start s; end e; uses L as l(x = k); on self.s -> l.a; on l.b -> self.e; }");
        assert_eq!(codes(&src), vec![Code::E015]);
    }

    #[test]
    fn warnings() {
        let src = "skill S { start s0; start spare; end done; action A { start a; end b; exec tool.grip(); } action B { start a; end b; exec tool.grip(); } on self.s0 -> A.a; on A.b -> self.done; }";
        assert_eq!(codes(src), vec![Code::W001, Code::W002, Code::W002]);
    }

    #[test]
    fn validate_is_pure() {
        let src = "task T { start s; action A { end b; } on A.b -> self.s; }";
        let (m, _) = Model::from_source(src, "t.lr");
        let a = validate(&m, Profile::Standard);
        let b = validate(&m, Profile::Standard);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        assert!(!a.is_empty());
    }
}
