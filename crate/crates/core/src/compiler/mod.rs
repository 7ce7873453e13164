//! Flattening and DOT emission.
//!
//! [`flatten`] replaces every `uses` reference by a copy of its target,
//! renamed to the reference alias, with constant arguments folded into
//! parameter defaults. `extends` is already merged by the model layer, so
//! the result is one self-contained tree. Instance paths are unchanged by
//! construction and [`FlatModel::correspondence`] records them.

use crate::diag::{normalize, Code, Diagnostic};
use crate::dsl;
use crate::model::{merge_extends, Child, Component, ConditionExpr, Env, Model, Owner, PortKind};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A single root with every child inline.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatModel {
    pub root: Component,
    /// Flat instance path to original instance path.
    pub correspondence: BTreeMap<String, String>,
}

impl FlatModel {
    /// Wraps the flat root as a runnable model.
    pub fn to_model(&self) -> Model {
        let mut m = Model::from_components(vec![self.root.clone()], "<flat>");
        merge_extends(&mut m);
        m
    }

    /// Canonical text of the flat root.
    pub fn to_text(&self) -> String {
        dsl::print_component(&self.root)
    }

    /// Rewrites a flat instance path to the original one.
    pub fn original_path<'a>(&'a self, path: &'a str) -> &'a str {
        self.correspondence.get(path).map(String::as_str).unwrap_or(path)
    }
}

struct Flattener<'a> {
    model: &'a Model,
    stack: Vec<String>,
    diags: Vec<Diagnostic>,
    map: BTreeMap<String, String>,
}

impl Flattener<'_> {
    fn component(&mut self, def: &Component, ns: &str, path: &str) -> Component {
        self.map.insert(path.to_string(), path.to_string());
        let mut out = def.clone();
        out.extends = None;
        out.children.clear();
        for ch in &def.children {
            let child_path = format!("{path}.{}", ch.alias());
            match ch {
                Child::Inline(inner) => {
                    let c = self.component(inner, ns, &child_path);
                    out.children.push(Child::Inline(c));
                }
                Child::Reference(r) => {
                    let Some((key, target, tns)) = self.model.lookup(ns, &r.target) else {
                        self.diags.push(Diagnostic::new(
                            Code::E011,
                            r.span.clone(),
                            format!("unresolved reference `{}`", r.target),
                        ));
                        continue;
                    };
                    if let Some(pos) = self.stack.iter().position(|k| *k == key) {
                        let mut cycle = self.stack[pos..].to_vec();
                        cycle.push(key);
                        self.diags.push(Diagnostic::new(
                            Code::E021,
                            r.span.clone(),
                            format!("cyclic reference: {}", cycle.join(" -> ")),
                        ));
                        continue;
                    }
                    self.stack.push(key);
                    let mut c = self.component(target, tns, &child_path);
                    self.stack.pop();
                    c.name = r.alias.clone();
                    c.span = r.span.clone();
                    for a in &r.args {
                        match (a.value.eval(&Env::new()), c.params.iter_mut().find(|p| p.name == a.name)) {
                            (Ok(v), Some(p)) => p.default = Some(v),
                            _ => self.diags.push(Diagnostic::new(
                                Code::E009,
                                a.span.clone(),
                                format!("argument `{}` of `{}` cannot be folded", a.name, r.alias),
                            )),
                        }
                    }
                    out.children.push(Child::Inline(c));
                }
            }
        }
        out
    }
}

/// Flattens the definition `root` of `model`.
///
/// The model should be merged (see [`crate::model::load`]); an unmerged
/// model is merged on a copy first.
pub fn flatten(model: &Model, root: &str) -> Result<FlatModel, Vec<Diagnostic>> {
    let merged;
    let model = if model.merged.is_empty() && !model.symbols.is_empty() {
        let mut m = model.clone();
        let d = merge_extends(&mut m);
        if crate::diag::has_errors(&d) {
            return Err(d);
        }
        merged = m;
        &merged
    } else {
        model
    };
    let Some((key, def, ns)) = model.lookup("", root) else {
        return Err(vec![Diagnostic::new(
            Code::E011,
            crate::diag::Span::default(),
            format!("unknown root component `{root}`"),
        )]);
    };
    let mut f = Flattener { model, stack: vec![key], diags: Vec::new(), map: BTreeMap::new() };
    let flat = f.component(def, ns, &def.name);
    if f.diags.is_empty() {
        Ok(FlatModel { root: flat, correspondence: f.map })
    } else {
        normalize(&mut f.diags);
        Err(f.diags)
    }
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn edge_label(pre: Option<&ConditionExpr>, post: Option<&ConditionExpr>) -> String {
    let mut parts = Vec::new();
    if let Some(c) = pre {
        parts.push(format!("pre: {}", dsl::print_condition(c)));
    }
    if let Some(c) = post {
        parts.push(format!("post: {}", dsl::print_condition(c)));
    }
    parts.join("\\n")
}

struct Dot {
    out: String,
    cluster: usize,
}

impl Dot {
    fn port_id(path: &str, port: &str) -> String {
        format!("\"{}:{}\"", esc(path), esc(port))
    }

    fn node_of(c: &Component, path: &str, port: &str) -> String {
        if c.is_leaf() {
            format!("\"{}\"", esc(path))
        } else {
            Dot::port_id(path, port)
        }
    }

    fn component(&mut self, c: &Component, path: &str, indent: usize) {
        let pad = "  ".repeat(indent);
        if c.is_leaf() {
            let call = c.exec.as_ref().map(|e| format!("\\n{}.{}", e.device, e.command)).unwrap_or_default();
            let _ = writeln!(self.out, "{pad}\"{}\" [shape=box, style=rounded, label=\"{}{call}\"];", esc(path), esc(&c.name));
            return;
        }
        let _ = writeln!(self.out, "{pad}subgraph cluster_{} {{", self.cluster);
        self.cluster += 1;
        let _ = writeln!(self.out, "{pad}  label=\"{} {}\";", esc(&c.level.keyword()), esc(&c.name));
        for p in &c.ports {
            let shape = if p.kind == PortKind::Start { "circle" } else { "doublecircle" };
            let _ = writeln!(self.out, "{pad}  {} [shape={shape}, label=\"{}\"];", Dot::port_id(path, &p.name), esc(&p.name));
        }
        for ch in &c.children {
            if let Child::Inline(inner) = ch {
                self.component(inner, &format!("{path}.{}", inner.name), indent + 1);
            }
        }
        let _ = writeln!(self.out, "{pad}}}");
    }

    fn edges(&mut self, c: &Component, path: &str) {
        for t in &c.transitions {
            let end = |ep: &crate::model::Endpoint| match &ep.owner {
                Owner::SelfRef => Dot::port_id(path, &ep.port),
                Owner::Child(a) => match c.child(a) {
                    Some(Child::Inline(inner)) => Dot::node_of(inner, &format!("{path}.{a}"), &ep.port),
                    _ => Dot::port_id(&format!("{path}.{a}"), &ep.port),
                },
            };
            let label = edge_label(t.pre.as_ref(), t.post.as_ref());
            let _ = writeln!(self.out, "  {} -> {} [label=\"{}\"];", end(&t.source), end(&t.target), esc(&label).replace("\\\\n", "\\n"));
        }
        for ch in &c.children {
            if let Child::Inline(inner) = ch {
                self.edges(inner, &format!("{path}.{}", inner.name));
            }
        }
    }
}

/// Graphviz rendering of a flat model: one cluster per composite, one node
/// per composite port and per leaf, one edge per transition.
pub fn emit_dot(flat: &FlatModel) -> String {
    let root = &flat.root;
    let mut d = Dot { out: String::new(), cluster: 0 };
    let _ = writeln!(d.out, "digraph \"{}\" {{", esc(&root.name));
    d.out.push_str("  compound=true;\n  node [fontname=\"Helvetica\"];\n");
    d.component(root, &root.name, 1);
    d.edges(root, &root.name);
    d.out.push_str("}\n");
    d.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, Profile};

    fn model(src: &str) -> Model {
        let (mut m, d) = Model::from_source(src, "t.lr");
        assert!(d.is_empty(), "{d:?}");
        merge_extends(&mut m);
        m
    }

    const LIB: &str = r#"
action Grip { start s; end e; exec tool.grip(); }
skill Grasp(num speed = 0.1) {
  start s;
  end e;
  uses Grip as g;
  on self.s -> g.s;
  on g.e -> self.e;
}
skill FineGrasp extends Grasp {
  end failed;
  on g.e -> self.failed pre not tool.grasped;
}
task T {
  start s;
  end e;
  uses FineGrasp as fine(speed = 0.02);
  on self.s -> fine.s;
  on fine.e -> self.e;
  on fine.failed -> self.e;
}
"#;

    #[test]
    fn identity_without_references() {
        let src = "skill S { start s; end e; action A { start s; end e; exec tool.grip(); } on self.s -> A.s; on A.e -> self.e; }";
        let m = model(src);
        let flat = flatten(&m, "S").unwrap();
        assert_eq!(flat.root.without_spans(), m.definition("S").unwrap().without_spans());
    }

    #[test]
    fn extension_and_folding() {
        let m = model(LIB);
        let flat = flatten(&m, "T").unwrap();
        let Some(Child::Inline(fine)) = flat.root.child("fine") else { panic!() };
        let base = m.definition("Grasp").unwrap();
        assert_eq!(fine.transitions.len(), base.transitions.len() + 1);
        assert_eq!(fine.param("speed").unwrap().default, Some(crate::model::Value::Num(0.02)));
        assert!(matches!(fine.child("g"), Some(Child::Inline(_))));
        assert_eq!(flat.original_path("T.fine.g"), "T.fine.g");
        let fm = flat.to_model();
        assert!(validate(&fm, Profile::Standard).iter().all(|d| !d.is_error()));
    }

    #[test]
    fn idempotent() {
        let flat = flatten(&model(LIB), "T").unwrap();
        let again = flatten(&flat.to_model(), "T").unwrap();
        assert_eq!(again.root.without_spans(), flat.root.without_spans());
        assert_eq!(emit_dot(&again), emit_dot(&flat));
    }

    #[test]
    fn cycle_is_e021() {
        let (m, _) = Model::from_source(
            "skill A { start s; end e; uses B as b; on self.s -> b.s; on b.e -> self.e; }\n\
             skill B { start s; end e; uses A as a; on self.s -> a.s; on a.e -> self.e; }",
            "t.lr",
        );
        let d = flatten(&m, "A").unwrap_err();
        assert!(d.iter().any(|d| d.code == Code::E021));
    }

    #[test]
    fn dot_for_single_leaf_skill() {
        let m = model("skill S { start s; end e; action A { start s; end e; exec tool.grip(); } on self.s -> A.s; on A.e -> self.e; }");
        let dot = emit_dot(&flatten(&m, "S").unwrap());
        assert_eq!(dot.matches("subgraph cluster_").count(), 1);
        assert_eq!(dot.matches(" -> ").count(), 2);
        assert!(dot.contains("\"S:s\" -> \"S.A\""));
        assert!(dot.contains("\"S.A\" -> \"S:e\""));
    }
}
