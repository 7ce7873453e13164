//! The Generic Action Component algebra.
//!
//! Tasks, skills and elemental actions are all [`Component`] values tagged
//! with a [`Level`]. A component carries parameters, start and end condition
//! ports, and either a net of children connected by transitions or a single
//! device call (`exec`), never both.

pub mod expr;
mod merge;
mod resolve;
mod validate;

use crate::diag::Span;

pub use expr::{BinOp, CmpOp, ConditionExpr, Env, EvalError, Expr, FrameValue, ParamType, Value, ValueType};
pub use merge::merge_extends;
pub use resolve::{resolve_names, FsSources, MemSources, Model, SourceSet, Symbol};
pub use validate::{validate, Profile};

use crate::diag::{normalize, Code, Diagnostic};
use std::path::{Path, PathBuf};

/// Resolves, merges and validates a program rooted at `root`. Diagnostics
/// are sorted by file, line and code.
pub fn load(root: &Path, search: &[PathBuf], src: &dyn SourceSet, profile: Profile) -> (Model, Vec<Diagnostic>) {
    let (mut model, mut diags) = resolve_names(root, search, src);
    // Recovered parse trees are partial; checking them only adds noise.
    if !diags.iter().any(|d| d.code == Code::E000) {
        merge_extends(&mut model);
        diags.extend(validate(&model, profile));
    }
    normalize(&mut diags);
    (model, diags)
}

/// Abstraction level of a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Task,
    Skill,
    Action,
    Generic(u32),
}

impl Level {
    /// Numeric depth: Task 2, Skill 1, Action 0.
    pub fn value(self) -> u32 {
        match self {
            Level::Task => 2,
            Level::Skill => 1,
            Level::Action => 0,
            Level::Generic(d) => d,
        }
    }

    pub fn keyword(self) -> String {
        match self {
            Level::Task => "task".into(),
            Level::Skill => "skill".into(),
            Level::Action => "action".into(),
            Level::Generic(d) => format!("component {d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub ptype: ParamType,
    pub default: Option<Value>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortKind {
    Start,
    End,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionPort {
    pub name: String,
    pub kind: PortKind,
    pub guard: Option<ConditionExpr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Owner {
    SelfRef,
    Child(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub owner: Owner,
    pub port: String,
}

impl Endpoint {
    pub fn own(port: &str) -> Endpoint {
        Endpoint { owner: Owner::SelfRef, port: port.into() }
    }

    pub fn child(alias: &str, port: &str) -> Endpoint {
        Endpoint { owner: Owner::Child(alias.into()), port: port.into() }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.owner {
            Owner::SelfRef => write!(f, "self.{}", self.port),
            Owner::Child(c) => write!(f, "{}.{}", c, self.port),
        }
    }
}

/// `name = expr` as used by reference arguments, `set` clauses and device
/// call arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub value: Expr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: Endpoint,
    pub target: Endpoint,
    pub pre: Option<ConditionExpr>,
    pub post: Option<ConditionExpr>,
    pub bindings: Vec<Binding>,
    pub span: Span,
}

impl Transition {
    pub fn label(&self) -> String {
        format!("{}->{}", self.source, self.target)
    }
}

/// `emPath := result.field`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateBinding {
    pub em_path: Vec<String>,
    pub field: String,
    pub span: Span,
}

impl UpdateBinding {
    pub fn path_string(&self) -> String {
        self.em_path.join(".")
    }
}

/// The `exec` clause of a leaf: device command, stop condition and
/// environmental-model updates.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceCall {
    pub device: String,
    pub command: String,
    pub args: Vec<Binding>,
    pub stop: Option<ConditionExpr>,
    pub updates: Vec<UpdateBinding>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub target: String,
    pub alias: String,
    pub args: Vec<Binding>,
    pub span: Span,
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum Child {
    Inline(Component),
    Reference(Reference),
}

impl Child {
    pub fn alias(&self) -> &str {
        match self {
            Child::Inline(c) => &c.name,
            Child::Reference(r) => &r.alias,
        }
    }

    pub fn span(&self) -> &Span {
        match self {
            Child::Inline(c) => &c.span,
            Child::Reference(r) => &r.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub level: Level,
    pub params: Vec<Parameter>,
    /// Start and end ports in declaration order.
    pub ports: Vec<ConditionPort>,
    pub children: Vec<Child>,
    pub transitions: Vec<Transition>,
    pub exec: Option<DeviceCall>,
    pub extends: Option<String>,
    pub span: Span,
}

impl Component {
    pub fn new(name: &str, level: Level) -> Component {
        Component {
            name: name.into(),
            level,
            params: Vec::new(),
            ports: Vec::new(),
            children: Vec::new(),
            transitions: Vec::new(),
            exec: None,
            extends: None,
            span: Span::default(),
        }
    }

    pub fn starts(&self) -> impl Iterator<Item = &ConditionPort> {
        self.ports.iter().filter(|p| p.kind == PortKind::Start)
    }

    pub fn ends(&self) -> impl Iterator<Item = &ConditionPort> {
        self.ports.iter().filter(|p| p.kind == PortKind::End)
    }

    pub fn port(&self, name: &str) -> Option<&ConditionPort> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn param(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn child(&self, alias: &str) -> Option<&Child> {
        self.children.iter().find(|c| c.alias() == alias)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Environment built from parameter defaults.
    pub fn default_env(&self) -> Env {
        self.params
            .iter()
            .filter_map(|p| p.default.clone().map(|v| (p.name.clone(), v)))
            .collect()
    }

    /// Copy with every span cleared, for structural comparison.
    pub fn without_spans(&self) -> Component {
        let mut c = self.clone();
        c.clear_spans();
        c
    }

    fn clear_spans(&mut self) {
        self.span = Span::default();
        for p in &mut self.params {
            p.span = Span::default();
        }
        for p in &mut self.ports {
            p.span = Span::default();
        }
        for t in &mut self.transitions {
            t.span = Span::default();
            for b in &mut t.bindings {
                b.span = Span::default();
            }
        }
        if let Some(e) = &mut self.exec {
            e.span = Span::default();
            for a in &mut e.args {
                a.span = Span::default();
            }
            for u in &mut e.updates {
                u.span = Span::default();
            }
        }
        for c in &mut self.children {
            match c {
                Child::Inline(inner) => inner.clear_spans(),
                Child::Reference(r) => {
                    r.span = Span::default();
                    for a in &mut r.args {
                        a.span = Span::default();
                    }
                }
            }
        }
    }

    /// Visits this component and every inline descendant, depth first.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Component)) {
        f(self);
        for c in &self.children {
            if let Child::Inline(inner) = c {
                inner.walk(f);
            }
        }
    }
}

/// `use "file.lr";`
#[derive(Debug, Clone, PartialEq)]
pub struct UseDecl {
    pub path: String,
    pub span: Span,
}

/// One parsed `.lr` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceFile {
    pub uses: Vec<UseDecl>,
    pub components: Vec<Component>,
}

impl SourceFile {
    pub fn without_spans(&self) -> SourceFile {
        SourceFile {
            uses: self
                .uses
                .iter()
                .map(|u| UseDecl { path: u.path.clone(), span: Span::default() })
                .collect(),
            components: self.components.iter().map(Component::without_spans).collect(),
        }
    }
}
