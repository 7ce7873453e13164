//! Loading `.lr` files and building the symbol table.
//!
//! `use "file.lr";` is a textual include: the file's components join the
//! including file's namespace. A dotted reference `lib.Grasp` loads module
//! file `lib.lr` (or `a/b.lr` for `a.b.X`) from the search path; its
//! components are keyed `lib.Grasp`.

use super::{Child, Component};
use crate::diag::{Code, Diagnostic, Span};
use crate::dsl::parse;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

/// Where source text comes from.
pub trait SourceSet {
    fn read(&self, path: &Path) -> Option<String>;
}

/// Reads from the file system.
#[derive(Debug, Clone, Copy, Default)]
pub struct FsSources;

impl SourceSet for FsSources {
    fn read(&self, path: &Path) -> Option<String> {
        std::fs::read_to_string(path).ok()
    }
}

/// In-memory files, for tests and generated models.
#[derive(Debug, Clone, Default)]
pub struct MemSources {
    files: BTreeMap<PathBuf, String>,
}

impl MemSources {
    pub fn new() -> MemSources {
        MemSources::default()
    }

    pub fn with(mut self, path: impl Into<PathBuf>, text: impl Into<String>) -> MemSources {
        self.insert(path, text);
        self
    }

    pub fn insert(&mut self, path: impl Into<PathBuf>, text: impl Into<String>) {
        self.files.insert(path.into(), text.into());
    }
}

impl SourceSet for MemSources {
    fn read(&self, path: &Path) -> Option<String> {
        self.files.get(path).cloned()
    }
}

/// A top-level definition.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    /// Qualified name: `Name` or `module.Name`.
    pub key: String,
    /// Namespace used to resolve names inside this definition.
    pub ns: String,
    pub file: PathBuf,
    pub component: Component,
}

/// Symbol table of a loaded program.
#[derive(Debug, Clone, Default)]
pub struct Model {
    pub symbols: BTreeMap<String, Symbol>,
    /// Keys in load order.
    pub order: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Definitions with `extends` merged in, filled by
    /// [`merge_extends`](super::merge_extends).
    pub merged: BTreeMap<String, Component>,
    pub(crate) merge_diags: Option<Vec<Diagnostic>>,
    /// Keys on a reference or extension cycle. Their merged form is
    /// partial, so the validator skips them.
    pub(crate) cyclic: BTreeSet<String>,
}

pub(crate) fn qualify(ns: &str, name: &str) -> String {
    if ns.is_empty() {
        name.to_string()
    } else {
        format!("{ns}.{name}")
    }
}

impl Model {
    /// Resolves `name` as written inside namespace `ns`.
    pub fn resolve_key(&self, ns: &str, name: &str) -> Option<String> {
        if !ns.is_empty() {
            let k = qualify(ns, name);
            if self.symbols.contains_key(&k) {
                return Some(k);
            }
        }
        self.symbols.contains_key(name).then(|| name.to_string())
    }

    pub fn symbol(&self, key: &str) -> Option<&Symbol> {
        self.symbols.get(key)
    }

    /// The merged definition if available, else the raw one.
    pub fn definition(&self, key: &str) -> Option<&Component> {
        self.merged.get(key).or_else(|| self.symbols.get(key).map(|s| &s.component))
    }

    /// Resolves a name and returns its key, definition and namespace.
    pub fn lookup(&self, ns: &str, name: &str) -> Option<(String, &Component, &str)> {
        let key = self.resolve_key(ns, name)?;
        let sym = self.symbols.get(&key)?;
        let def = self.merged.get(&key).unwrap_or(&sym.component);
        Some((key, def, sym.ns.as_str()))
    }

    /// Wraps already-built top-level components, e.g. flattener output.
    pub fn from_components(components: Vec<Component>, file: &str) -> Model {
        let mut m = Model::default();
        m.files.push(file.into());
        for c in components {
            m.order.push(c.name.clone());
            m.symbols.insert(
                c.name.clone(),
                Symbol { key: c.name.clone(), ns: String::new(), file: file.into(), component: c },
            );
        }
        m
    }

    /// Builds a model from one in-memory file with no includes.
    pub fn from_source(text: &str, file: &str) -> (Model, Vec<Diagnostic>) {
        let src = MemSources::new().with(file, text);
        resolve_names(Path::new(file), &[], &src)
    }
}

fn referenced_names(c: &Component, out: &mut Vec<(String, Span)>) {
    if let Some(b) = &c.extends {
        out.push((b.clone(), c.span.clone()));
    }
    for ch in &c.children {
        match ch {
            Child::Inline(inner) => referenced_names(inner, out),
            Child::Reference(r) => out.push((r.target.clone(), r.span.clone())),
        }
    }
}

struct Loader<'a> {
    src: &'a dyn SourceSet,
    search: &'a [PathBuf],
    model: Model,
    diags: Vec<Diagnostic>,
    files: BTreeSet<PathBuf>,
    modules: BTreeSet<String>,
}

impl Loader<'_> {
    fn locate(&self, rel: &Path, base: Option<&Path>) -> Option<PathBuf> {
        if rel.is_absolute() {
            return self.src.read(rel).map(|_| rel.to_path_buf());
        }
        base.into_iter()
            .map(Path::to_path_buf)
            .chain(self.search.iter().cloned())
            .map(|dir| dir.join(rel))
            .find(|p| self.src.read(p).is_some())
    }

    fn load_file(&mut self, path: &Path, ns: &str, from: Option<&Span>) {
        if !self.files.insert(path.to_path_buf()) {
            return;
        }
        let Some(text) = self.src.read(path) else {
            let span = from.cloned().unwrap_or_else(|| Span::new(path, (1, 1), (1, 1)));
            self.diags.push(Diagnostic::new(Code::E011, span, format!("cannot read `{}`", path.display())));
            return;
        };
        let (sf, d) = parse(&text, path);
        self.diags.extend(d);
        self.model.files.push(path.to_path_buf());
        let dir = path.parent().map(Path::to_path_buf);
        for u in &sf.uses {
            match self.locate(Path::new(&u.path), dir.as_deref()) {
                Some(p) => self.load_file(&p, ns, Some(&u.span)),
                None => self.diags.push(Diagnostic::new(
                    Code::E011,
                    u.span.clone(),
                    format!("cannot find included file \"{}\"", u.path),
                )),
            }
        }
        for c in sf.components {
            let key = qualify(ns, &c.name);
            if let Some(first) = self.model.symbols.get(&key) {
                self.diags.push(Diagnostic::new(
                    Code::E010,
                    c.span.clone(),
                    format!("duplicate definition of `{key}` (first defined at {})", first.component.span),
                ));
                continue;
            }
            self.model.order.push(key.clone());
            self.model.symbols.insert(
                key.clone(),
                Symbol { key, ns: ns.to_string(), file: path.to_path_buf(), component: c },
            );
        }
    }

    /// Loads module files for dotted names until nothing new appears.
    fn load_modules(&mut self) {
        let mut done = 0;
        loop {
            let keys: Vec<String> = self.model.order[done..].to_vec();
            if keys.is_empty() {
                break;
            }
            done = self.model.order.len();
            for key in keys {
                let sym = &self.model.symbols[&key];
                let mut names = Vec::new();
                referenced_names(&sym.component, &mut names);
                let ns = sym.ns.clone();
                for (name, span) in names {
                    if self.model.resolve_key(&ns, &name).is_some() {
                        continue;
                    }
                    let Some((module, _)) = name.rsplit_once('.') else { continue };
                    if !self.modules.insert(module.to_string()) {
                        continue;
                    }
                    let rel: PathBuf = format!("{}.lr", module.replace('.', "/")).into();
                    if let Some(p) = self.locate(&rel, None) {
                        self.load_file(&p, module, Some(&span));
                    }
                }
            }
        }
    }

    fn check_references(&mut self) {
        for key in &self.model.order {
            let sym = &self.model.symbols[key];
            let mut names = Vec::new();
            referenced_names(&sym.component, &mut names);
            for (name, span) in names {
                if self.model.resolve_key(&sym.ns, &name).is_none() {
                    let hint = match name.rsplit_once('.') {
                        Some((m, _)) if !self.model.symbols.values().any(|s| s.ns == m) => {
                            format!(" (module `{m}` not found on the search path)")
                        }
                        _ => String::new(),
                    };
                    self.diags.push(Diagnostic::new(
                        Code::E011,
                        span,
                        format!("unresolved reference `{name}`{hint}"),
                    ));
                }
            }
        }
    }
}

/// Loads `root` and everything it includes or references.
///
/// `search` lists directories for module files and includes, tried in
/// order after the including file's own directory.
pub fn resolve_names(root: &Path, search: &[PathBuf], src: &dyn SourceSet) -> (Model, Vec<Diagnostic>) {
    let mut l = Loader {
        src,
        search,
        model: Model::default(),
        diags: Vec::new(),
        files: BTreeSet::new(),
        modules: BTreeSet::new(),
    };
    l.load_file(root, "", None);
    l.load_modules();
    l.check_references();
    (l.model, l.diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEAF: &str = "action A { start s; end e; exec tool.grip(); }";

    #[test]
    fn single_file_two_entries() {
        let src = "task T { start s; end e; uses S as s1; on self.s -> s1.a; on s1.b -> self.e; }\n\
                   skill S { start a; end b; action A { start s; end e; exec tool.grip(); } on self.a -> A.s; on A.e -> self.b; }";
        let (m, d) = Model::from_source(src, "t.lr");
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(m.symbols.len(), 2);
    }

    #[test]
    fn duplicate_across_included_files() {
        let src = MemSources::new()
            .with("m/root.lr", "use \"a.lr\";\nuse \"b.lr\";\n")
            .with("m/a.lr", "skill Grasp { start s; end e; }")
            .with("m/b.lr", "skill Grasp { start s; end e; }");
        let (_, d) = resolve_names(Path::new("m/root.lr"), &[], &src);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::E010);
        assert_eq!(d[0].span.file, PathBuf::from("m/b.lr"));
    }

    #[test]
    fn module_reference_on_search_path() {
        let src = MemSources::new()
            .with("app/main.lr", "skill S { start s; end e; uses lib.A as a; on self.s -> a.s; on a.e -> self.e; }")
            .with("libs/lib.lr", LEAF);
        let (m, d) = resolve_names(Path::new("app/main.lr"), &[PathBuf::from("libs")], &src);
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(m.symbol("lib.A").unwrap().ns, "lib");
        assert_eq!(m.resolve_key("", "lib.A").as_deref(), Some("lib.A"));
    }

    #[test]
    fn module_names_resolve_inside_their_namespace() {
        let src = MemSources::new()
            .with("main.lr", "skill S { start s; end e; uses lib.W as w; on self.s -> w.s; on w.e -> self.e; }")
            .with("lib.lr", format!("{LEAF}\nskill W {{ start s; end e; uses A as a; on self.s -> a.s; on a.e -> self.e; }}"));
        let (m, d) = resolve_names(Path::new("main.lr"), &[PathBuf::from("")], &src);
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(m.resolve_key("lib", "A").as_deref(), Some("lib.A"));
    }

    #[test]
    fn unresolved_reference() {
        let (_, d) = Model::from_source("skill S { start s; end e; uses Nope as n; }", "t.lr");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::E011);
        let (_, d) = Model::from_source("skill S extends Base { start s; end e; }", "t.lr");
        assert_eq!(d[0].code, Code::E011);
    }

    #[test]
    fn missing_include() {
        let (_, d) = Model::from_source("use \"gone.lr\";", "t.lr");
        assert_eq!(d[0].code, Code::E011);
    }
}
