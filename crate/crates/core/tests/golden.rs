//! Golden files for the bundles. Regenerate with `UPDATE_GOLDEN=1 cargo test --test golden`.

use lightrocks::compiler::{emit_dot, flatten};
use lightrocks::dsl;
use lightrocks::engine::{to_jsonl, Limits};
use lightrocks::scenarios::load_scenario;
use std::path::PathBuf;

fn check(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).map_or(0, |i| i + 1);
        panic!("{name} differs from golden (first difference near line {line})");
    }
}

#[test]
fn printed_sources() {
    for name in ["screwing", "rail"] {
        let b = load_scenario(name).unwrap();
        let (sf, d) = dsl::parse(b.model_text, &b.model_file);
        assert!(d.is_empty());
        check(&format!("{name}.printed.lr"), &dsl::print(&sf));
    }
}

#[test]
fn flat_models_and_dot() {
    for name in ["screwing", "rail"] {
        let b = load_scenario(name).unwrap();
        let flat = flatten(&b.model().unwrap(), b.root).unwrap();
        check(&format!("{name}.flat.lr"), &flat.to_text());
        check(&format!("{name}.dot"), &emit_dot(&flat));
    }
}

#[test]
fn screwing_seed_7_trace() {
    let (_, events, _) = load_scenario("screwing").unwrap().run(7, Limits::default());
    check("screwing_seed7.jsonl", &to_jsonl(&events));
}
