mod common;

use lightrocks::compiler::{emit_dot, flatten};
use lightrocks::dsl;
use lightrocks::engine::{init_run, read_jsonl, to_jsonl, validate_trace, Limits};
use lightrocks::model::{load, MemSources, Model, Profile};
use lightrocks::scenarios::load_scenario;
use lightrocks::world::load_world;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn load_text(text: &str) -> (Model, Vec<lightrocks::diag::Diagnostic>) {
    let src = MemSources::new().with("p.lr", text);
    load(Path::new("p.lr"), &[], &src, Profile::Standard)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_programs_validate_and_round_trip(seed in any::<u64>()) {
        let p = common::program(seed);
        let (m, d) = load_text(&p.text);
        prop_assert!(d.is_empty(), "{:?}", d);
        let (sf, _) = dsl::parse(&p.text, "p.lr");
        let printed = dsl::print(&sf);
        let (again, d) = dsl::parse(&printed, "p.lr");
        prop_assert!(d.is_empty());
        prop_assert_eq!(again.without_spans(), sf.without_spans());
        prop_assert!(m.definition(&p.root).is_some());
    }

    #[test]
    fn flattening_is_idempotent(seed in any::<u64>()) {
        let p = common::program(seed);
        let (m, _) = load_text(&p.text);
        let flat = flatten(&m, &p.root).unwrap();
        let again = flatten(&flat.to_model(), &p.root).unwrap();
        prop_assert_eq!(again.root.without_spans(), flat.root.without_spans());
        prop_assert_eq!(emit_dot(&again), emit_dot(&flat));
        let (reloaded, d) = load_text(&flat.to_text());
        prop_assert!(d.is_empty(), "{:?}", d);
        prop_assert!(reloaded.definition(&p.root).is_some());
    }

    #[test]
    fn conditions_print_and_parse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_condition(&mut rng, 5);
        let text = dsl::print_condition(&c);
        let back = dsl::parse_condition(&text).unwrap();
        prop_assert_eq!(dsl::print_condition(&back), text);
    }
}

#[test]
fn traces_survive_jsonl() {
    let world = load_world(common::GEN_WORLD).unwrap();
    for seed in 0..10 {
        let p = common::program(seed);
        let (m, _) = load_text(&p.text);
        let (_, events) = init_run(&m, &p.root, &world, seed, Limits::default()).unwrap().run_to_end();
        assert_eq!(validate_trace(&events), Ok(()));
        let text = to_jsonl(&events);
        assert_eq!(read_jsonl(&text).unwrap(), events);
    }
}

/// Byte-level mutations of valid sources: the loader must report, never panic.
#[test]
fn mutated_sources_never_panic() {
    let bases: Vec<String> = ["screwing", "rail"]
        .iter()
        .map(|n| load_scenario(n).unwrap().model_text.to_string())
        .chain((0..4).map(|s| common::program(s).text))
        .collect();
    let alphabet: Vec<char> = "{}();.,=<>!-+*/\"[]: \nabsetxz0123456789".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..10_000 {
        let mut chars: Vec<char> = bases[i % bases.len()].chars().collect();
        for _ in 0..rng.random_range(1..=4) {
            let at = rng.random_range(0..chars.len());
            match rng.random_range(0..3) {
                0 => {
                    chars.remove(at);
                }
                1 => chars.insert(at, alphabet[rng.random_range(0..alphabet.len())]),
                _ => {
                    let end = (at + rng.random_range(1..40)).min(chars.len());
                    chars.drain(at..end);
                }
            }
        }
        let text: String = chars.into_iter().collect();
        let (_, diags) = load_text(&text);
        for d in &diags {
            assert!(!d.message.is_empty());
        }
    }
}
