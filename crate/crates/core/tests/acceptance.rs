//! Acceptance criteria, one line per criterion. Runs as a plain binary
//! (`harness = false`) and exits nonzero if any criterion fails.

mod common;

use lightrocks::compiler::flatten;
use lightrocks::devices::{Sample, Snapshot};
use lightrocks::dsl;
use lightrocks::engine::{
    eval_condition, init_run, ordering_violations, to_jsonl, validate_trace, EventKind, Limits, RunOutcome, Status,
    TraceEvent,
};
use lightrocks::model::{load, FsSources, MemSources, Model, Profile};
use lightrocks::scenarios::{expected_screw_iterations, load_scenario, screw_oracle, SCREW_TARGET_Z, SCREW_TORQUE};
use lightrocks::world::{load_world, EnvironmentalModel, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

const GENERATED_FLATTEN: u64 = 60;
const GENERATED_ROUND_TRIP: u64 = 120;
const CONDITION_TREES: usize = 1000;
const RAIL_SEEDS: u64 = 10;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load_text(text: &str, file: &str) -> Model {
    let src = MemSources::new().with(file, text);
    let (m, d) = load(Path::new(file), &[], &src, Profile::Standard);
    assert!(d.iter().all(|d| !d.is_error()), "{file}: {d:?}");
    m
}

fn run(model: &Model, root: &str, world: &World, seed: u64) -> (RunOutcome, Vec<TraceEvent>) {
    init_run(model, root, world, seed, Limits::default()).expect("run starts").run_to_end()
}

fn screwing() -> Check {
    let b = load_scenario("screwing").unwrap();
    let limits = Limits::default();
    let start = Instant::now();
    let (out, events, _) = b.run(7, limits);
    let took = start.elapsed();
    ensure(out.status == Status::Success, || format!("outcome {out}"))?;
    let oracle = screw_oracle(&b.world().unwrap(), limits.dt).ok_or("world has no screw joint")?;
    let expected = expected_screw_iterations(oracle.z0, SCREW_TARGET_Z, oracle.pitch_per_turn).map_err(|e| e.to_string())?;
    let stops: Vec<&TraceEvent> =
        events.iter().filter(|e| e.kind == EventKind::StopTriggered && e.subject.ends_with(".ScrewDown")).collect();
    for s in &stops {
        let tz = s.data["snapshot"]["robot.torque.z"].as_f64().ok_or("stop without torque.z")?;
        ensure((SCREW_TORQUE..=SCREW_TORQUE + oracle.overshoot).contains(&tz), || {
            format!("torque.z {tz} outside [{SCREW_TORQUE}, {}]", SCREW_TORQUE + oracle.overshoot)
        })?;
    }
    ensure(stops.len() == expected as usize, || format!("{} strokes, expected {expected}", stops.len()))?;
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("{} strokes, overshoot bound {:.2e}, {:.2?}", stops.len(), oracle.overshoot, took))
}

fn angle_between(a: &lightrocks::world::Transform, b: &lightrocks::world::Transform) -> f64 {
    let r = a.rotation.transpose() * b.rotation;
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

fn rail() -> Check {
    let b = load_scenario("rail").unwrap();
    let world = b.world().unwrap();
    ensure((world.perception.sigma_pos - 0.002).abs() < 1e-12, || "sigma_pos is not 2 mm".into())?;
    let mut worst = (0.0f64, 0.0f64, Duration::ZERO);
    for seed in 0..RAIL_SEEDS {
        let start = Instant::now();
        let (out, events, truth) = b.run(seed, Limits::default());
        let took = start.elapsed();
        ensure(out.status == Status::Success, || format!("seed {seed}: outcome {out}"))?;
        ensure(took < Duration::from_secs(10), || format!("seed {seed}: took {took:?}"))?;
        let done: Vec<&str> = events
            .iter()
            .filter(|e| e.kind == EventKind::Finished && e.subject.matches('.').count() == 1)
            .map(|e| e.subject.as_str())
            .collect();
        let order = ["RailAssembly.part1", "RailAssembly.part2", "RailAssembly.part3"];
        ensure(done == order, || format!("seed {seed}: tasks finished as {done:?}"))?;
        for i in 1..=3 {
            let part = truth.em.world_pose(&format!("part{i}")).map_err(|e| e.to_string())?;
            let slot = truth.em.world_pose(&format!("slot{i}")).map_err(|e| e.to_string())?;
            let d = (part.translation - slot.translation).norm();
            let a = angle_between(&part, &slot);
            ensure(d <= 1e-3 && a <= 1f64.to_radians(), || {
                format!("seed {seed}: part{i} off by {:.3} mm, {:.3} deg", d * 1e3, a.to_degrees())
            })?;
            worst = (worst.0.max(d), worst.1.max(a), worst.2.max(took));
        }
    }
    Ok(format!(
        "{RAIL_SEEDS} seeds, worst {:.3} mm / {:.3} deg, slowest {:.2?}",
        worst.0 * 1e3,
        worst.1.to_degrees(),
        worst.2
    ))
}

fn rewritten(events: &[TraceEvent], map: impl Fn(&str) -> String) -> String {
    let mut ev = events.to_vec();
    for e in &mut ev {
        e.subject = map(&e.subject);
    }
    to_jsonl(&ev)
}

fn flatten_equivalent(model: &Model, root: &str, world: &World, seed: u64) -> Result<(), String> {
    let flat = flatten(model, root).map_err(|d| format!("{root}: {d:?}"))?;
    let fm = flat.to_model();
    let (o1, e1) = run(model, root, world, seed);
    let (o2, e2) = run(&fm, root, world, seed);
    ensure(o1 == o2, || format!("{root}: outcomes {o1} vs {o2}"))?;
    ensure(to_jsonl(&e1) == rewritten(&e2, |p| flat.original_path(p).to_string()), || {
        format!("{root}: traces differ")
    })
}

fn flatten_criterion() -> Check {
    for name in ["screwing", "rail"] {
        let b = load_scenario(name).unwrap();
        flatten_equivalent(&b.model().unwrap(), b.root, &b.world().unwrap(), 7)?;
    }
    let world = load_world(common::GEN_WORLD).unwrap();
    for seed in 0..GENERATED_FLATTEN {
        let p = common::program(seed);
        flatten_equivalent(&load_text(&p.text, "gen.lr"), &p.root, &world, seed).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("2 bundles + {GENERATED_FLATTEN} generated models"))
}

fn ordering() -> Check {
    let mut traces = Vec::new();
    for name in ["screwing", "rail"] {
        traces.push(load_scenario(name).unwrap().run(7, Limits::default()).1);
    }
    let world = load_world(common::GEN_WORLD).unwrap();
    for seed in 0..20 {
        let p = common::program(seed);
        traces.push(run(&load_text(&p.text, "gen.lr"), &p.root, &world, seed).1);
    }
    let mut updates = 0;
    for t in &traces {
        validate_trace(t)?;
        let v = ordering_violations(t);
        ensure(v == 0, || format!("{v} violations"))?;
        updates += t.iter().filter(|e| e.kind == EventKind::EmUpdated).count();
    }
    ensure(updates > 0, || "no EmUpdated events to order".into())?;
    Ok(format!("{} traces, {updates} updates, 0 violations", traces.len()))
}

fn round_trip_one(text: &str, file: &str) -> Result<(), String> {
    let (a, d) = dsl::parse(text, file);
    ensure(d.is_empty(), || format!("{file}: {d:?}"))?;
    let printed = dsl::print(&a);
    ensure(printed == dsl::print(&a), || format!("{file}: print is not deterministic"))?;
    let (b, d) = dsl::parse(&printed, file);
    ensure(d.is_empty(), || format!("{file}: reparse: {d:?}"))?;
    ensure(a.without_spans() == b.without_spans(), || format!("{file}: structure changed"))?;
    ensure(dsl::print(&b) == printed, || format!("{file}: print not a fixpoint"))
}

fn round_trip() -> Check {
    for name in ["screwing", "rail"] {
        round_trip_one(load_scenario(name).unwrap().model_text, name)?;
    }
    for seed in 0..GENERATED_ROUND_TRIP {
        round_trip_one(&common::program(seed).text, &format!("gen{seed}.lr"))?;
    }
    Ok(format!("2 bundles + {GENERATED_ROUND_TRIP} generated models"))
}

fn defects() -> Check {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/defects");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "lr"))
        .collect();
    files.sort();
    for f in &files {
        let stem = f.file_stem().unwrap().to_string_lossy();
        let want = stem.split('_').next().unwrap().to_uppercase();
        let (_, d) = load(f, &[], &FsSources, Profile::Standard);
        let got: Vec<&str> = d.iter().map(|d| d.code.as_str()).collect();
        ensure(got == [want.as_str()], || format!("{stem}: got {got:?}"))?;
    }
    ensure(files.len() >= 12, || format!("only {} defect files", files.len()))?;
    Ok(format!("{} files", files.len()))
}

fn determinism() -> Check {
    for name in ["screwing", "rail"] {
        let b = load_scenario(name).unwrap();
        let a = to_jsonl(&b.run(7, Limits::default()).1);
        let c = to_jsonl(&b.run(7, Limits::default()).1);
        ensure(a == c, || format!("{name}: traces differ"))?;
    }
    let world = load_world(common::GEN_WORLD).unwrap();
    for seed in 0..10 {
        let p = common::program(seed);
        let m = load_text(&p.text, "gen.lr");
        ensure(to_jsonl(&run(&m, &p.root, &world, seed).1) == to_jsonl(&run(&m, &p.root, &world, seed).1), || {
            format!("generated seed {seed}: traces differ")
        })?;
    }
    Ok("2 bundles + 10 generated models".into())
}

fn conditions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let em = EnvironmentalModel::new();
    let mut errors = 0;
    for i in 0..CONDITION_TREES {
        let depth = rng.random_range(1..=5);
        let c = common::random_condition(&mut rng, depth);
        let vals = common::random_valuation(&mut rng);
        let snap: Snapshot = vals
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    common::Val::Num(x) => Sample::Num(*x),
                    common::Val::Bool(b) => Sample::Bool(*b),
                };
                (k.clone(), s)
            })
            .collect();
        let got = eval_condition(&c, &snap, &em).ok();
        let want = common::brute_eval(&c, &vals);
        ensure(got == want, || format!("tree {i} `{}`: {got:?} vs {want:?}", dsl::print_condition(&c)))?;
        let reparsed = dsl::parse_condition(&dsl::print_condition(&c)).map_err(|d| format!("tree {i}: {d:?}"))?;
        ensure(eval_condition(&reparsed, &snap, &em).ok() == want, || format!("tree {i}: printed form differs"))?;
        errors += usize::from(want.is_none());
    }
    Ok(format!("{CONDITION_TREES} trees ({errors} erroneous)"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("screwing", screwing),
        ("rail", rail),
        ("flatten", flatten_criterion),
        ("ordering", ordering),
        ("round-trip", round_trip),
        ("defects", defects),
        ("determinism", determinism),
        ("conditions", conditions),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
