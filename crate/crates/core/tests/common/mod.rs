//! Shared generators and oracles for the integration tests.
//!
//! # Program generator
//!
//! [`program`] builds a valid, runnable program from a seed:
//!
//! * one root `task T` with 1 to 6 skill children, each either an inline
//!   skill or a `uses` reference to a library skill;
//! * library skills `L0..L2`, some extended (`L0x extends L0`) with an extra
//!   end port and a guarded transition to it;
//! * each skill has 1 to 6 action children, inline or referenced from the
//!   top-level actions `Move`, `Look` and `Nudge`, with constant reference
//!   arguments and `set` bindings;
//! * transitions form a chain `self.s -> c0 -> c1 -> ... -> self.e`, with
//!   optional guarded forward jumps tried before the chain edge and
//!   optional second end ports that the parent routes onward;
//! * guards use only environmental-model paths (`box.seen`,
//!   `box.pose.z`, ...) so they resolve before any device has run.
//!
//! Depth is at most 3 (task, skill, action) and no level has more than 6
//! children. Motions are short so a run takes well under a second.

#![allow(dead_code)]

use lightrocks::model::{CmpOp, ConditionExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt::Write;

pub const GEN_WORLD: &str = r#"{
  "objects": [
    {"name": "tcp", "xyz": [0.3, 0.0, 0.2]},
    {"name": "table", "xyz": [0.4, 0.0, 0.0]},
    {"name": "box", "parent": "table", "xyz": [0.0, 0.0, 0.1], "attrs": {"graspable": true, "seen": false, "count": 0}}
  ],
  "perception": {"sigma_pos": 0.001, "sigma_rot": 0.001},
  "gripper": {"max_width": 0.04}
}"#;

pub struct Program {
    pub text: String,
    pub root: String,
}

const LIB_ACTIONS: &str = r#"action Move(num h = 0.05) {
  start s;
  end e;
  exec robot.moveCartesian(goal = frame("box", [0, 0, h, 0, 0, 0]));
}

action Look(string obj = "box") {
  start s;
  end e;
  exec perception.localize(object = obj) yields obj.pose := result.pose;
}

action Nudge(num dz = 0.01, vec6 k = [800, 800, 800, 80, 80, 80]) {
  start s;
  end e;
  exec robot.moveCartesian(goal = frame("flange", [0, 0, dz, 0, 0, 0], "link7"), stiffness = k) until robot.pose.z > 0.5;
}
"#;

const GUARDS: &[&str] = &[
    "box.seen",
    "not box.seen",
    "box.pose.z < 0.15",
    "box.pose.x > 0.35 and box.pose.z > 0.05",
    "box.count >= 1 or box.seen",
    "true",
    "not (box.pose.y > 0.001)",
];

struct Gen {
    rng: ChaCha8Rng,
    inline_id: usize,
}

impl Gen {
    fn pick<'a>(&mut self, xs: &'a [&'a str]) -> &'a str {
        xs[self.rng.random_range(0..xs.len())]
    }

    fn num(&mut self, lo: f64, hi: f64) -> f64 {
        let x: f64 = self.rng.random_range(lo..hi);
        (x * 1000.0).round() / 1000.0
    }

    fn inline_action(&mut self, out: &mut String, pad: &str) -> String {
        self.inline_id += 1;
        let name = format!("A{}", self.inline_id);
        let body = match self.rng.random_range(0..6) {
            0 => "exec tool.grip() yields box.seen := result.grasped;".to_string(),
            1 => "exec tool.release() until tool.width >= 0.03;".to_string(),
            2 => "exec perception.localize(object = \"box\") yields box.pose := result.pose;".to_string(),
            3 => format!("exec robot.moveCartesian(goal = frame(\"box\", [0, 0, h + {}, 0, 0, 0]));", self.num(0.0, 0.05)),
            4 => format!(
                "exec robot.moveCartesian(goal = frame(\"flange\", [{}, 0, {}, 0, 0, {}])) until robot.pose.z < {};",
                self.num(-0.03, 0.03),
                self.num(-0.04, 0.04),
                self.num(-0.5, 0.5),
                self.num(0.1, 0.3)
            ),
            _ => format!(
                "exec robot.moveJoint(joints = [{}, 0, 0, 0, 0, 0, {}]);",
                self.num(-0.1, 0.1),
                self.num(-0.2, 0.2)
            ),
        };
        let params = if body.contains(" h + ") { format!("(num h = {})", self.num(0.02, 0.08)) } else { String::new() };
        let ends = if self.rng.random_bool(0.2) { "end e when not box.seen;\n".to_string() + pad + "  end alt when box.seen;" } else { "end e;".into() };
        let _ = write!(out, "{pad}action {name}{params} {{\n{pad}  start s;\n{pad}  {ends}\n{pad}  {body}\n{pad}}}\n");
        name
    }

    /// Writes a skill body (children and transitions). Returns the end
    /// ports it declares besides `e`.
    fn skill(&mut self, name: &str) -> (String, Vec<String>) {
        let mut body = String::new();
        let n = self.rng.random_range(1..=6);
        let mut children: Vec<(String, Vec<String>)> = Vec::new();
        for i in 0..n {
            if self.rng.random_bool(0.5) {
                let alias = format!("c{i}");
                let (target, args) = match self.rng.random_range(0..3) {
                    0 => ("Move", if self.rng.random_bool(0.5) { format!("(h = {})", self.num(0.02, 0.08)) } else { String::new() }),
                    1 => ("Look", String::new()),
                    _ => ("Nudge", format!("(dz = {})", self.num(-0.02, 0.02))),
                };
                let _ = writeln!(body, "  uses {target} as {alias}{args};");
                children.push((alias, Vec::new()));
            } else {
                let mut s = String::new();
                let name = self.inline_action(&mut s, "  ");
                body.push_str(&s);
                let alts = if s.contains("end alt") { vec!["alt".to_string()] } else { Vec::new() };
                children.push((name, alts));
            }
        }
        let mut extra_ends = Vec::new();
        let mut trans = String::new();
        let _ = writeln!(trans, "  on self.s -> {}.s;", children[0].0);
        for i in 0..n {
            let (c, alts) = children[i].clone();
            let next = |j: usize| if j < n { format!("{}.s", children[j].0) } else { "self.e".to_string() };
            if i + 2 <= n && self.rng.random_bool(0.3) {
                let j = self.rng.random_range(i + 2..=n);
                let g = self.pick(GUARDS);
                let _ = writeln!(trans, "  on {c}.e -> {} pre {g};", next(j));
            }
            if self.rng.random_bool(0.15) && extra_ends.is_empty() {
                let g = self.pick(GUARDS);
                let _ = writeln!(trans, "  on {c}.e -> self.done pre {g};");
                extra_ends.push("done".to_string());
            }
            let target = next(i + 1);
            let set = if target.starts_with('c') && children[i + 1].0.starts_with('c') && body.contains(&format!("uses Move as {}", children[i + 1].0)) {
                " set h = lift".to_string()
            } else {
                String::new()
            };
            let post = if self.rng.random_bool(0.1) { " post box.pose.z > 0" } else { "" };
            let _ = writeln!(trans, "  on {c}.e -> {target}{post}{set};");
            for a in alts {
                let _ = writeln!(trans, "  on {c}.{a} -> {target};");
            }
        }
        let mut ports = "  start s;\n  end e;\n".to_string();
        for e in &extra_ends {
            let _ = writeln!(ports, "  end {e};");
        }
        let text = format!("skill {name}(num lift = {}) {{\n{ports}{body}{trans}}}\n", self.num(0.03, 0.07));
        (text, extra_ends)
    }
}

/// A valid program for `seed`; see the module docs.
pub fn program(seed: u64) -> Program {
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), inline_id: 0 };
    let mut text = String::from(LIB_ACTIONS);
    let mut lib: Vec<(String, Vec<String>)> = Vec::new();
    for i in 0..g.rng.random_range(1..=3) {
        let (s, ends) = g.skill(&format!("L{i}"));
        text.push('\n');
        text.push_str(&s);
        lib.push((format!("L{i}"), ends.clone()));
        if g.rng.random_bool(0.4) {
            let guard = g.pick(GUARDS);
            let _ = write!(
                text,
                "\nskill L{i}x(num lift = 0.06) extends L{i} {{\n  end extra;\n  on {}.e -> self.extra pre {guard};\n}}\n",
                first_child(&s)
            );
            let mut e2 = ends.clone();
            e2.push("extra".into());
            lib.push((format!("L{i}x"), e2));
        }
    }
    let n = g.rng.random_range(1..=6);
    let mut kids: Vec<(String, Vec<String>)> = Vec::new();
    let mut body = String::new();
    for i in 0..n {
        if g.rng.random_bool(0.5) {
            let (name, ends) = lib[g.rng.random_range(0..lib.len())].clone();
            let args = if g.rng.random_bool(0.5) { format!("(lift = {})", g.num(0.02, 0.08)) } else { String::new() };
            let _ = writeln!(body, "  uses {name} as k{i}{args};");
            kids.push((format!("k{i}"), ends));
        } else {
            let (s, ends) = g.skill(&format!("S{i}"));
            for line in s.lines() {
                let _ = writeln!(body, "  {line}");
            }
            kids.push((format!("S{i}"), ends));
        }
    }
    let mut trans = format!("  on self.s -> {}.s;\n", kids[0].0);
    for i in 0..n {
        let target = if i + 1 < n { format!("{}.s", kids[i + 1].0) } else { "self.e".into() };
        let (k, ends) = &kids[i];
        let _ = writeln!(trans, "  on {k}.e -> {target};");
        for e in ends {
            let _ = writeln!(trans, "  on {k}.{e} -> {target};");
        }
    }
    let _ = write!(text, "\ntask T {{\n  start s;\n  end e;\n{body}{trans}}}\n");
    Program { text, root: "T".into() }
}

fn first_child(skill_text: &str) -> String {
    let line = skill_text.lines().find(|l| l.trim_start().starts_with("on self.s -> ")).expect("entry transition");
    line.trim().trim_start_matches("on self.s -> ").trim_end_matches(".s;").to_string()
}

// ---- conditions ----

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Val {
    Num(f64),
    Bool(bool),
}

pub const NUM_CHANNELS: &[&str] = &["robot.force.z", "robot.torque.z", "robot.pose.z", "tool.width", "time"];
pub const BOOL_CHANNELS: &[&str] = &["tool.grasped", "robot.converged"];

/// Random condition tree of at most `depth` levels. Atoms mostly name
/// known channels of the right type; a few name unknown channels or use
/// the wrong type so error paths are exercised too.
pub fn random_condition(rng: &mut ChaCha8Rng, depth: u32) -> ConditionExpr {
    if depth == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..20) {
            0..=8 => ConditionExpr::compare(
                NUM_CHANNELS[rng.random_range(0..NUM_CHANNELS.len())],
                CmpOp::ALL[rng.random_range(0..6)],
                (rng.random_range(-20..20) as f64) / 4.0,
            ),
            9..=14 => ConditionExpr::Channel(BOOL_CHANNELS[rng.random_range(0..BOOL_CHANNELS.len())].into()),
            15..=17 => ConditionExpr::Const(rng.random_bool(0.5)),
            18 => ConditionExpr::Channel("robot.force.z".into()),
            _ => ConditionExpr::compare("robot.missing", CmpOp::Lt, 1.0),
        };
    }
    match rng.random_range(0..3) {
        0 => ConditionExpr::and(random_condition(rng, depth - 1), random_condition(rng, depth - 1)),
        1 => ConditionExpr::or(random_condition(rng, depth - 1), random_condition(rng, depth - 1)),
        _ => ConditionExpr::not(random_condition(rng, depth - 1)),
    }
}

pub fn random_valuation(rng: &mut ChaCha8Rng) -> BTreeMap<String, Val> {
    let mut m = BTreeMap::new();
    for c in NUM_CHANNELS {
        m.insert(c.to_string(), Val::Num((rng.random_range(-20..20) as f64) / 4.0));
    }
    for c in BOOL_CHANNELS {
        m.insert(c.to_string(), Val::Bool(rng.random_bool(0.5)));
    }
    m
}

/// Reference evaluator: enumerates every atom's value first, then folds
/// the tree. Any unknown channel or type clash anywhere makes the whole
/// condition an error, matching strict evaluation.
pub fn brute_eval(c: &ConditionExpr, vals: &BTreeMap<String, Val>) -> Option<bool> {
    fn atoms(c: &ConditionExpr, vals: &BTreeMap<String, Val>, ok: &mut bool) {
        match c {
            ConditionExpr::Or(a, b) | ConditionExpr::And(a, b) => {
                atoms(a, vals, ok);
                atoms(b, vals, ok);
            }
            ConditionExpr::Not(a) => atoms(a, vals, ok),
            ConditionExpr::Compare { channel, .. } => *ok &= matches!(vals.get(channel), Some(Val::Num(_))),
            ConditionExpr::Channel(channel) => *ok &= matches!(vals.get(channel), Some(Val::Bool(_))),
            ConditionExpr::Const(_) => {}
        }
    }
    fn fold(c: &ConditionExpr, vals: &BTreeMap<String, Val>) -> bool {
        match c {
            ConditionExpr::Or(a, b) => [fold(a, vals), fold(b, vals)].iter().any(|x| *x),
            ConditionExpr::And(a, b) => [fold(a, vals), fold(b, vals)].iter().all(|x| *x),
            ConditionExpr::Not(a) => !fold(a, vals),
            ConditionExpr::Const(b) => *b,
            ConditionExpr::Channel(ch) => vals[ch] == Val::Bool(true),
            ConditionExpr::Compare { channel, op, value } => {
                let Val::Num(x) = vals[channel] else { unreachable!() };
                match op {
                    CmpOp::Lt => x < *value,
                    CmpOp::Le => x <= *value,
                    CmpOp::Gt => x > *value,
                    CmpOp::Ge => x >= *value,
                    CmpOp::Eq => x == *value,
                    CmpOp::Ne => x != *value,
                }
            }
        }
    }
    let mut ok = true;
    atoms(c, vals, &mut ok);
    ok.then(|| fold(c, vals))
}
