//! Hierarchical interpreter for component trees.
//!
//! A run keeps a stack of active instances from the root down to the
//! running leaf. Each [`RunState::step`] does one of three things: descend
//! from a start port to a leaf and begin its device command, advance the
//! running command by one tick, or leave a finished child through one of
//! the parent's transitions. Every observable effect is a [`TraceEvent`].

pub mod cond;
pub mod trace;

pub use cond::{channel_value, eval_condition, CondError};
pub use trace::{
    ordering_violations, read_jsonl, summary, to_jsonl, validate_trace, write_jsonl, EventKind, TraceEvent,
    TraceValidator,
};

use crate::devices::{build_command, Adapter, CommandSession, ResultRecord, Sample, SimRig, Snapshot, StopReason};
use crate::model::{Child, Component, ConditionExpr, Endpoint, Env, Model, Owner, ParamType, PortKind, Value};
use crate::world::{Attr, EnvironmentalModel, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value as Json};
use std::fmt;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub max_ticks: u64,
    /// Seconds per tick.
    pub dt: f64,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits { max_ticks: 100_000, dt: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Success,
    Deadlock,
    Timeout,
    Fault,
    PostconditionFailed,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Success => "Success",
            Status::Deadlock => "Deadlock",
            Status::Timeout => "Timeout",
            Status::Fault => "Fault",
            Status::PostconditionFailed => "PostconditionFailed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: Status,
    pub ticks: u64,
    /// End port of the root on success.
    pub end: Option<String>,
    pub message: Option<String>,
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "outcome={} ticks={} end={}", self.status, self.ticks, self.end.as_deref().unwrap_or("-"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("unknown component `{0}`")]
    UnknownRoot(String),
    #[error("parameter `{0}` of the root has no default")]
    MissingDefault(String),
    #[error("no start port of `{0}` is connected and enabled")]
    NoEnabledStart(String),
    #[error("start condition of `{0}`: {1}")]
    Condition(String, CondError),
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
enum FrameStatus {
    AtStart(String),
    InChild,
    Leaf(Box<CommandSession>),
    AtEnd { port: String, result: Option<ResultRecord> },
}

#[derive(Debug)]
struct Frame<'m> {
    path: String,
    def: &'m Component,
    ns: &'m str,
    env: Env,
    status: FrameStatus,
}

enum Fail {
    Stop(Status, String),
}

type Step<T> = Result<T, Fail>;

fn fault(msg: impl Into<String>) -> Fail {
    Fail::Stop(Status::Fault, msg.into())
}

fn child_def<'m>(model: &'m Model, ns: &'m str, ch: &'m Child) -> Option<(&'m Component, &'m str)> {
    match ch {
        Child::Inline(c) => Some((c, ns)),
        Child::Reference(r) => model.lookup(ns, &r.target).map(|(_, d, ns)| (d, ns)),
    }
}

fn count_instances(model: &Model, def: &Component, ns: &str, depth: usize) -> usize {
    if depth > 64 {
        return 1;
    }
    1 + def
        .children
        .iter()
        .filter_map(|ch| child_def(model, ns, ch))
        .map(|(d, ns)| count_instances(model, d, ns, depth + 1))
        .sum::<usize>()
}

fn snapshot_json(s: &Snapshot) -> Json {
    Json::Object(
        s.iter()
            .map(|(k, v)| {
                let v = match v {
                    Sample::Num(x) => json!(x),
                    Sample::Bool(b) => json!(b),
                };
                (k.clone(), v)
            })
            .collect(),
    )
}

fn attr_json(a: &Attr) -> Json {
    match a {
        Attr::Num(x) => json!(x),
        Attr::Bool(b) => json!(b),
        Attr::Str(s) => json!(s),
        Attr::Transform(t) => json!(t.to_vec6()),
    }
}

/// A run in progress.
pub struct RunState<'m, A: Adapter = SimRig> {
    model: &'m Model,
    adapter: A,
    em: EnvironmentalModel,
    rng: ChaCha8Rng,
    limits: Limits,
    stack: Vec<Frame<'m>>,
    snapshot: Snapshot,
    tick: u64,
    seq: u64,
    out: Vec<TraceEvent>,
    outcome: Option<RunOutcome>,
    idle: u64,
    idle_limit: u64,
}

/// Starts a run of `root` against a simulated rig built from `world`.
pub fn init_run<'m>(
    model: &'m Model,
    root: &str,
    world: &World,
    seed: u64,
    limits: Limits,
) -> Result<RunState<'m, SimRig>, RunError> {
    init_run_with(model, root, world.em.clone(), SimRig::new(world), seed, limits)
}

/// Starts a run with any adapter. `em` is the belief model the program
/// reads and updates.
pub fn init_run_with<'m, A: Adapter>(
    model: &'m Model,
    root: &str,
    em: EnvironmentalModel,
    adapter: A,
    seed: u64,
    limits: Limits,
) -> Result<RunState<'m, A>, RunError> {
    let (_, def, ns) = model.lookup("", root).ok_or_else(|| RunError::UnknownRoot(root.into()))?;
    if let Some(p) = def.params.iter().find(|p| p.default.is_none()) {
        return Err(RunError::MissingDefault(p.name.clone()));
    }
    let mut st = RunState {
        model,
        adapter,
        em,
        rng: ChaCha8Rng::seed_from_u64(seed),
        limits,
        stack: Vec::new(),
        snapshot: Snapshot::new(),
        tick: 0,
        seq: 0,
        out: Vec::new(),
        outcome: None,
        idle: 0,
        idle_limit: 10 * count_instances(model, def, ns, 0) as u64,
    };
    let mut chosen = None;
    for p in def.starts() {
        let connected = def.is_leaf()
            || def.transitions.iter().any(|t| t.source == Endpoint::own(&p.name));
        if !connected {
            continue;
        }
        let ok = st.holds(p.guard.as_ref()).map_err(|e| RunError::Condition(def.name.clone(), e))?;
        if ok {
            chosen = Some(p.name.clone());
            break;
        }
    }
    let port = chosen.ok_or_else(|| RunError::NoEnabledStart(def.name.clone()))?;
    let path = def.name.clone();
    st.emit(EventKind::Entered, &path, json!({"port": port}));
    st.stack.push(Frame { path, def, ns, env: def.default_env(), status: FrameStatus::AtStart(port) });
    Ok(st)
}

impl<'m, A: Adapter> RunState<'m, A> {
    pub fn em(&self) -> &EnvironmentalModel {
        &self.em
    }

    pub fn rig(&self) -> &A {
        &self.adapter
    }

    pub fn outcome(&self) -> Option<&RunOutcome> {
        self.outcome.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    /// Instance paths from the root to the innermost active instance.
    pub fn active(&self) -> Vec<&str> {
        self.stack.iter().map(|f| f.path.as_str()).collect()
    }

    fn emit(&mut self, kind: EventKind, subject: &str, data: Json) {
        self.out.push(TraceEvent { seq: self.seq, tick: self.tick, kind, subject: subject.into(), data });
        self.seq += 1;
    }

    fn holds(&self, c: Option<&ConditionExpr>) -> Result<bool, CondError> {
        match c {
            None => Ok(true),
            Some(c) => eval_condition(c, &self.snapshot, &self.em),
        }
    }

    fn check(&self, c: Option<&ConditionExpr>, what: &str) -> Step<bool> {
        self.holds(c).map_err(|e| fault(format!("{what}: {e}")))
    }

    /// Runs one step and returns the events it produced. Returns nothing
    /// once the run has ended.
    pub fn step(&mut self) -> Vec<TraceEvent> {
        if self.outcome.is_some() {
            return std::mem::take(&mut self.out);
        }
        let top = self.stack.last().expect("active run has a root");
        let executing = matches!(top.status, FrameStatus::Leaf(_));
        let r = match &top.status {
            FrameStatus::AtStart(_) => self.descend(),
            FrameStatus::Leaf(_) => self.execute(),
            FrameStatus::AtEnd { .. } => self.transition(),
            FrameStatus::InChild => unreachable!("top frame is never waiting on a child"),
        };
        if executing {
            self.idle = 0;
        } else {
            self.idle += 1;
        }
        match r {
            Err(Fail::Stop(status, msg)) => self.finish(status, None, Some(msg)),
            Ok(()) if self.outcome.is_none() && self.idle > self.idle_limit => {
                self.finish(Status::Fault, None, Some("livelock: no device progress".into()))
            }
            Ok(()) => {}
        }
        std::mem::take(&mut self.out)
    }

    fn finish(&mut self, status: Status, end: Option<String>, message: Option<String>) {
        let root = self.stack.first().map(|f| f.path.clone()).unwrap_or_default();
        let mut data = json!({"status": status.to_string()});
        if let Some(e) = &end {
            data["end"] = json!(e);
        }
        if let Some(m) = &message {
            data["message"] = json!(m);
        }
        self.emit(EventKind::RunResult, &root, data);
        self.outcome = Some(RunOutcome { status, ticks: self.tick, end, message });
    }

    fn target_guard(&self, owner: &Frame<'m>, target: &Endpoint) -> Option<&'m ConditionExpr> {
        match &target.owner {
            Owner::SelfRef => owner.def.port(&target.port).and_then(|p| p.guard.as_ref()),
            Owner::Child(a) => owner
                .def
                .child(a)
                .and_then(|ch| child_def(self.model, owner.ns, ch))
                .and_then(|(d, _)| d.port(&target.port))
                .and_then(|p| p.guard.as_ref()),
        }
    }

    /// Emits `PreEvaluated` for each candidate leaving `source` of frame
    /// `owner` until one is enabled.
    fn select(&mut self, owner: usize, source: &Endpoint) -> Step<Option<usize>> {
        let f = &self.stack[owner];
        let (def, path) = (f.def, f.path.clone());
        for (i, t) in def.transitions.iter().enumerate() {
            if t.source != *source {
                continue;
            }
            let label = t.label();
            let pre = self.check(t.pre.as_ref(), &format!("pre of `{label}`"))?;
            let guard = self.target_guard(&self.stack[owner], &t.target);
            let ok = pre && self.check(guard, &format!("guard of `{}`", t.target))?;
            self.emit(EventKind::PreEvaluated, &path, json!({"index": i, "transition": label, "result": ok}));
            if ok {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Post check and firing of transition `index` of frame `owner`. The
    /// finished child, if any, is still on the stack.
    fn fire(&mut self, owner: usize, index: usize) -> Step<()> {
        let f = &self.stack[owner];
        let (def, path) = (f.def, f.path.clone());
        let t = &def.transitions[index];
        let label = t.label();
        let post = self.check(t.post.as_ref(), &format!("post of `{label}`"))?;
        self.emit(EventKind::PostEvaluated, &path, json!({"index": index, "transition": label, "result": post}));
        if !post {
            self.stack.truncate(owner + 1);
            if def.port("fault").is_some_and(|p| p.kind == PortKind::End) {
                self.stack[owner].status = FrameStatus::AtEnd { port: "fault".into(), result: None };
                self.emit(EventKind::Finished, &path, json!({"port": "fault"}));
                return Ok(());
            }
            return Err(Fail::Stop(Status::PostconditionFailed, format!("post of `{label}` in `{path}` is false")));
        }
        self.emit(
            EventKind::TransitionFired,
            &path,
            json!({"index": index, "source": t.source.to_string(), "target": t.target.to_string()}),
        );
        self.stack.truncate(owner + 1);
        match &t.target.owner {
            Owner::SelfRef => {
                self.stack[owner].status = FrameStatus::AtEnd { port: t.target.port.clone(), result: None };
                self.emit(EventKind::Finished, &path, json!({"port": t.target.port}));
            }
            Owner::Child(alias) => {
                let parent = &self.stack[owner];
                let ch = def.child(alias).ok_or_else(|| fault(format!("no child `{alias}` in `{path}`")))?;
                let (cdef, cns) = child_def(self.model, parent.ns, ch)
                    .ok_or_else(|| fault(format!("child `{alias}` of `{path}` is unresolved")))?;
                let mut env = cdef.default_env();
                let bind = |env: &mut Env, name: &str, e: &crate::model::Expr| -> Step<()> {
                    let v = e.eval(&parent.env).map_err(|err| fault(format!("binding `{name}` of `{alias}`: {err}")))?;
                    env.insert(name.to_string(), v);
                    Ok(())
                };
                if let Child::Reference(r) = ch {
                    for a in &r.args {
                        bind(&mut env, &a.name, &a.value)?;
                    }
                }
                for b in &t.bindings {
                    bind(&mut env, &b.name, &b.value)?;
                }
                let cpath = format!("{path}.{alias}");
                self.stack[owner].status = FrameStatus::InChild;
                self.emit(EventKind::Entered, &cpath, json!({"port": t.target.port}));
                self.stack.push(Frame {
                    path: cpath,
                    def: cdef,
                    ns: cns,
                    env,
                    status: FrameStatus::AtStart(t.target.port.clone()),
                });
            }
        }
        Ok(())
    }

    fn descend(&mut self) -> Step<()> {
        loop {
            let top = self.stack.len() - 1;
            let f = &self.stack[top];
            let FrameStatus::AtStart(port) = &f.status else { return Ok(()) };
            if let Some(call) = &f.def.exec {
                let cmd = build_command(call, &f.env).map_err(|e| fault(format!("`{}`: {e}", f.path)))?;
                let path = f.path.clone();
                let session = self
                    .adapter
                    .begin(cmd, &self.em, &mut self.rng)
                    .map_err(|e| fault(format!("`{path}`: {e}")))?;
                for (k, v) in session.last_snapshot() {
                    self.snapshot.insert(k.clone(), *v);
                }
                self.emit(EventKind::ExecBegun, &path, json!({"command": format!("{}.{}", call.device, call.command)}));
                self.stack[top].status = FrameStatus::Leaf(Box::new(session));
                return Ok(());
            }
            let source = Endpoint::own(port);
            let path = f.path.clone();
            match self.select(top, &source)? {
                Some(i) => self.fire(top, i)?,
                None => return Err(Fail::Stop(Status::Deadlock, format!("no transition leaves `{path}.{}`", source.port))),
            }
            if !matches!(self.stack.last().map(|f| &f.status), Some(FrameStatus::AtStart(_))) {
                return Ok(());
            }
        }
    }

    fn execute(&mut self) -> Step<()> {
        let top = self.stack.len() - 1;
        let f = &mut self.stack[top];
        let FrameStatus::Leaf(session) = &mut f.status else { unreachable!() };
        self.tick += 1;
        let snap = self.adapter.tick(session, self.limits.dt).map_err(|e| fault(format!("`{}`: {e}", f.path)))?;
        self.snapshot.extend(snap);
        let def = f.def;
        let path = f.path.clone();
        let stop = def.exec.as_ref().and_then(|e| e.stop.as_ref());
        let reason = if stop.is_some() && self.check(stop, &format!("stop condition of `{path}`"))? {
            Some(StopReason::Condition)
        } else {
            let FrameStatus::Leaf(session) = &self.stack[top].status else { unreachable!() };
            session.self_stop()
        };
        let timeout = reason.is_none() && self.tick >= self.limits.max_ticks;
        let Some(reason) = reason.or(timeout.then_some(StopReason::Timeout)) else { return Ok(()) };
        let mut port = None;
        for p in def.ends() {
            if self.check(p.guard.as_ref(), &format!("guard of `{path}.{}`", p.name))? {
                port = Some(p.name.clone());
                break;
            }
        }
        let port = port
            .or_else(|| def.ends().next().map(|p| p.name.clone()))
            .ok_or_else(|| fault(format!("`{path}` has no end port")))?;
        let FrameStatus::Leaf(session) = &mut self.stack[top].status else { unreachable!() };
        let result = self.adapter.stop(session, reason);
        let data = json!({"reason": reason.as_str(), "port": port, "snapshot": snapshot_json(&self.snapshot)});
        self.emit(EventKind::StopTriggered, &path, data);
        if timeout {
            return Err(Fail::Stop(Status::Timeout, format!("tick limit {} reached", self.limits.max_ticks)));
        }
        self.stack[top].status = FrameStatus::AtEnd { port, result: Some(result) };
        Ok(())
    }

    /// Applies the update bindings of the finished leaf on top of the stack.
    fn apply_updates(&mut self) -> Step<()> {
        let f = self.stack.last().expect("frame");
        let FrameStatus::AtEnd { result: Some(result), .. } = &f.status else { return Ok(()) };
        let Some(call) = &f.def.exec else { return Ok(()) };
        let mut writes = Vec::new();
        for u in &call.updates {
            let mut segs = u.em_path.clone();
            if let Some(Value::Str(s)) = f.env.get(&segs[0]) {
                if f.def.param(&segs[0]).is_some_and(|p| p.ptype == ParamType::Str) {
                    segs[0] = s.clone();
                }
            }
            let v = result
                .get(&u.field)
                .cloned()
                .ok_or_else(|| fault(format!("`{}`: result has no field `{}`", f.path, u.field)))?;
            writes.push((segs, v));
        }
        let path = f.path.clone();
        for (segs, v) in writes {
            let shown = attr_json(&v);
            self.em.apply_update(&segs, v).map_err(|e| fault(format!("`{path}`: update `{}`: {e}", segs.join("."))))?;
            let revision = self.em.revision();
            self.emit(
                EventKind::EmUpdated,
                &path,
                json!({"path": segs.join("."), "revision": revision, "value": shown}),
            );
        }
        Ok(())
    }

    fn transition(&mut self) -> Step<()> {
        let top = self.stack.len() - 1;
        let FrameStatus::AtEnd { port, .. } = &self.stack[top].status else { unreachable!() };
        let port = port.clone();
        if top == 0 {
            self.apply_updates()?;
            self.finish(Status::Success, Some(port), None);
            return Ok(());
        }
        let alias = self.stack[top].path.rsplit('.').next().expect("child path").to_string();
        let source = Endpoint::child(&alias, &port);
        let Some(i) = self.select(top - 1, &source)? else {
            let path = self.stack[top].path.clone();
            return Err(Fail::Stop(Status::Deadlock, format!("no transition leaves `{path}.{port}`")));
        };
        self.apply_updates()?;
        self.fire(top - 1, i)
    }

    /// Runs until the outcome is known, returning every event.
    pub fn run_to_end(&mut self) -> (RunOutcome, Vec<TraceEvent>) {
        let mut events = Vec::new();
        while !self.is_done() {
            events.extend(self.step());
        }
        events.extend(self.step());
        (self.outcome.clone().expect("finished"), events)
    }

    /// Runs to the end, writing JSONL to `out` and checking each event as
    /// it is produced.
    pub fn run_streaming(&mut self, mut out: impl Write) -> Result<RunOutcome, RunError> {
        let mut v = TraceValidator::new();
        loop {
            let done = self.is_done();
            for e in self.step() {
                v.push(&e).map_err(RunError::Trace)?;
                writeln!(out, "{}", e.to_json_line())?;
            }
            if done {
                break;
            }
        }
        v.finish().map_err(RunError::Trace)?;
        Ok(self.outcome.clone().expect("finished"))
    }
}

/// Parses, validates and runs `root` in one call, for tests and examples.
pub fn run_source(
    text: &str,
    root: &str,
    world: &World,
    seed: u64,
    limits: Limits,
) -> Result<(RunOutcome, Vec<TraceEvent>), String> {
    let src = crate::model::MemSources::new().with("main.lr", text);
    let (model, diags) =
        crate::model::load(std::path::Path::new("main.lr"), &[], &src, crate::model::Profile::Standard);
    if crate::diag::has_errors(&diags) {
        return Err(diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"));
    }
    let mut st = init_run(&model, root, world, seed, limits).map_err(|e| e.to_string())?;
    Ok(st.run_to_end())
}
