//! Execution trace events, their JSONL form, and a validator that replays
//! a trace against the configuration and ordering rules.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Entered,
    ExecBegun,
    StopTriggered,
    PreEvaluated,
    EmUpdated,
    PostEvaluated,
    TransitionFired,
    Finished,
    RunResult,
}

/// One line of a trace file. Field order is fixed: seq, tick, kind,
/// subject, data. Keys inside `data` are sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub tick: u64,
    pub kind: EventKind,
    /// Instance path such as `ScrewTask.screw.ScrewDown`.
    pub subject: String,
    pub data: Json,
}

impl TraceEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace events serialize")
    }

    fn str_field(&self, key: &str) -> Option<&str> {
        self.data.get(key).and_then(Json::as_str)
    }

    fn index(&self) -> Option<u64> {
        self.data.get("index").and_then(Json::as_u64)
    }

    fn result(&self) -> Option<bool> {
        self.data.get("result").and_then(Json::as_bool)
    }
}

pub fn write_jsonl(events: &[TraceEvent], mut out: impl Write) -> io::Result<()> {
    for e in events {
        writeln!(out, "{}", e.to_json_line())?;
    }
    Ok(())
}

pub fn to_jsonl(events: &[TraceEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&e.to_json_line());
        s.push('\n');
    }
    s
}

pub fn read_jsonl(text: &str) -> Result<Vec<TraceEvent>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

fn parent_of(path: &str) -> Option<&str> {
    path.rsplit_once('.').map(|(p, _)| p)
}

#[derive(Debug, Clone, PartialEq)]
enum Phase {
    /// Pre held; update bindings may follow.
    Pre,
    /// Post evaluated; the firing completes next.
    Post(bool),
}

#[derive(Debug, Clone)]
struct Firing {
    owner: String,
    index: u64,
    phase: Phase,
}

/// Incremental trace checker.
///
/// Rebuilds the active configuration (root to leaf) from `Entered` and
/// `TransitionFired` events and checks that every event's subject is where
/// the configuration says it must be, that `seq` is contiguous from 0, that
/// `EmUpdated` falls strictly between the `PreEvaluated` and
/// `PostEvaluated` of its firing, and that `RunResult` comes last.
#[derive(Debug, Default)]
pub struct TraceValidator {
    next_seq: u64,
    stack: Vec<String>,
    firing: Option<Firing>,
    done: bool,
}

impl TraceValidator {
    pub fn new() -> TraceValidator {
        TraceValidator::default()
    }

    pub fn push(&mut self, e: &TraceEvent) -> Result<(), String> {
        let at = |msg: String| format!("seq {}: {msg}", e.seq);
        if self.done {
            return Err(at("event after RunResult".into()));
        }
        if e.seq != self.next_seq {
            return Err(at(format!("expected seq {}", self.next_seq)));
        }
        self.next_seq += 1;
        let top = self.stack.last().cloned();
        match e.kind {
            EventKind::Entered => {
                match &top {
                    None => {}
                    Some(t) if parent_of(&e.subject) == Some(t.as_str()) => {}
                    Some(t) => return Err(at(format!("entered `{}` while `{t}` is active", e.subject))),
                }
                if self.firing.is_some() && !self.stack.is_empty() {
                    return Err(at("entered a child while a transition is still open".into()));
                }
                self.stack.push(e.subject.clone());
            }
            EventKind::ExecBegun | EventKind::StopTriggered => {
                if top.as_deref() != Some(e.subject.as_str()) {
                    return Err(at(format!("`{}` is not the active leaf", e.subject)));
                }
            }
            EventKind::PreEvaluated => {
                self.check_owner(&e.subject, top.as_deref()).map_err(at)?;
                if let Some(f) = &self.firing {
                    return Err(at(format!("transition {} of `{}` still open", f.index, f.owner)));
                }
                if e.result() == Some(true) {
                    self.firing = Some(Firing {
                        owner: e.subject.clone(),
                        index: e.index().unwrap_or(u64::MAX),
                        phase: Phase::Pre,
                    });
                }
            }
            EventKind::EmUpdated => match &self.firing {
                Some(Firing { phase: Phase::Pre, .. }) => {
                    if top.as_deref() != Some(e.subject.as_str()) {
                        return Err(at(format!("update from `{}` which has not just finished", e.subject)));
                    }
                }
                Some(_) => return Err(at("EmUpdated after PostEvaluated".into())),
                None if self.stack.len() == 1 && top.as_deref() == Some(e.subject.as_str()) => {}
                None => return Err(at("EmUpdated outside a transition".into())),
            },
            EventKind::PostEvaluated => match &mut self.firing {
                Some(f) if f.phase == Phase::Pre && f.owner == e.subject && Some(f.index) == e.index() => {
                    f.phase = Phase::Post(e.result() == Some(true));
                }
                _ => return Err(at("PostEvaluated without a matching PreEvaluated".into())),
            },
            EventKind::TransitionFired => {
                match self.firing.take() {
                    Some(Firing { phase: Phase::Post(true), owner, index })
                        if owner == e.subject && Some(index) == e.index() => {}
                    _ => return Err(at("TransitionFired without passing pre and post".into())),
                }
                let source = e.str_field("source").unwrap_or("");
                if !source.starts_with("self.") {
                    let alias = source.split('.').next().unwrap_or("");
                    let expected = format!("{}.{alias}", e.subject);
                    if top.as_deref() != Some(expected.as_str()) {
                        return Err(at(format!("fired from `{source}` but `{}` is active", top.unwrap_or_default())));
                    }
                    self.stack.pop();
                }
            }
            EventKind::Finished => {
                if let Some(f) = self.firing.take() {
                    if f.phase != Phase::Post(false) {
                        return Err(at("Finished while a transition is open".into()));
                    }
                    if self.stack.last().and_then(|t| parent_of(t)) == Some(e.subject.as_str()) {
                        self.stack.pop();
                    }
                }
                if self.stack.last().map(String::as_str) != Some(e.subject.as_str()) {
                    return Err(at(format!("`{}` finished but is not active", e.subject)));
                }
            }
            EventKind::RunResult => {
                if let Some(root) = self.stack.first() {
                    if *root != e.subject {
                        return Err(at(format!("RunResult subject `{}` is not the root `{root}`", e.subject)));
                    }
                }
                self.firing = None;
                self.done = true;
            }
        }
        Ok(())
    }

    fn check_owner(&self, subject: &str, top: Option<&str>) -> Result<(), String> {
        match top {
            Some(t) if t == subject => Ok(()),
            Some(t) if parent_of(t) == Some(subject) => Ok(()),
            _ => Err(format!("`{subject}` does not own the active configuration")),
        }
    }

    pub fn finish(&self) -> Result<(), String> {
        if self.done {
            Ok(())
        } else {
            Err("trace has no RunResult".into())
        }
    }
}

pub fn validate_trace(events: &[TraceEvent]) -> Result<(), String> {
    let mut v = TraceValidator::new();
    for e in events {
        v.push(e)?;
    }
    v.finish()
}

/// Counts firings that break `PreEvaluated < EmUpdated* < PostEvaluated`.
pub fn ordering_violations(events: &[TraceEvent]) -> usize {
    let mut violations = 0;
    let mut open: Option<(String, u64, bool)> = None;
    for e in events {
        match e.kind {
            EventKind::PreEvaluated if e.result() == Some(true) => {
                open = Some((e.subject.clone(), e.index().unwrap_or(0), false));
            }
            EventKind::EmUpdated => match &open {
                Some((_, _, false)) => {}
                // Root-leaf completion applies updates without a firing.
                None if events.last().map(|l| l.kind) == Some(EventKind::RunResult) => {}
                _ => violations += 1,
            },
            EventKind::PostEvaluated => match &mut open {
                Some((owner, idx, post)) if *owner == e.subject && Some(*idx) == e.index() && !*post => *post = true,
                _ => violations += 1,
            },
            EventKind::TransitionFired => match open.take() {
                Some((_, _, true)) => {}
                _ => violations += 1,
            },
            EventKind::Finished | EventKind::RunResult => {
                open = None;
            }
            _ => {}
        }
    }
    violations
}

/// Per-instance entry counts and stop reasons.
pub fn summary(events: &[TraceEvent]) -> String {
    let mut entries: BTreeMap<&str, usize> = BTreeMap::new();
    let mut stops: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
    let mut result = None;
    for e in events {
        match e.kind {
            EventKind::Entered => *entries.entry(&e.subject).or_default() += 1,
            EventKind::StopTriggered => {
                let reason = e.str_field("reason").unwrap_or("?").to_string();
                *stops.entry(&e.subject).or_default().entry(reason).or_default() += 1;
            }
            EventKind::RunResult => result = Some(e),
            _ => {}
        }
    }
    let mut out = String::new();
    for (subject, n) in &entries {
        let _ = write!(out, "{subject} entered={n}");
        if let Some(r) = stops.get(subject) {
            let reasons: Vec<String> = r.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            let _ = write!(out, " stops={}", reasons.join(","));
        }
        out.push('\n');
    }
    if let Some(r) = result {
        let status = r.str_field("status").unwrap_or("?");
        let _ = writeln!(out, "result {status} ticks={}", r.tick);
    }
    out
}
