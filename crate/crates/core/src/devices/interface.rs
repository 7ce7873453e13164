//! Command signatures of the three devices and conversion of `exec` clauses
//! into typed commands.

use super::DeviceError;
use crate::diag::{Code, Diagnostic};
use crate::model::{DeviceCall, Env, EvalError, FrameValue, Value, ValueType};
use crate::world::Transform;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceKind {
    Robot,
    Tool,
    Perception,
}

impl DeviceKind {
    pub fn name(self) -> &'static str {
        match self {
            DeviceKind::Robot => "robot",
            DeviceKind::Tool => "tool",
            DeviceKind::Perception => "perception",
        }
    }

    pub fn from_name(s: &str) -> Option<DeviceKind> {
        match s {
            "robot" => Some(DeviceKind::Robot),
            "tool" => Some(DeviceKind::Tool),
            "perception" => Some(DeviceKind::Perception),
            _ => None,
        }
    }
}

/// `TF := {T, Ref, Link}`. Wrenches are reported in this frame; `link` is
/// carried but never interpreted.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskFrame {
    pub t: Transform,
    pub reference: String,
    pub link: Option<String>,
}

/// `GF := {T, Ref}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalFrame {
    pub t: Transform,
    pub reference: String,
    /// Offset as written, kept so flange-relative rotations beyond pi survive.
    pub offset: [f64; 6],
}

/// Stiffness (N/m, Nm/rad) and damping ratios per task-frame axis. Damping
/// is recorded only; the simulation has no velocity state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceParams {
    pub stiffness: [f64; 6],
    pub damping: [f64; 6],
}

pub const DEFAULT_STIFFNESS: [f64; 6] = [1000.0, 1000.0, 1000.0, 100.0, 100.0, 100.0];
pub const DEFAULT_DAMPING: [f64; 6] = [0.7; 6];

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum MotionCommand {
    Cartesian { tf: TaskFrame, gf: GoalFrame, imp: ImpedanceParams },
    /// Joint impedance is accepted and ignored: joint moves track rigidly.
    Joint { jv: [f64; 7], stiffness: [f64; 7], damping: [f64; 7] },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ToolCommand {
    Grip,
    Release,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PerceiveCommand {
    Localize { object: String },
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Robot(MotionCommand),
    Tool(ToolCommand),
    Perception(PerceiveCommand),
}

impl Command {
    pub fn device(&self) -> DeviceKind {
        match self {
            Command::Robot(_) => DeviceKind::Robot,
            Command::Tool(_) => DeviceKind::Tool,
            Command::Perception(_) => DeviceKind::Perception,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgSpec {
    pub name: &'static str,
    pub ty: ValueType,
    pub required: bool,
}

/// Arguments and result fields of one device command.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub device: DeviceKind,
    pub command: &'static str,
    pub args: Vec<ArgSpec>,
    /// Result field name and its type name.
    pub results: Vec<(&'static str, &'static str)>,
}

const ROBOT_RESULTS: [(&str, &str); 8] = [
    ("pose", "transform"),
    ("fx", "num"),
    ("fy", "num"),
    ("fz", "num"),
    ("tx", "num"),
    ("ty", "num"),
    ("tz", "num"),
    ("converged", "bool"),
];

fn arg(name: &'static str, ty: ValueType, required: bool) -> ArgSpec {
    ArgSpec { name, ty, required }
}

pub fn signature(device: &str, command: &str) -> Option<Signature> {
    let device = DeviceKind::from_name(device)?;
    let (command, args, results): (&'static str, Vec<ArgSpec>, Vec<(&str, &str)>) = match (device, command) {
        (DeviceKind::Robot, "moveCartesian") => (
            "moveCartesian",
            vec![
                arg("goal", ValueType::Frame, true),
                arg("task", ValueType::Frame, false),
                arg("stiffness", ValueType::Vec(6), false),
                arg("damping", ValueType::Vec(6), false),
            ],
            ROBOT_RESULTS.to_vec(),
        ),
        (DeviceKind::Robot, "moveJoint") => (
            "moveJoint",
            vec![
                arg("joints", ValueType::Vec(7), true),
                arg("stiffness", ValueType::Vec(7), false),
                arg("damping", ValueType::Vec(7), false),
            ],
            ROBOT_RESULTS.to_vec(),
        ),
        (DeviceKind::Tool, "grip") => ("grip", vec![], vec![("width", "num"), ("grasped", "bool")]),
        (DeviceKind::Tool, "release") => ("release", vec![], vec![("width", "num"), ("grasped", "bool")]),
        (DeviceKind::Perception, "localize") => {
            ("localize", vec![arg("object", ValueType::Str, true)], vec![("pose", "transform")])
        }
        _ => return None,
    };
    Some(Signature { device, command, args, results })
}

/// Static checks of an `exec` clause: E012 for the call itself, E013 for
/// update bindings, E014 for unknown parameters in arguments.
pub fn check_call(call: &DeviceCall, scope: &BTreeMap<String, ValueType>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let Some(sig) = signature(&call.device, &call.command) else {
        let msg = if DeviceKind::from_name(&call.device).is_none() {
            format!("unknown device `{}` (expected robot, tool or perception)", call.device)
        } else {
            format!("device `{}` has no command `{}`", call.device, call.command)
        };
        out.push(Diagnostic::new(Code::E012, call.span.clone(), msg));
        return out;
    };
    let mut seen = BTreeSet::new();
    for a in &call.args {
        if !seen.insert(a.name.as_str()) {
            out.push(Diagnostic::new(Code::E012, a.span.clone(), format!("argument `{}` given twice", a.name)));
            continue;
        }
        let Some(spec) = sig.args.iter().find(|s| s.name == a.name) else {
            out.push(Diagnostic::new(
                Code::E012,
                a.span.clone(),
                format!("`{}.{}` has no argument `{}`", call.device, call.command, a.name),
            ));
            continue;
        };
        match a.value.type_of(scope) {
            Ok(t) if t == spec.ty => {}
            Ok(t) => out.push(Diagnostic::new(
                Code::E012,
                a.span.clone(),
                format!("argument `{}` expects {}, found {}", a.name, spec.ty, t),
            )),
            Err(EvalError::UnknownParam(p)) => {
                out.push(Diagnostic::new(Code::E014, a.span.clone(), format!("unknown parameter `{p}`")))
            }
            Err(e) => out.push(Diagnostic::new(Code::E012, a.span.clone(), format!("argument `{}`: {e}", a.name))),
        }
    }
    for spec in sig.args.iter().filter(|s| s.required) {
        if !seen.contains(spec.name) {
            out.push(Diagnostic::new(
                Code::E012,
                call.span.clone(),
                format!("`{}.{}` requires argument `{}`", call.device, call.command, spec.name),
            ));
        }
    }
    for u in &call.updates {
        if u.em_path.len() < 2 {
            out.push(Diagnostic::new(
                Code::E013,
                u.span.clone(),
                format!("update path `{}` needs an object and an attribute", u.path_string()),
            ));
        }
        if !sig.results.iter().any(|(f, _)| *f == u.field) {
            let fields = sig.results.iter().map(|(f, _)| *f).collect::<Vec<_>>().join(", ");
            out.push(Diagnostic::new(
                Code::E013,
                u.span.clone(),
                format!("`{}.{}` has no result field `{}` (available: {fields})", call.device, call.command, u.field),
            ));
        }
    }
    out
}

fn malformed(msg: impl Into<String>) -> DeviceError {
    DeviceError::MalformedCommand(msg.into())
}

fn fixed<const N: usize>(name: &str, v: &Value) -> Result<[f64; N], DeviceError> {
    match v {
        Value::Vec(items) if items.len() == N => {
            let mut out = [0.0; N];
            out.copy_from_slice(items);
            Ok(out)
        }
        other => Err(malformed(format!("`{name}` expects vec{N}, found {}", other.value_type()))),
    }
}

fn frame(name: &str, v: &Value) -> Result<FrameValue, DeviceError> {
    match v {
        Value::Frame(f) => Ok(f.clone()),
        other => Err(malformed(format!("`{name}` expects frame, found {}", other.value_type()))),
    }
}

/// Evaluates the arguments of `call` in `env` and builds the command.
pub fn build_command(call: &DeviceCall, env: &Env) -> Result<Command, DeviceError> {
    let sig = signature(&call.device, &call.command)
        .ok_or_else(|| malformed(format!("unknown command `{}.{}`", call.device, call.command)))?;
    let mut args: BTreeMap<&str, Value> = BTreeMap::new();
    for a in &call.args {
        if !sig.args.iter().any(|s| s.name == a.name) {
            return Err(malformed(format!("unknown argument `{}`", a.name)));
        }
        let v = a.value.eval(env).map_err(|e| malformed(format!("argument `{}`: {e}", a.name)))?;
        args.insert(a.name.as_str(), v);
    }
    for spec in sig.args.iter().filter(|s| s.required) {
        if !args.contains_key(spec.name) {
            return Err(malformed(format!("missing argument `{}`", spec.name)));
        }
    }
    Ok(match (sig.device, sig.command) {
        (DeviceKind::Robot, "moveCartesian") => {
            let goal = frame("goal", &args["goal"])?;
            let task = match args.get("task") {
                Some(v) => frame("task", v)?,
                None => FrameValue { reference: "world".into(), offset: [0.0; 6], link: None },
            };
            let stiffness = match args.get("stiffness") {
                Some(v) => fixed::<6>("stiffness", v)?,
                None => DEFAULT_STIFFNESS,
            };
            let damping = match args.get("damping") {
                Some(v) => fixed::<6>("damping", v)?,
                None => DEFAULT_DAMPING,
            };
            Command::Robot(MotionCommand::Cartesian {
                tf: TaskFrame { t: Transform::from_vec6(&task.offset), reference: task.reference, link: task.link },
                gf: GoalFrame { t: Transform::from_vec6(&goal.offset), reference: goal.reference, offset: goal.offset },
                imp: ImpedanceParams { stiffness, damping },
            })
        }
        (DeviceKind::Robot, "moveJoint") => Command::Robot(MotionCommand::Joint {
            jv: fixed::<7>("joints", &args["joints"])?,
            stiffness: match args.get("stiffness") {
                Some(v) => fixed::<7>("stiffness", v)?,
                None => [1000.0; 7],
            },
            damping: match args.get("damping") {
                Some(v) => fixed::<7>("damping", v)?,
                None => [0.7; 7],
            },
        }),
        (DeviceKind::Tool, "grip") => Command::Tool(ToolCommand::Grip),
        (DeviceKind::Tool, "release") => Command::Tool(ToolCommand::Release),
        (DeviceKind::Perception, "localize") => match &args["object"] {
            Value::Str(s) => Command::Perception(PerceiveCommand::Localize { object: s.clone() }),
            other => return Err(malformed(format!("`object` expects string, found {}", other.value_type()))),
        },
        _ => unreachable!("signature table and builder disagree"),
    })
}
