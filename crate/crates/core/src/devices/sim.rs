//! Quasi-static simulation of the robot, gripper and perception unit.
//!
//! The rig keeps its own ground-truth copy of the world. The engine's
//! environmental model is the program's *belief*; it only changes through
//! update bindings. Goal frames resolve against the belief, while contacts,
//! grasping and perception read the ground truth.
//!
//! Robot motion: the commanded flange pose moves from the actual pose at
//! command start to the goal along a straight segment, at most 0.1 m/s and
//! 0.5 rad/s. The actual pose is the commanded pose projected onto the
//! contact-feasible set. The reported wrench is the wrench applied by the
//! robot, `ST * (commanded - actual)`, expressed in the task frame. Plane
//! contacts use their own spring `k` along the normal.

use super::interface::{Command, DeviceKind, MotionCommand, PerceiveCommand, ToolCommand};
use super::{ContactFeature, DeviceError, GripperConfig, PerceptionConfig};
use crate::world::{Attr, EnvironmentalModel, Transform, World};
use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::RngCore;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeMap;

pub const V_LIN: f64 = 0.1;
pub const V_ROT: f64 = 0.5;
/// Joint speed for `moveJoint`, rad/s.
pub const V_JOINT: f64 = 0.5;
/// Gripper finger speed, m/s.
pub const V_TOOL: f64 = 0.1;
pub const CONVERGED_LIN: f64 = 1e-4;
pub const CONVERGED_ROT: f64 = 1e-3;
pub const STIFFNESS_CAP: f64 = 5000.0;
pub const PERCEPTION_LATENCY: u32 = 10;
/// Axial grasp tolerance, m.
pub const GRASP_AXIAL: f64 = 0.01;
/// Lateral engagement tolerance of a screw joint, m.
pub const SCREW_LATERAL: f64 = 0.01;

/// A sensor channel value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sample {
    Num(f64),
    Bool(bool),
}

pub type Snapshot = BTreeMap<String, Sample>;
pub type ResultRecord = BTreeMap<String, Attr>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The stop condition held.
    Condition,
    Converged,
    /// Motion finished without reaching the goal (contact).
    Blocked,
    /// Tool or perception command done.
    Completed,
    Timeout,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Condition => "condition",
            StopReason::Converged => "converged",
            StopReason::Blocked => "blocked",
            StopReason::Completed => "completed",
            StopReason::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SessionStatus {
    Running,
    Stopped(StopReason),
    Faulted(String),
}

/// Begin/tick/stop contract of a device adapter.
pub trait Adapter {
    fn begin(&mut self, command: Command, em: &EnvironmentalModel, rng: &mut dyn RngCore)
        -> Result<CommandSession, DeviceError>;
    fn tick(&mut self, session: &mut CommandSession, dt: f64) -> Result<Snapshot, DeviceError>;
    fn stop(&mut self, session: &mut CommandSession, reason: StopReason) -> ResultRecord;
}

#[derive(Debug, Clone)]
struct Held {
    object: String,
    /// `act.R^T * object.R` at grasp time.
    offset: Matrix3<f64>,
}

#[derive(Debug, Clone)]
struct CartesianPlan {
    start: Transform,
    goal: Transform,
    /// Flange-relative goals interpolate the written 6-vector offset.
    relative: Option<[f64; 6]>,
    lin: f64,
    rot: f64,
    n: Option<u64>,
    k: u64,
    task: Transform,
    stiffness: [f64; 6],
    prev_cmd: Transform,
    windup: Vec<f64>,
}

#[derive(Debug, Clone)]
enum SessionState {
    Cartesian(Box<CartesianPlan>),
    Joint { start: [f64; 7], goal: [f64; 7], n: Option<u64>, k: u64 },
    Tool { from: f64, to: f64, grasp: Option<Held>, n: Option<u64>, k: u64 },
    Localize { remaining: u32, pose: Transform },
}

/// One running device command.
#[derive(Debug, Clone)]
pub struct CommandSession {
    pub command: Command,
    pub status: SessionStatus,
    ticks: u64,
    time: f64,
    finished: Option<StopReason>,
    state: SessionState,
    last: Snapshot,
    result: Option<ResultRecord>,
}

impl CommandSession {
    pub fn device(&self) -> DeviceKind {
        self.command.device()
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    /// Seconds since the command started.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn last_snapshot(&self) -> &Snapshot {
        &self.last
    }

    /// Set once the device has finished on its own.
    pub fn self_stop(&self) -> Option<StopReason> {
        self.finished
    }

    pub fn result(&self) -> Option<&ResultRecord> {
        self.result.as_ref()
    }
}

#[derive(Debug, Clone)]
struct RobotState {
    cmd: Transform,
    act: Transform,
    joints: [f64; 7],
    wrench: [f64; 6],
    converged: bool,
}

#[derive(Debug, Clone)]
struct ToolState {
    width: f64,
    holding: Option<Held>,
}

/// Simulated robot, parallel gripper and perception unit.
#[derive(Debug, Clone)]
pub struct SimRig {
    truth: EnvironmentalModel,
    contacts: Vec<ContactFeature>,
    perception: PerceptionConfig,
    gripper: GripperConfig,
    robot: RobotState,
    tool: ToolState,
    /// Accumulated rotation per screw joint, indexed like `contacts`.
    turned: Vec<f64>,
}

/// Forward-kinematics stub used by `moveJoint`: position
/// `(0.3 + 0.1(q1 + q3), 0.1 q0, 0.3 + 0.1(q2 - q4))`, roll 0, pitch `q5`,
/// yaw `q0 + q6`. Not a real arm model.
pub fn forward_kinematics(q: &[f64; 7]) -> Transform {
    Transform::from_xyz_rpy(
        [0.3 + 0.1 * (q[1] + q[3]), 0.1 * q[0], 0.3 + 0.1 * (q[2] - q[4])],
        [0.0, q[5], q[0] + q[6]],
    )
}

fn steps(duration: f64, dt: f64) -> u64 {
    ((duration / dt - 1e-9).ceil() as u64).max(1)
}

fn rotation_vector(r: &Matrix3<f64>) -> Vector3<f64> {
    Rotation3::from_matrix_unchecked(*r).scaled_axis()
}

fn truncated_normal(sigma: f64, rng: &mut dyn RngCore) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let dist = Normal::new(0.0, sigma).expect("finite sigma");
    loop {
        let x: f64 = dist.sample(rng);
        if x.abs() <= 3.0 * sigma {
            return x;
        }
    }
}

impl CartesianPlan {
    fn at(&self, s: f64) -> Transform {
        if let Some(off) = self.relative {
            let scaled = off.map(|x| x * s);
            return self.start.compose(&Transform::from_vec6(&scaled));
        }
        let log = rotation_vector(&(self.start.rotation.transpose() * self.goal.rotation));
        Transform {
            rotation: self.start.rotation * *Rotation3::from_scaled_axis(log * s).matrix(),
            translation: self.start.translation + (self.goal.translation - self.start.translation) * s,
        }
    }
}

impl SimRig {
    pub fn new(world: &World) -> SimRig {
        let tcp = world.em.world_pose("tcp").unwrap_or_else(|_| Transform::identity());
        SimRig {
            truth: world.em.clone(),
            contacts: world.contacts.clone(),
            perception: world.perception.clone(),
            gripper: world.gripper.clone(),
            robot: RobotState { cmd: tcp, act: tcp, joints: [0.0; 7], wrench: [0.0; 6], converged: false },
            tool: ToolState { width: world.gripper.max_width, holding: None },
            turned: vec![0.0; world.contacts.len()],
        }
    }

    /// Ground-truth world.
    pub fn truth(&self) -> &EnvironmentalModel {
        &self.truth
    }

    /// Actual flange pose.
    pub fn flange(&self) -> Transform {
        self.robot.act
    }

    pub fn holding(&self) -> Option<&str> {
        self.tool.holding.as_ref().map(|h| h.object.as_str())
    }

    fn frame_pose(&self, reference: &str, em: &EnvironmentalModel) -> Result<Transform, DeviceError> {
        match reference {
            "flange" => Ok(self.robot.act),
            _ => em.world_pose(reference).map_err(|_| DeviceError::UnknownObject(reference.into())),
        }
    }

    fn robot_snapshot(&self, out: &mut Snapshot) {
        let v = self.robot.act.to_vec6();
        for (name, x) in ["x", "y", "z", "rx", "ry", "rz"].iter().zip(v) {
            out.insert(format!("robot.pose.{name}"), Sample::Num(x));
        }
        for (i, axis) in ["x", "y", "z"].iter().enumerate() {
            out.insert(format!("robot.force.{axis}"), Sample::Num(self.robot.wrench[i]));
            out.insert(format!("robot.torque.{axis}"), Sample::Num(self.robot.wrench[i + 3]));
        }
        for (i, q) in self.robot.joints.iter().enumerate() {
            out.insert(format!("robot.joints.{i}"), Sample::Num(*q));
        }
        out.insert("robot.converged".into(), Sample::Bool(self.robot.converged));
    }

    fn tool_snapshot(&self, out: &mut Snapshot) {
        out.insert("tool.width".into(), Sample::Num(self.tool.width));
        out.insert("tool.grasped".into(), Sample::Bool(self.tool.holding.is_some()));
    }

    fn snapshot(&self, device: DeviceKind, time: f64) -> Snapshot {
        let mut out = Snapshot::new();
        match device {
            DeviceKind::Robot => self.robot_snapshot(&mut out),
            DeviceKind::Tool => self.tool_snapshot(&mut out),
            DeviceKind::Perception => {}
        }
        out.insert("time".into(), Sample::Num(time));
        out
    }

    fn move_held(&mut self) {
        if let Some(h) = &self.tool.holding {
            let pose = Transform { rotation: self.robot.act.rotation * h.offset, translation: self.robot.act.translation };
            let _ = self.truth.set_world_pose(&h.object, &pose);
        }
    }

    /// Projects `cmd` onto the contact-feasible set. Returns the actual pose
    /// and the world-frame force and torque applied by the robot.
    fn contact_response(
        &mut self,
        cmd: &Transform,
        prev_cmd: &Transform,
        windup: &mut [f64],
        stiffness: &[f64; 6],
        task: &Transform,
    ) -> (Transform, Vector3<f64>, Vector3<f64>) {
        let mut act = *cmd;
        let mut normal_force = Vector3::zeros();
        let mut normals: Vec<Vector3<f64>> = Vec::new();
        let mut torque = Vector3::zeros();
        for (i, c) in self.contacts.iter().enumerate() {
            match c {
                ContactFeature::Plane { normal, offset, k, windows, window_radius } => {
                    let n = Vector3::new(normal[0], normal[1], normal[2]).normalize();
                    let depth = offset - n.dot(&act.translation);
                    if depth < -1e-12 {
                        continue;
                    }
                    if depth > 0.0 {
                        act.translation += n * depth;
                    }
                    let mut best: Option<(f64, Vector3<f64>)> = None;
                    for w in windows {
                        let Ok(wp) = self.truth.world_pose(w) else { continue };
                        let d = act.translation - wp.translation;
                        let lateral = d - n * n.dot(&d);
                        let dist = lateral.norm();
                        if dist <= *window_radius && best.is_none_or(|(b, _)| dist < b) {
                            best = Some((dist, lateral));
                        }
                    }
                    if let Some((_, lateral)) = best {
                        act.translation -= lateral;
                    }
                    normal_force += n * (k * n.dot(&(cmd.translation - act.translation)));
                    normals.push(n);
                }
                ContactFeature::Screwjoint { axis_object, pitch, engage_z, resist_k, z_min } => {
                    if self.tool.holding.is_none() {
                        continue;
                    }
                    let Ok(axis) = self.truth.world_pose(axis_object) else { continue };
                    let mut local = axis.inverse().apply(&act.translation);
                    let lateral = (local.x * local.x + local.y * local.y).sqrt();
                    if lateral > SCREW_LATERAL || local.z > engage_z + 1e-9 {
                        continue;
                    }
                    let axis_w = axis.rotation * Vector3::z();
                    let dtheta = rotation_vector(&(cmd.rotation * prev_cmd.rotation.transpose())).dot(&axis_w);
                    self.turned[i] += dtheta;
                    windup[i] += dtheta;
                    local.z = (engage_z - pitch * self.turned[i] / std::f64::consts::TAU).max(*z_min);
                    act.translation = axis.apply(&local);
                    torque += axis_w * (resist_k * windup[i]);
                }
            }
        }
        // Displacement not absorbed by plane springs goes through the robot's
        // own stiffness, per task-frame axis.
        let mut rest = cmd.translation - act.translation;
        for n in &normals {
            rest -= n * n.dot(&rest);
        }
        let rest_t = task.rotation.transpose() * rest;
        let rot_t = task.rotation.transpose() * rotation_vector(&(cmd.rotation * act.rotation.transpose()));
        let f_t = Vector3::new(stiffness[0] * rest_t.x, stiffness[1] * rest_t.y, stiffness[2] * rest_t.z);
        let t_t = Vector3::new(stiffness[3] * rot_t.x, stiffness[4] * rot_t.y, stiffness[5] * rot_t.z);
        let force = normal_force + task.rotation * f_t;
        let torque = torque + task.rotation * t_t;
        (act, force, torque)
    }

    fn result_record(&self, s: &CommandSession) -> ResultRecord {
        let mut out = ResultRecord::new();
        match &s.state {
            SessionState::Cartesian(_) | SessionState::Joint { .. } => {
                out.insert("pose".into(), Attr::Transform(self.robot.act));
                for (i, name) in ["fx", "fy", "fz", "tx", "ty", "tz"].iter().enumerate() {
                    out.insert((*name).into(), Attr::Num(self.robot.wrench[i]));
                }
                out.insert("converged".into(), Attr::Bool(self.robot.converged));
            }
            SessionState::Tool { .. } => {
                out.insert("width".into(), Attr::Num(self.tool.width));
                out.insert("grasped".into(), Attr::Bool(self.tool.holding.is_some()));
            }
            SessionState::Localize { pose, .. } => {
                out.insert("pose".into(), Attr::Transform(*pose));
            }
        }
        out
    }

    fn grasp_candidate(&self) -> Option<Held> {
        let inv = self.robot.act.inverse();
        let mut best: Option<(f64, &str, Matrix3<f64>)> = None;
        for o in self.truth.objects() {
            if o.attributes.get("graspable") != Some(&Attr::Bool(true)) {
                continue;
            }
            let Ok(pose) = self.truth.world_pose(&o.name) else { continue };
            let rel = inv.apply(&pose.translation);
            let lateral = (rel.x * rel.x + rel.y * rel.y).sqrt();
            if lateral > self.gripper.max_width / 2.0 || rel.z.abs() > GRASP_AXIAL {
                continue;
            }
            let d = rel.norm();
            if best.is_none_or(|(b, _, _)| d < b) {
                best = Some((d, &o.name, self.robot.act.rotation.transpose() * pose.rotation));
            }
        }
        best.map(|(_, name, offset)| Held { object: name.to_string(), offset })
    }
}

impl Adapter for SimRig {
    fn begin(
        &mut self,
        command: Command,
        em: &EnvironmentalModel,
        rng: &mut dyn RngCore,
    ) -> Result<CommandSession, DeviceError> {
        let state = match &command {
            Command::Robot(MotionCommand::Cartesian { tf, gf, imp }) => {
                if imp.stiffness.iter().chain(&imp.damping).any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(DeviceError::MalformedCommand("impedance values must be finite and >= 0".into()));
                }
                let task = self.frame_pose(&tf.reference, em)?.compose(&tf.t);
                let start = self.robot.act;
                let goal = self.frame_pose(&gf.reference, em)?.compose(&gf.t);
                let relative = (gf.reference == "flange").then_some(gf.offset);
                let lin = (goal.translation - start.translation).norm();
                let rot = match relative {
                    Some(o) => (o[3] * o[3] + o[4] * o[4] + o[5] * o[5]).sqrt(),
                    None => Transform { rotation: start.rotation.transpose() * goal.rotation, ..Transform::identity() }
                        .angle(),
                };
                self.robot.converged = false;
                SessionState::Cartesian(Box::new(CartesianPlan {
                    start,
                    goal,
                    relative,
                    lin,
                    rot,
                    n: None,
                    k: 0,
                    task,
                    stiffness: imp.stiffness,
                    prev_cmd: start,
                    windup: vec![0.0; self.contacts.len()],
                }))
            }
            Command::Robot(MotionCommand::Joint { jv, stiffness, damping }) => {
                if stiffness.iter().chain(damping).chain(jv).any(|x| !x.is_finite()) || stiffness.iter().any(|x| *x < 0.0)
                {
                    return Err(DeviceError::MalformedCommand("joint command values must be finite".into()));
                }
                self.robot.converged = false;
                SessionState::Joint { start: self.robot.joints, goal: *jv, n: None, k: 0 }
            }
            Command::Tool(ToolCommand::Grip) => {
                let grasp = if self.tool.holding.is_some() { None } else { self.grasp_candidate() };
                let to = match &grasp {
                    Some(h) => match self.truth.object(&h.object).and_then(|o| o.attributes.get("width")) {
                        Some(Attr::Num(w)) => w.clamp(0.0, self.gripper.max_width),
                        _ => 0.0,
                    },
                    None if self.tool.holding.is_some() => self.tool.width,
                    None => 0.0,
                };
                SessionState::Tool { from: self.tool.width, to, grasp, n: None, k: 0 }
            }
            Command::Tool(ToolCommand::Release) => {
                self.tool.holding = None;
                SessionState::Tool { from: self.tool.width, to: self.gripper.max_width, grasp: None, n: None, k: 0 }
            }
            Command::Perception(PerceiveCommand::Localize { object }) => {
                let truth =
                    self.truth.world_pose(object).map_err(|_| DeviceError::UnknownObject(object.clone()))?;
                let sp = self.perception.sigma_pos;
                let sr = self.perception.sigma_rot;
                let dp = Vector3::new(truncated_normal(sp, rng), truncated_normal(sp, rng), truncated_normal(sp, rng));
                let dr = Vector3::new(truncated_normal(sr, rng), truncated_normal(sr, rng), truncated_normal(sr, rng));
                let pose = Transform {
                    rotation: *Rotation3::from_scaled_axis(dr).matrix() * truth.rotation,
                    translation: truth.translation + dp,
                };
                SessionState::Localize { remaining: PERCEPTION_LATENCY, pose }
            }
        };
        let device = command.device();
        Ok(CommandSession {
            command,
            status: SessionStatus::Running,
            ticks: 0,
            time: 0.0,
            finished: None,
            state,
            last: self.snapshot(device, 0.0),
            result: None,
        })
    }

    fn tick(&mut self, s: &mut CommandSession, dt: f64) -> Result<Snapshot, DeviceError> {
        if s.status != SessionStatus::Running || s.finished.is_some() {
            return Ok(s.last.clone());
        }
        s.ticks += 1;
        s.time = s.ticks as f64 * dt;
        let mut state = std::mem::replace(&mut s.state, SessionState::Localize { remaining: 0, pose: Transform::identity() });
        let outcome = self.advance(&mut state, dt);
        s.state = state;
        match outcome {
            Ok(done) => s.finished = done,
            Err(e) => {
                s.status = SessionStatus::Faulted(e.to_string());
                return Err(e);
            }
        }
        s.last = self.snapshot(s.device(), s.time);
        Ok(s.last.clone())
    }

    fn stop(&mut self, s: &mut CommandSession, reason: StopReason) -> ResultRecord {
        if let Some(r) = &s.result {
            return r.clone();
        }
        if s.status == SessionStatus::Running {
            s.status = SessionStatus::Stopped(reason);
        }
        let r = self.result_record(s);
        s.result = Some(r.clone());
        r
    }
}

impl SimRig {
    /// One tick of the device state machine. Returns the self-stop reason
    /// when the command has finished.
    fn advance(&mut self, state: &mut SessionState, dt: f64) -> Result<Option<StopReason>, DeviceError> {
        match state {
            SessionState::Cartesian(plan) => {
                if plan.stiffness[..3].iter().any(|k| *k > STIFFNESS_CAP) {
                    return Err(DeviceError::SimFault(format!(
                        "translational stiffness above {STIFFNESS_CAP} N/m"
                    )));
                }
                let n = *plan.n.get_or_insert_with(|| steps((plan.lin / V_LIN).max(plan.rot / V_ROT), dt));
                plan.k = (plan.k + 1).min(n);
                let cmd = if plan.k == n { plan.goal } else { plan.at(plan.k as f64 / n as f64) };
                let prev = plan.prev_cmd;
                let (act, force, torque) =
                    self.contact_response(&cmd, &prev, &mut plan.windup, &plan.stiffness, &plan.task);
                plan.prev_cmd = cmd;
                let f = plan.task.rotation.transpose() * force;
                let t = plan.task.rotation.transpose() * torque;
                self.robot.cmd = cmd;
                self.robot.act = act;
                self.robot.wrench = [f.x, f.y, f.z, t.x, t.y, t.z];
                let err = act.inverse().compose(&plan.goal);
                self.robot.converged = err.translation.norm() < CONVERGED_LIN && err.angle() < CONVERGED_ROT;
                self.move_held();
                Ok((plan.k == n).then_some(if self.robot.converged {
                    StopReason::Converged
                } else {
                    StopReason::Blocked
                }))
            }
            SessionState::Joint { start, goal, n, k } => {
                let span = start.iter().zip(goal.iter()).map(|(a, b)| (b - a).abs()).fold(0.0, f64::max);
                let n = *n.get_or_insert_with(|| steps(span / V_JOINT, dt));
                *k = (*k + 1).min(n);
                let s = *k as f64 / n as f64;
                let q: [f64; 7] = std::array::from_fn(|i| if *k == n { goal[i] } else { start[i] + (goal[i] - start[i]) * s });
                self.robot.joints = q;
                self.robot.cmd = forward_kinematics(&q);
                self.robot.act = self.robot.cmd;
                self.robot.wrench = [0.0; 6];
                self.robot.converged = *k == n;
                self.move_held();
                Ok((*k == n).then_some(StopReason::Converged))
            }
            SessionState::Tool { from, to, grasp, n, k } => {
                let n = *n.get_or_insert_with(|| steps((*to - *from).abs() / V_TOOL, dt));
                *k = (*k + 1).min(n);
                self.tool.width = if *k == n { *to } else { *from + (*to - *from) * (*k as f64 / n as f64) };
                if *k < n {
                    return Ok(None);
                }
                if let Some(h) = grasp.take() {
                    self.tool.holding = Some(h);
                    self.move_held();
                }
                Ok(Some(StopReason::Completed))
            }
            SessionState::Localize { remaining, .. } => {
                *remaining = remaining.saturating_sub(1);
                Ok((*remaining == 0).then_some(StopReason::Completed))
            }
        }
    }
}
