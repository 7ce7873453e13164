//! The domain interface between models and hardware, and a simulated
//! implementation of it.
//!
//! Elemental actions talk to three devices: `robot`, `tool` and
//! `perception`. [`interface`] fixes the command signatures and builds typed
//! [`Command`] values from `exec` clauses; [`sim`] runs them against a
//! quasi-static contact model.

pub mod interface;
pub mod sim;

pub use interface::{
    build_command, check_call, signature, ArgSpec, Command, DeviceKind, GoalFrame, ImpedanceParams,
    MotionCommand, PerceiveCommand, Signature, TaskFrame, ToolCommand,
};
pub use sim::{
    forward_kinematics, Adapter, CommandSession, ResultRecord, Sample, SessionStatus, SimRig, Snapshot,
    StopReason,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("malformed command: {0}")]
    MalformedCommand(String),
    #[error("simulation fault: {0}")]
    SimFault(String),
}

/// A contact feature of the simulated workspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ContactFeature {
    /// Half-space `normal . p >= offset` with a normal spring of stiffness
    /// `k`. Inside `windowRadius` of one of the `windows` objects the contact
    /// point is pulled laterally onto that object's axis.
    Plane {
        normal: [f64; 3],
        offset: f64,
        k: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        windows: Vec<String>,
        #[serde(rename = "windowRadius", default, skip_serializing_if = "is_zero")]
        window_radius: f64,
    },
    /// Threaded hole along the z axis of `axisObject`.
    Screwjoint {
        #[serde(rename = "axisObject")]
        axis_object: String,
        /// Meters per revolution.
        pitch: f64,
        #[serde(rename = "engageZ")]
        engage_z: f64,
        /// Nm per rad of rotation after engagement.
        #[serde(rename = "resistK")]
        resist_k: f64,
        #[serde(rename = "zMin")]
        z_min: f64,
    },
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl ContactFeature {
    pub(crate) fn check(&self) -> Result<(), String> {
        match self {
            ContactFeature::Plane { normal, k, window_radius, .. } => {
                let n = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
                if n.is_nan() || n <= 1e-12 {
                    return Err("plane normal must be non-zero".into());
                }
                if k.is_nan() || *k <= 0.0 {
                    return Err("k must be > 0".into());
                }
                if *window_radius < 0.0 {
                    return Err("windowRadius must be >= 0".into());
                }
            }
            ContactFeature::Screwjoint { pitch, resist_k, .. } => {
                if pitch.is_nan() || *pitch <= 0.0 {
                    return Err("pitch must be > 0".into());
                }
                if resist_k.is_nan() || *resist_k <= 0.0 {
                    return Err("resistK must be > 0".into());
                }
            }
        }
        Ok(())
    }

    pub(crate) fn referenced_objects(&self) -> Vec<&str> {
        match self {
            ContactFeature::Plane { windows, .. } => windows.iter().map(String::as_str).collect(),
            ContactFeature::Screwjoint { axis_object, .. } => vec![axis_object.as_str()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PerceptionConfig {
    #[serde(default)]
    pub sigma_pos: f64,
    #[serde(default)]
    pub sigma_rot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GripperConfig {
    pub max_width: f64,
}

impl Default for GripperConfig {
    fn default() -> Self {
        GripperConfig { max_width: 0.08 }
    }
}
