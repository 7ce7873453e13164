//! The two bundled case studies and their analytic oracles.
//!
//! Bundle sources live in `scenarios/` at the repository root and are
//! embedded at build time, so a bundle loads from any working directory.

use crate::devices::ContactFeature;
use crate::diag::{has_errors, Diagnostic};
use crate::engine::{init_run, Limits, RunOutcome, Status, TraceEvent};
use crate::model::{load, MemSources, Model, Profile};
use crate::world::{load_world, World, WorldError};
use std::path::{Path, PathBuf};

const SCREWING_LR: &str = include_str!("../../../scenarios/screwing.lr");
const SCREWING_WORLD: &str = include_str!("../../../scenarios/screwing_world.json");
const RAIL_LR: &str = include_str!("../../../scenarios/rail_assembly.lr");
const RAIL_WORLD: &str = include_str!("../../../scenarios/rail_world.json");

/// Height at which the screwing loop stops, as written in `screwing.lr`.
pub const SCREW_TARGET_Z: f64 = 0.005;
/// Torque threshold of the screw-down stop condition.
pub const SCREW_TORQUE: f64 = 0.32;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (expected `screwing` or `rail`)")]
    UnknownScenario(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub status: Status,
    pub end: &'static str,
}

#[derive(Debug, Clone)]
pub struct ScenarioBundle {
    pub name: &'static str,
    /// Path relative to the repository root.
    pub model_file: PathBuf,
    pub world_file: PathBuf,
    pub root: &'static str,
    pub model_text: &'static str,
    pub world_text: &'static str,
    pub expected: Expected,
}

pub fn load_scenario(name: &str) -> Result<ScenarioBundle, ScenarioError> {
    let (name, lr, world, model_text, world_text, root, end) = match name {
        "screwing" => ("screwing", "screwing.lr", "screwing_world.json", SCREWING_LR, SCREWING_WORLD, "ScrewTask", "done"),
        "rail" => ("rail", "rail_assembly.lr", "rail_world.json", RAIL_LR, RAIL_WORLD, "RailAssembly", "done"),
        other => return Err(ScenarioError::UnknownScenario(other.into())),
    };
    Ok(ScenarioBundle {
        name,
        model_file: Path::new("scenarios").join(lr),
        world_file: Path::new("scenarios").join(world),
        root,
        model_text,
        world_text,
        expected: Expected { status: Status::Success, end },
    })
}

impl ScenarioBundle {
    /// Loads and validates the model under the standard profile.
    pub fn model(&self) -> Result<Model, Vec<Diagnostic>> {
        let src = MemSources::new().with(&self.model_file, self.model_text);
        let (model, diags) = load(&self.model_file, &[], &src, Profile::Standard);
        if has_errors(&diags) {
            Err(diags)
        } else {
            Ok(model)
        }
    }

    pub fn world(&self) -> Result<World, WorldError> {
        load_world(self.world_text)
    }

    /// Runs the bundle and returns the outcome, the trace and the final
    /// ground-truth world.
    pub fn run(&self, seed: u64, limits: Limits) -> (RunOutcome, Vec<TraceEvent>, World) {
        let model = self.model().expect("bundled model validates");
        let world = self.world().expect("bundled world loads");
        let mut st = init_run(&model, self.root, &world, seed, limits).expect("bundled run starts");
        let (out, events) = st.run_to_end();
        let truth = World { em: st.rig().truth().clone(), ..world };
        (out, events, truth)
    }
}

/// Number of screw-down strokes needed to go from `z0` to `z_target` when
/// each stroke advances `pitch_per_turn`.
///
/// Ratios within 1e-9 of an integer count as that integer, so exact
/// multiples are not pushed up by rounding.
///
/// ```
/// use lightrocks::scenarios::expected_screw_iterations;
/// assert_eq!(expected_screw_iterations(0.020, 0.005, 0.005), Ok(3));
/// assert_eq!(expected_screw_iterations(0.019, 0.005, 0.005), Ok(3));
/// assert!(expected_screw_iterations(0.005, 0.010, 0.005).is_err());
/// ```
pub fn expected_screw_iterations(z0: f64, z_target: f64, pitch_per_turn: f64) -> Result<u32, ScenarioError> {
    if z0.is_nan() || z_target.is_nan() || z0 <= z_target {
        return Err(ScenarioError::Domain(format!("z0 = {z0} must exceed zTarget = {z_target}")));
    }
    if pitch_per_turn.is_nan() || pitch_per_turn <= 0.0 {
        return Err(ScenarioError::Domain(format!("pitch per turn = {pitch_per_turn} must be positive")));
    }
    let ratio = (z0 - z_target) / pitch_per_turn;
    let n = if (ratio - ratio.round()).abs() < 1e-9 { ratio.round() } else { ratio.ceil() };
    Ok(n.max(1.0) as u32)
}

/// Parameters of the screwing oracle, derived from the world file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewOracle {
    /// World height of the screw when the thread engages.
    pub z0: f64,
    /// Advance per stroke: the turn that builds up the threshold torque,
    /// times the pitch.
    pub pitch_per_turn: f64,
    /// Largest torque increment in one tick.
    pub overshoot: f64,
}

pub fn screw_oracle(world: &World, dt: f64) -> Option<ScrewOracle> {
    world.contacts.iter().find_map(|c| match c {
        ContactFeature::Screwjoint { axis_object, pitch, engage_z, resist_k, .. } => {
            let axis = world.em.world_pose(axis_object).ok()?;
            let turn = SCREW_TORQUE / resist_k;
            Some(ScrewOracle {
                z0: axis.translation.z + engage_z,
                pitch_per_turn: pitch * turn / std::f64::consts::TAU,
                overshoot: resist_k * crate::devices::sim::V_ROT * dt,
            })
        }
        _ => None,
    })
}
