//! The environmental model: a scene graph of named rigid objects rooted at
//! `world`, plus typed attributes written by update bindings.

mod transform;

pub use transform::{compose_chain, Transform};

use crate::devices::{ContactFeature, GripperConfig, PerceptionConfig};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Name of the implicit root frame.
pub const ROOT: &str = "world";

/// Attribute value. Also used for device result fields.
#[derive(Debug, Clone, PartialEq)]
pub enum Attr {
    Num(f64),
    Bool(bool),
    Str(String),
    Transform(Transform),
}

impl Attr {
    pub fn type_name(&self) -> &'static str {
        match self {
            Attr::Num(_) => "num",
            Attr::Bool(_) => "bool",
            Attr::Str(_) => "string",
            Attr::Transform(_) => "transform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub name: String,
    pub parent: String,
    /// Pose relative to `parent`.
    pub transform: Transform,
    pub attributes: BTreeMap<String, Attr>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("type mismatch at `{path}`: expected {expected}, found {found}")]
    TypeMismatch { path: String, expected: &'static str, found: &'static str },
    #[error("invalid path `{0}`: expected object.attribute")]
    BadPath(String),
    #[error("{0}")]
    Json(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("cycle at {0}")]
    Cycle(String),
}

/// Scene graph plus an update counter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvironmentalModel {
    objects: BTreeMap<String, SceneObject>,
    revision: u64,
}

impl EnvironmentalModel {
    pub fn new() -> EnvironmentalModel {
        EnvironmentalModel::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn objects(&self) -> impl Iterator<Item = &SceneObject> {
        self.objects.values()
    }

    pub fn object(&self, name: &str) -> Option<&SceneObject> {
        self.objects.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        name == ROOT || self.objects.contains_key(name)
    }

    /// Adds an object. The parent must already exist; this keeps the graph
    /// a tree by construction.
    pub fn insert(&mut self, obj: SceneObject) -> Result<(), WorldError> {
        if !self.contains(&obj.parent) {
            return Err(WorldError::UnknownObject(obj.parent));
        }
        if obj.name == ROOT {
            return Err(WorldError::Cycle(ROOT.into()));
        }
        self.objects.insert(obj.name.clone(), obj);
        Ok(())
    }

    /// Pose of `name` in the world frame.
    pub fn world_pose(&self, name: &str) -> Result<Transform, WorldError> {
        if name == ROOT {
            return Ok(Transform::identity());
        }
        let mut chain = Vec::new();
        let mut cur = name;
        while cur != ROOT {
            let obj = self.objects.get(cur).ok_or_else(|| WorldError::UnknownObject(cur.to_string()))?;
            chain.push(&obj.transform);
            cur = &obj.parent;
            if chain.len() > self.objects.len() {
                return Err(WorldError::Cycle(name.to_string()));
            }
        }
        Ok(compose_chain(chain.into_iter().rev()))
    }

    /// Sets the world pose of an object, storing it relative to its parent.
    pub fn set_world_pose(&mut self, name: &str, pose: &Transform) -> Result<(), WorldError> {
        let parent = self.objects.get(name).ok_or_else(|| WorldError::UnknownObject(name.into()))?.parent.clone();
        let rel = self.world_pose(&parent)?.inverse().compose(pose);
        self.objects.get_mut(name).expect("checked above").transform = rel;
        Ok(())
    }

    /// Reads an attribute path `object.attr...`. `pose` yields the world
    /// pose; `pose.x|y|z|rx|ry|rz` yield its components.
    pub fn read(&self, path: &[String]) -> Result<Attr, WorldError> {
        let path = strip_root(path);
        if path.len() < 2 {
            return Err(WorldError::BadPath(path.join(".")));
        }
        let name = &path[0];
        let obj = self.objects.get(name).ok_or_else(|| WorldError::UnknownObject(name.clone()))?;
        let attr = path[1..].join(".");
        if path[1] == "pose" {
            let pose = self.world_pose(name)?;
            if path.len() == 2 {
                return Ok(Attr::Transform(pose));
            }
            if path.len() == 3 {
                let v = pose.to_vec6();
                let idx = match path[2].as_str() {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    "rx" => 3,
                    "ry" => 4,
                    "rz" => 5,
                    _ => return Err(WorldError::BadPath(path.join("."))),
                };
                return Ok(Attr::Num(v[idx]));
            }
            return Err(WorldError::BadPath(path.join(".")));
        }
        obj.attributes
            .get(&attr)
            .cloned()
            .ok_or_else(|| WorldError::BadPath(path.join(".")))
    }

    /// Applies one update binding. Increments the revision by exactly one
    /// on success and leaves the model untouched on error.
    pub fn apply_update(&mut self, path: &[String], value: Attr) -> Result<(), WorldError> {
        let path = strip_root(path);
        if path.len() < 2 {
            return Err(WorldError::BadPath(path.join(".")));
        }
        let name = path[0].clone();
        if !self.objects.contains_key(&name) {
            return Err(WorldError::UnknownObject(name));
        }
        let attr = path[1..].join(".");
        if attr == "pose" {
            match value {
                Attr::Transform(t) => self.set_world_pose(&name, &t)?,
                other => {
                    return Err(WorldError::TypeMismatch {
                        path: path.join("."),
                        expected: "transform",
                        found: other.type_name(),
                    })
                }
            }
        } else if path[1] == "pose" {
            return Err(WorldError::BadPath(path.join(".")));
        } else {
            self.objects.get_mut(&name).expect("checked above").attributes.insert(attr, value);
        }
        self.revision += 1;
        Ok(())
    }
}

fn strip_root(path: &[String]) -> &[String] {
    if path.len() >= 3 && path[0] == ROOT {
        &path[1..]
    } else {
        path
    }
}

/// `T` such that coordinates in `reference` map to the pose of `obj`:
/// `inv(chain(reference)) * chain(obj)`.
pub fn resolve_pose(em: &EnvironmentalModel, obj: &str, reference: &str) -> Result<Transform, WorldError> {
    let a = em.world_pose(obj)?;
    let r = em.world_pose(reference)?;
    Ok(r.inverse().compose(&a))
}

/// Applies an update binding given as a dotted path.
pub fn apply_update(em: &mut EnvironmentalModel, em_path: &str, value: Attr) -> Result<(), WorldError> {
    let segs: Vec<String> = em_path.split('.').map(str::to_string).collect();
    em.apply_update(&segs, value)
}

/// Everything a world file describes.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub em: EnvironmentalModel,
    pub contacts: Vec<ContactFeature>,
    pub perception: PerceptionConfig,
    pub gripper: GripperConfig,
}

// ---- file format ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldFile {
    #[serde(default)]
    objects: Vec<ObjectEntry>,
    #[serde(default)]
    contacts: Vec<ContactFeature>,
    #[serde(default)]
    perception: PerceptionConfig,
    #[serde(default)]
    gripper: GripperConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectEntry {
    name: String,
    #[serde(default = "root_name")]
    parent: String,
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    attrs: BTreeMap<String, serde_json::Value>,
}

fn root_name() -> String {
    ROOT.to_string()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseJson {
    #[serde(default)]
    xyz: [f64; 3],
    #[serde(default)]
    rpy: [f64; 3],
}

fn attr_from_json(path: &str, v: &serde_json::Value) -> Result<Attr, WorldError> {
    use serde_json::Value as J;
    match v {
        J::Number(n) => Ok(Attr::Num(n.as_f64().unwrap_or(f64::NAN))),
        J::Bool(b) => Ok(Attr::Bool(*b)),
        J::String(s) => Ok(Attr::Str(s.clone())),
        J::Object(_) => {
            let p: PoseJson = serde_json::from_value(v.clone())
                .map_err(|e| WorldError::Schema { path: path.into(), message: e.to_string() })?;
            Ok(Attr::Transform(Transform::from_xyz_rpy(p.xyz, p.rpy)))
        }
        _ => Err(WorldError::Schema {
            path: path.into(),
            message: "attribute must be a number, bool, string or {xyz, rpy} pose".into(),
        }),
    }
}

fn attr_to_json(a: &Attr) -> serde_json::Value {
    match a {
        Attr::Num(x) => serde_json::json!(x),
        Attr::Bool(b) => serde_json::json!(b),
        Attr::Str(s) => serde_json::json!(s),
        Attr::Transform(t) => {
            let v = t.to_vec6();
            serde_json::json!({"xyz": [v[0], v[1], v[2]], "rpy": [v[3], v[4], v[5]]})
        }
    }
}

/// Parses a world file.
pub fn load_world(text: &str) -> Result<World, WorldError> {
    let file: WorldFile = serde_json::from_str(text).map_err(|e| WorldError::Json(e.to_string()))?;

    let mut seen = BTreeSet::new();
    for (i, o) in file.objects.iter().enumerate() {
        if o.name == ROOT || o.name.is_empty() {
            return Err(WorldError::Schema {
                path: format!("objects[{i}].name"),
                message: format!("`{}` is not a valid object name", o.name),
            });
        }
        if !seen.insert(o.name.clone()) {
            return Err(WorldError::Schema {
                path: format!("objects[{i}].name"),
                message: format!("duplicate object `{}`", o.name),
            });
        }
    }
    let by_name: BTreeMap<&str, (usize, &ObjectEntry)> =
        file.objects.iter().enumerate().map(|(i, o)| (o.name.as_str(), (i, o))).collect();
    for (i, o) in file.objects.iter().enumerate() {
        if o.parent != ROOT && !by_name.contains_key(o.parent.as_str()) {
            return Err(WorldError::Schema {
                path: format!("objects[{i}].parent"),
                message: format!("unknown parent `{}`", o.parent),
            });
        }
    }

    // Insert parents before children; anything left over sits on a cycle.
    let mut em = EnvironmentalModel::new();
    let mut pending: Vec<&ObjectEntry> = file.objects.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for o in pending {
            if em.contains(&o.parent) {
                let (i, _) = by_name[o.name.as_str()];
                let mut attributes = BTreeMap::new();
                for (k, v) in &o.attrs {
                    if k == "pose" || k.starts_with("pose.") {
                        return Err(WorldError::Schema {
                            path: format!("objects[{i}].attrs.{k}"),
                            message: "`pose` is reserved".into(),
                        });
                    }
                    attributes.insert(k.clone(), attr_from_json(&format!("objects[{i}].attrs.{k}"), v)?);
                }
                em.insert(SceneObject {
                    name: o.name.clone(),
                    parent: o.parent.clone(),
                    transform: Transform::from_xyz_rpy(o.xyz, o.rpy),
                    attributes,
                })?;
            } else {
                rest.push(o);
            }
        }
        if rest.len() == before {
            let first = rest.iter().map(|o| o.name.as_str()).min().unwrap_or("?");
            return Err(WorldError::Cycle(first.to_string()));
        }
        pending = rest;
    }

    for (i, c) in file.contacts.iter().enumerate() {
        c.check().map_err(|message| WorldError::Schema { path: format!("contacts[{i}]"), message })?;
        for obj in c.referenced_objects() {
            if !em.contains(obj) {
                return Err(WorldError::Schema {
                    path: format!("contacts[{i}]"),
                    message: format!("unknown object `{obj}`"),
                });
            }
        }
    }
    if file.perception.sigma_pos < 0.0 || file.perception.sigma_rot < 0.0 {
        return Err(WorldError::Schema { path: "perception".into(), message: "sigmas must be >= 0".into() });
    }
    if file.gripper.max_width <= 0.0 {
        return Err(WorldError::Schema { path: "gripper.max_width".into(), message: "must be > 0".into() });
    }

    Ok(World { em, contacts: file.contacts, perception: file.perception, gripper: file.gripper })
}

/// Serializes a world back to the file format. Objects are written parents
/// first.
pub fn save_world(world: &World) -> String {
    let mut order: Vec<&SceneObject> = Vec::new();
    let mut placed: BTreeSet<&str> = BTreeSet::new();
    placed.insert(ROOT);
    while order.len() < world.em.objects.len() {
        for o in world.em.objects.values() {
            if !placed.contains(o.name.as_str()) && placed.contains(o.parent.as_str()) {
                placed.insert(&o.name);
                order.push(o);
            }
        }
    }
    let objects = order
        .into_iter()
        .map(|o| {
            let v = o.transform.to_vec6();
            ObjectEntry {
                name: o.name.clone(),
                parent: o.parent.clone(),
                xyz: [v[0], v[1], v[2]],
                rpy: [v[3], v[4], v[5]],
                attrs: o.attributes.iter().map(|(k, a)| (k.clone(), attr_to_json(a))).collect(),
            }
        })
        .collect();
    let file = WorldFile {
        objects,
        contacts: world.contacts.clone(),
        perception: world.perception.clone(),
        gripper: world.gripper.clone(),
        notes: Vec::new(),
    };
    serde_json::to_string_pretty(&file).expect("world serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obj(name: &str, parent: &str, t: Transform) -> SceneObject {
        SceneObject { name: name.into(), parent: parent.into(), transform: t, attributes: BTreeMap::new() }
    }

    fn two_level() -> EnvironmentalModel {
        let mut em = EnvironmentalModel::new();
        em.insert(obj("A", ROOT, Transform::from_translation(1.0, 0.0, 0.0))).unwrap();
        em.insert(obj("B", "A", Transform::from_translation(0.0, 2.0, 0.0))).unwrap();
        em
    }

    #[test]
    fn self_reference_is_identity() {
        let em = two_level();
        let t = resolve_pose(&em, "B", "B").unwrap();
        assert!(t.max_abs_diff(&Transform::identity()) < 1e-15);
    }

    #[test]
    fn chained_translation() {
        let em = two_level();
        let t = resolve_pose(&em, "B", ROOT).unwrap();
        assert_eq!(t.translation, nalgebra::Vector3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn inverse_symmetry() {
        let mut em = two_level();
        em.insert(obj("C", "A", Transform::from_xyz_rpy([0.1, 0.2, 0.3], [0.3, -0.1, 1.2]))).unwrap();
        let ab = resolve_pose(&em, "C", "B").unwrap();
        let ba = resolve_pose(&em, "B", "C").unwrap();
        assert!(ab.max_abs_diff(&ba.inverse()) < 1e-12);
    }

    #[test]
    fn unknown_object() {
        let em = two_level();
        assert_eq!(resolve_pose(&em, "ghost", ROOT), Err(WorldError::UnknownObject("ghost".into())));
    }

    #[test]
    fn pose_update_replaces_world_pose() {
        let mut em = two_level();
        let target = Transform::from_xyz_rpy([0.5, 0.5, 0.1], [0.0, 0.0, 0.4]);
        apply_update(&mut em, "world.B.pose", Attr::Transform(target)).unwrap();
        assert_eq!(em.revision(), 1);
        assert!(em.world_pose("B").unwrap().max_abs_diff(&target) < 1e-12);
        // Stored relative to the parent A.
        assert!((em.object("B").unwrap().transform.translation.x + 0.5).abs() < 1e-12);
    }

    #[test]
    fn attribute_created() {
        let mut em = two_level();
        apply_update(&mut em, "world.A.grasped", Attr::Bool(true)).unwrap();
        assert_eq!(em.object("A").unwrap().attributes["grasped"], Attr::Bool(true));
        assert_eq!(em.revision(), 1);
    }

    #[test]
    fn update_errors_leave_revision() {
        let mut em = two_level();
        assert_eq!(
            apply_update(&mut em, "world.ghost.pose", Attr::Transform(Transform::identity())),
            Err(WorldError::UnknownObject("ghost".into()))
        );
        assert!(matches!(apply_update(&mut em, "A.pose", Attr::Num(1.0)), Err(WorldError::TypeMismatch { .. })));
        assert!(matches!(apply_update(&mut em, "A", Attr::Num(1.0)), Err(WorldError::BadPath(_))));
        assert_eq!(em.revision(), 0);
    }

    #[test]
    fn read_pose_components() {
        let em = two_level();
        let p = |s: &str| s.split('.').map(String::from).collect::<Vec<_>>();
        assert_eq!(em.read(&p("B.pose.y")).unwrap(), Attr::Num(2.0));
        assert_eq!(em.read(&p("world.B.pose.x")).unwrap(), Attr::Num(1.0));
        assert!(em.read(&p("B.nothing")).is_err());
    }

    #[test]
    fn load_empty_world() {
        let w = load_world(r#"{"objects": []}"#).unwrap();
        assert_eq!(w.em.objects().count(), 0);
        assert!(w.em.contains(ROOT));
    }

    #[test]
    fn load_detects_cycle() {
        let text = r#"{"objects":[{"name":"a","parent":"b"},{"name":"b","parent":"a"}]}"#;
        assert_eq!(load_world(text).unwrap_err().to_string(), "cycle at a");
    }

    #[test]
    fn load_rejects_unknown_parent_with_path() {
        let text = r#"{"objects":[{"name":"a","parent":"zzz"}]}"#;
        let err = load_world(text).unwrap_err().to_string();
        assert!(err.starts_with("objects[0].parent"), "{err}");
    }

    #[test]
    fn load_out_of_order_parents() {
        let text = r#"{"objects":[{"name":"b","parent":"a","xyz":[0,1,0]},{"name":"a","xyz":[1,0,0]}]}"#;
        let w = load_world(text).unwrap();
        assert_eq!(w.em.world_pose("b").unwrap().translation, nalgebra::Vector3::new(1.0, 1.0, 0.0));
    }

    #[test]
    fn save_then_load_is_stable() {
        let text = r#"{"objects":[{"name":"a","xyz":[1,0,0],"rpy":[0.1,0.2,0.3],"attrs":{"w":0.02,"g":true,"s":"x","t":{"xyz":[0,0,1]}}},{"name":"b","parent":"a"}],
            "contacts":[{"kind":"plane","normal":[0,0,1],"offset":0.0,"k":500}],
            "perception":{"sigma_pos":0.001,"sigma_rot":0.01},"gripper":{"max_width":0.04}}"#;
        let w = load_world(text).unwrap();
        let again = load_world(&save_world(&w)).unwrap();
        assert_eq!(again.contacts, w.contacts);
        assert_eq!(again.perception, w.perception);
        for o in w.em.objects() {
            let p = again.em.object(&o.name).unwrap();
            assert!(o.transform.max_abs_diff(&p.transform) < 1e-12);
            assert_eq!(o.parent, p.parent);
        }
        assert_eq!(load_world(text).unwrap(), w);
    }
}
