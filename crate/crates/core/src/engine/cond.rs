use crate::devices::{Sample, Snapshot};
use crate::model::ConditionExpr;
use crate::world::{Attr, EnvironmentalModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CondError {
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("channel `{channel}` is not {expected}")]
    TypeMismatch { channel: String, expected: &'static str },
}

/// Looks a channel up in the snapshot, then as an environmental-model path
/// (`obj.attr`, `obj.pose.z`, optionally prefixed with `world.`).
pub fn channel_value(path: &str, snapshot: &Snapshot, em: &EnvironmentalModel) -> Result<Sample, CondError> {
    if let Some(s) = snapshot.get(path) {
        return Ok(*s);
    }
    let segs: Vec<String> = path.split('.').map(str::to_string).collect();
    match em.read(&segs) {
        Ok(Attr::Num(x)) => Ok(Sample::Num(x)),
        Ok(Attr::Bool(b)) => Ok(Sample::Bool(b)),
        Ok(_) => Err(CondError::TypeMismatch { channel: path.into(), expected: "a number or a boolean" }),
        Err(_) => Err(CondError::UnknownChannel(path.into())),
    }
}

/// Strict evaluation: both operands of `and`/`or` are always evaluated, so
/// a bad channel is reported regardless of the other operand.
pub fn eval_condition(expr: &ConditionExpr, snapshot: &Snapshot, em: &EnvironmentalModel) -> Result<bool, CondError> {
    Ok(match expr {
        ConditionExpr::Or(a, b) => {
            let x = eval_condition(a, snapshot, em)?;
            let y = eval_condition(b, snapshot, em)?;
            x || y
        }
        ConditionExpr::And(a, b) => {
            let x = eval_condition(a, snapshot, em)?;
            let y = eval_condition(b, snapshot, em)?;
            x && y
        }
        ConditionExpr::Not(a) => !eval_condition(a, snapshot, em)?,
        ConditionExpr::Const(b) => *b,
        ConditionExpr::Compare { channel, op, value } => match channel_value(channel, snapshot, em)? {
            Sample::Num(x) => op.apply(x, *value),
            Sample::Bool(_) => return Err(CondError::TypeMismatch { channel: channel.clone(), expected: "numeric" }),
        },
        ConditionExpr::Channel(channel) => match channel_value(channel, snapshot, em)? {
            Sample::Bool(b) => b,
            Sample::Num(_) => return Err(CondError::TypeMismatch { channel: channel.clone(), expected: "boolean" }),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_condition;
    use crate::world::load_world;

    fn snap(pairs: &[(&str, Sample)]) -> Snapshot {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn torque_threshold() {
        let s = snap(&[("robot.torque.z", Sample::Num(0.33))]);
        let c = parse_condition("robot.torque.z >= 0.32").unwrap();
        assert!(eval_condition(&c, &s, &EnvironmentalModel::new()).unwrap());
    }

    #[test]
    fn constants() {
        let c = parse_condition("not true").unwrap();
        assert!(!eval_condition(&c, &Snapshot::new(), &EnvironmentalModel::new()).unwrap());
    }

    #[test]
    fn em_paths_and_errors() {
        let w = load_world(r#"{"objects":[{"name":"screw","xyz":[0,0,0.02],"attrs":{"grasped":true,"label":"m3"}}]}"#)
            .unwrap();
        let s = Snapshot::new();
        let ok = parse_condition("screw.grasped and world.screw.pose.z < 0.03").unwrap();
        assert!(eval_condition(&ok, &s, &w.em).unwrap());
        let unknown = parse_condition("true or robot.force.z < 1").unwrap();
        assert_eq!(
            eval_condition(&unknown, &s, &w.em),
            Err(CondError::UnknownChannel("robot.force.z".into()))
        );
        let bad = parse_condition("screw.grasped > 0").unwrap();
        assert!(matches!(eval_condition(&bad, &s, &w.em), Err(CondError::TypeMismatch { .. })));
        let text = parse_condition("screw.label").unwrap();
        assert!(matches!(eval_condition(&text, &s, &w.em), Err(CondError::TypeMismatch { .. })));
    }
}
