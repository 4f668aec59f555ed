//! Instance JSON format.
//!
//! ```json
//! {"deadline": 5,
//!  "actions": {"a": {"planning": {"1": "0.5", "4": "0.5"},
//!                    "execution": {"1": 0.5, "never": 0.5}}},
//!  "skeletons": [["a"]]}
//! ```
//!
//! Step keys are decimal integers, `"never"` is optional. Probabilities may be
//! JSON numbers or strings (`"0.25"`, `"1/3"`); numbers are read from their
//! literal text so no binary rounding happens. Output always uses strings.

use std::path::Path;

use num_traits::Zero;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::{ActionSpec, DiscreteDist, PlanSkeleton, ProblemInstance};
use crate::prob::{format_rational, parse_rational, Rational};

pub fn from_json_str(text: &str) -> Result<ProblemInstance> {
    let value: Value = serde_json::from_str(text)?;
    from_value(&value)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    from_json_str(&std::fs::read_to_string(path)?)
}

pub fn to_json_string(inst: &ProblemInstance) -> String {
    let mut text = serde_json::to_string_pretty(&to_value(inst)).expect("JSON values serialise");
    text.push('\n');
    text
}

pub fn write_instance(inst: &ProblemInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json_string(inst))?;
    Ok(())
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn from_value(value: &Value) -> Result<ProblemInstance> {
    let root = value.as_object().ok_or_else(|| parse_err("instance must be a JSON object"))?;
    let deadline = root
        .get("deadline")
        .and_then(Value::as_u64)
        .ok_or_else(|| parse_err("`deadline` must be a non-negative integer"))?;
    let deadline = u32::try_from(deadline).map_err(|_| parse_err("`deadline` too large"))?;
    let actions = root
        .get("actions")
        .and_then(Value::as_object)
        .ok_or_else(|| parse_err("`actions` must be an object"))?;
    let mut catalog = Vec::with_capacity(actions.len());
    for (id, spec) in actions {
        let spec = spec
            .as_object()
            .ok_or_else(|| parse_err(format!("action `{id}` must be an object")))?;
        let dist = |kind: &str| -> Result<DiscreteDist> {
            let v = spec
                .get(kind)
                .ok_or_else(|| parse_err(format!("action `{id}` lacks `{kind}`")))?;
            dist_from_value(v, deadline).map_err(|e| parse_err(format!("actions.{id}.{kind}: {e}")))
        };
        catalog.push(ActionSpec::new(id.clone(), dist("planning")?, dist("execution")?));
    }
    let skeletons = root
        .get("skeletons")
        .and_then(Value::as_array)
        .ok_or_else(|| parse_err("`skeletons` must be an array"))?
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let ids = s
                .as_array()
                .ok_or_else(|| parse_err(format!("skeletons[{k}] must be an array")))?
                .iter()
                .map(|id| {
                    id.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| parse_err(format!("skeletons[{k}] holds a non-string id")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(PlanSkeleton { actions: ids })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProblemInstance::new(deadline, catalog, skeletons))
}

fn prob_from_value(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => parse_rational(&n.to_string()),
        other => Err(parse_err(format!("probability must be a number or string, got {other}"))),
    }
}

pub fn dist_from_value(v: &Value, horizon: u32) -> Result<DiscreteDist> {
    let obj = v.as_object().ok_or_else(|| parse_err("distribution must be an object"))?;
    let mut atoms = Vec::new();
    let mut never = Rational::zero();
    for (key, p) in obj {
        let p = prob_from_value(p)?;
        if key == "never" {
            never = p;
        } else {
            let step: u32 = key.parse().map_err(|_| parse_err(format!("bad step key `{key}`")))?;
            atoms.push((step, p));
        }
    }
    Ok(DiscreteDist::from_parts(horizon, atoms, never))
}

pub fn dist_to_value(d: &DiscreteDist) -> Value {
    let mut m = Map::new();
    for (t, p) in d.atoms() {
        m.insert(t.to_string(), Value::String(format_rational(p)));
    }
    if !d.never_mass().is_zero() {
        m.insert("never".into(), Value::String(format_rational(d.never_mass())));
    }
    Value::Object(m)
}

pub fn to_value(inst: &ProblemInstance) -> Value {
    let mut actions = Map::new();
    for a in inst.catalog() {
        let mut spec = Map::new();
        spec.insert("planning".into(), dist_to_value(&a.planning));
        spec.insert("execution".into(), dist_to_value(&a.execution));
        actions.insert(a.id.clone(), Value::Object(spec));
    }
    let skeletons = inst
        .skeletons()
        .iter()
        .map(|s| Value::Array(s.actions.iter().cloned().map(Value::String).collect()))
        .collect();
    let mut root = Map::new();
    root.insert("deadline".into(), Value::from(inst.deadline()));
    root.insert("actions".into(), Value::Object(actions));
    root.insert("skeletons".into(), Value::Array(skeletons));
    Value::Object(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use crate::prob::ratio;

    #[test]
    fn figure_instance_round_trips_exactly() {
        let inst = instances::fig3();
        let text = to_json_string(&inst);
        let back = from_json_str(&text).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn numbers_keep_their_decimal_value() {
        let text = r#"{"deadline": 3,
            "actions": {"a": {"planning": {"1": 0.1, "2": "0.9"}, "execution": {"1": "1/3", "never": "2/3"}}},
            "skeletons": [["a"]]}"#;
        let inst = from_json_str(text).unwrap();
        let a = inst.action("a").unwrap();
        assert_eq!(a.planning.prob(1), ratio(1, 10));
        assert_eq!(*a.execution.never_mass(), ratio(2, 3));
        assert!(inst.validate().is_empty());
    }

    #[test]
    fn malformed_documents_are_parse_errors() {
        assert!(matches!(from_json_str("[]"), Err(Error::Parse(_))));
        assert!(matches!(
            from_json_str(r#"{"deadline": 3, "actions": {"a": {"planning": {"x": 1}, "execution": {}}}, "skeletons": []}"#),
            Err(Error::Parse(_))
        ));
        assert!(from_json_str("{").is_err());
    }
}
