//! Structural validation of emitted JSON against the shipped schema files.
//!
//! Supports the subset of JSON Schema the records need: type, properties,
//! required, items, enum, and nullable unions via ["X", "null"].

use anyhow::{anyhow, bail};
use serde_json::Value;

pub fn shipped(name: &str) -> Option<&'static str> {
    match name {
        "dispersion" => Some(include_str!("../schemas/dispersion.schema.json")),
        "solitary" => Some(include_str!("../schemas/solitary.schema.json")),
        "periodic" => Some(include_str!("../schemas/periodic.schema.json")),
        "jost" => Some(include_str!("../schemas/jost.schema.json")),
        "micropteron" => Some(include_str!("../schemas/micropteron.schema.json")),
        "solution" => Some(include_str!("../schemas/solution.schema.json")),
        "simulate" => Some(include_str!("../schemas/simulate.schema.json")),
        "diagnostics" => Some(include_str!("../schemas/diagnostics.schema.json")),
        _ => None,
    }
}

pub fn validate(schema_name: &str, value: &Value) -> anyhow::Result<()> {
    let text = shipped(schema_name)
        .ok_or_else(|| anyhow!("no shipped schema named {schema_name:?}"))?;
    let schema: Value = serde_json::from_str(text)?;
    check_with_root(&schema, &schema, value, schema_name)
}

/// Resolve "#/definitions/<name>" references against the document root.
fn resolve<'a>(root: &'a Value, reference: &str) -> anyhow::Result<&'a Value> {
    let name = reference
        .strip_prefix("#/definitions/")
        .ok_or_else(|| anyhow!("unsupported $ref {reference:?}"))?;
    root.get("definitions")
        .and_then(|d| d.get(name))
        .ok_or_else(|| anyhow!("dangling $ref {reference:?}"))
}

fn type_matches(ty: &str, value: &Value) -> bool {
    match ty {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "number" => value.is_number(),
        "integer" => value.is_i64() || value.is_u64(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        _ => false,
    }
}

fn check_with_root(root: &Value, schema: &Value, value: &Value, path: &str) -> anyhow::Result<()> {
    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        return check_with_root(root, resolve(root, reference)?, value, path);
    }
    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            Value::String(one) => type_matches(one, value),
            Value::Array(types) => types
                .iter()
                .filter_map(|t| t.as_str())
                .any(|t| type_matches(t, value)),
            _ => bail!("{path}: malformed type clause"),
        };
        if !ok {
            bail!("{path}: value {value} does not match type {ty}");
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            bail!("{path}: value {value} not in enum {allowed:?}");
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        if let Some(obj) = value.as_object() {
            for (key, sub) in props {
                if let Some(v) = obj.get(key) {
                    check_with_root(root, sub, v, &format!("{path}.{key}"))?;
                }
            }
        }
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        let obj = value
            .as_object()
            .ok_or_else(|| anyhow!("{path}: required clause on non-object"))?;
        for key in required.iter().filter_map(Value::as_str) {
            if !obj.contains_key(key) {
                bail!("{path}: missing required field {key:?}");
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                check_with_root(root, items, v, &format!("{path}[{i}]"))?;
            }
        }
    }
    Ok(())
}
