//! Report schema: a shipped JSON-Schema document plus a validator for the
//! subset of keywords the schema uses (type, properties, required, items,
//! enum, oneOf, additionalProperties as a boolean).

use serde_json::Value;

pub const REPORT_SCHEMA: &str = include_str!("../schemas/report.schema.json");

pub fn report_schema() -> Value {
    serde_json::from_str(REPORT_SCHEMA).expect("shipped schema is valid JSON")
}

/// Validate `value` against `schema`, returning the first violation found.
pub fn validate(value: &Value, schema: &Value) -> Result<(), String> {
    validate_at(value, schema, "$")
}

fn validate_at(value: &Value, schema: &Value, path: &str) -> Result<(), String> {
    let obj = match schema.as_object() {
        Some(o) => o,
        None => return Err(format!("{path}: schema node is not an object")),
    };

    if let Some(one_of) = obj.get("oneOf").and_then(Value::as_array) {
        let mut errors = Vec::new();
        let mut matches = 0usize;
        for (i, sub) in one_of.iter().enumerate() {
            match validate_at(value, sub, path) {
                Ok(()) => matches += 1,
                Err(e) => errors.push(format!("alternative {i}: {e}")),
            }
        }
        if matches != 1 {
            return Err(format!(
                "{path}: matched {matches} of {} oneOf alternatives ({})",
                one_of.len(),
                errors.join("; ")
            ));
        }
    }

    if let Some(ty) = obj.get("type") {
        let allowed: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => return Err(format!("{path}: malformed 'type'")),
        };
        let actual = json_type(value);
        let ok = allowed.iter().any(|&t| {
            t == actual || (t == "number" && actual == "integer")
        });
        if !ok {
            return Err(format!(
                "{path}: expected type {}, found {actual}",
                allowed.join("|")
            ));
        }
    }

    if let Some(variants) = obj.get("enum").and_then(Value::as_array) {
        if !variants.contains(value) {
            return Err(format!("{path}: value {value} not in enum"));
        }
    }

    if let Some(props) = obj.get("properties").and_then(Value::as_object) {
        if let Some(map) = value.as_object() {
            for (k, sub) in props {
                if let Some(v) = map.get(k) {
                    validate_at(v, sub, &format!("{path}.{k}"))?;
                }
            }
            if obj.get("additionalProperties") == Some(&Value::Bool(false)) {
                for k in map.keys() {
                    if !props.contains_key(k) {
                        return Err(format!("{path}: unexpected property '{k}'"));
                    }
                }
            }
        }
    }

    if let Some(required) = obj.get("required").and_then(Value::as_array) {
        let map = value
            .as_object()
            .ok_or_else(|| format!("{path}: required fields on non-object"))?;
        for k in required.iter().filter_map(Value::as_str) {
            if !map.contains_key(k) {
                return Err(format!("{path}: missing required property '{k}'"));
            }
        }
    }

    if let Some(items) = obj.get("items") {
        if let Some(arr) = value.as_array() {
            for (i, v) in arr.iter().enumerate() {
                validate_at(v, items, &format!("{path}[{i}]"))?;
            }
        }
    }

    Ok(())
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                "integer"
            } else {
                "number"
            }
        }
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}
