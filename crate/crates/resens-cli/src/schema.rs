//! Minimal JSON schema validation covering the subset our shipped schemas
//! use: `type` (string or list of strings), `properties`, `required`,
//! `items`, `enum`, and boolean `additionalProperties`. Unknown keywords are
//! ignored, matching standard schema semantics.

use serde_json::Value;

pub fn validate(schema: &Value, doc: &Value) -> Result<(), String> {
    validate_at(schema, doc, "$")
}

fn type_matches(name: &str, doc: &Value) -> bool {
    match name {
        "object" => doc.is_object(),
        "array" => doc.is_array(),
        "string" => doc.is_string(),
        "number" => doc.is_number(),
        "integer" => doc.is_i64() || doc.is_u64(),
        "boolean" => doc.is_boolean(),
        "null" => doc.is_null(),
        _ => false,
    }
}

fn validate_at(schema: &Value, doc: &Value, path: &str) -> Result<(), String> {
    let obj = match schema.as_object() {
        Some(o) => o,
        None => return Err(format!("{path}: schema node is not an object")),
    };

    if let Some(ty) = obj.get("type") {
        let names: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(|v| v.as_str()).collect(),
            _ => return Err(format!("{path}: malformed type keyword")),
        };
        if !names.iter().any(|n| type_matches(n, doc)) {
            return Err(format!(
                "{path}: expected type {}, got {}",
                names.join(" or "),
                type_name(doc)
            ));
        }
    }

    if let Some(allowed) = obj.get("enum").and_then(Value::as_array) {
        if !allowed.contains(doc) {
            return Err(format!("{path}: value {doc} not in enum"));
        }
    }

    if let Some(d) = doc.as_object() {
        if let Some(required) = obj.get("required").and_then(Value::as_array) {
            for r in required.iter().filter_map(|v| v.as_str()) {
                if !d.contains_key(r) {
                    return Err(format!("{path}: missing required field {r:?}"));
                }
            }
        }
        let props = obj.get("properties").and_then(Value::as_object);
        if let Some(props) = props {
            for (key, sub) in props {
                if let Some(v) = d.get(key) {
                    validate_at(sub, v, &format!("{path}.{key}"))?;
                }
            }
        }
        if obj.get("additionalProperties") == Some(&Value::Bool(false)) {
            for key in d.keys() {
                if props.map(|p| !p.contains_key(key)).unwrap_or(true) {
                    return Err(format!("{path}: unexpected field {key:?}"));
                }
            }
        }
    }

    if let (Some(items), Some(arr)) = (obj.get("items"), doc.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate_at(items, v, &format!("{path}[{i}]"))?;
        }
    }

    Ok(())
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}
