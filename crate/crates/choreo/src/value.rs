//! Runtime values exchanged between roles and services.
//!
//! The value model is JSON-isomorphic: strings, signed integers, booleans,
//! lists, and records with string keys. Records keep their keys sorted, so
//! the JSON encoding is deterministic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A value stored in a role's variable store or carried in a message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
    List(Vec<Value>),
    Record(BTreeMap<String, Value>),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn record(fields: impl IntoIterator<Item = (&'static str, Value)>) -> Value {
        Value::Record(
            fields
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        )
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Str(_) => "string",
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::List(_) => "list",
            Value::Record(_) => "record",
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Field lookup on records; `None` for non-records and missing keys.
    pub fn field(&self, name: &str) -> Option<&Value> {
        match self {
            Value::Record(m) => m.get(name),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", encode_value(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed value at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("unsupported JSON value at {context}: {message}")]
    Unsupported { context: String, message: String },
}

/// Encode a value as deterministic JSON (record keys sorted, no extra whitespace).
pub fn encode_value(v: &Value) -> String {
    serde_json::to_string(v).expect("value encoding cannot fail")
}

/// Decode a value from JSON text. Rejects nulls and non-integer numbers,
/// which have no counterpart in the value model.
pub fn decode_value(text: &str) -> Result<Value, CodecError> {
    let json: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        let offset = offset_of(text, e.line(), e.column());
        CodecError::Malformed {
            offset,
            message: e.to_string(),
        }
    })?;
    from_json(&json, "$")
}

/// Translate serde_json's 1-based line/column into a byte offset.
fn offset_of(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut remaining = line - 1;
    let mut offset = 0;
    for (i, b) in text.bytes().enumerate() {
        if remaining == 0 {
            break;
        }
        if b == b'\n' {
            remaining -= 1;
            offset = i + 1;
        }
    }
    offset + column.saturating_sub(1)
}

pub(crate) fn from_json(json: &serde_json::Value, context: &str) -> Result<Value, CodecError> {
    use serde_json::Value as J;
    match json {
        J::Bool(b) => Ok(Value::Bool(*b)),
        J::Number(n) => n.as_i64().map(Value::Int).ok_or_else(|| CodecError::Unsupported {
            context: context.to_string(),
            message: format!("number {n} is not a signed 64-bit integer"),
        }),
        J::String(s) => Ok(Value::Str(s.clone())),
        J::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| from_json(item, &format!("{context}[{i}]")))
            .collect::<Result<Vec<_>, _>>()
            .map(Value::List),
        J::Object(map) => map
            .iter()
            .map(|(k, v)| Ok((k.clone(), from_json(v, &format!("{context}.{k}"))?)))
            .collect::<Result<BTreeMap<_, _>, _>>()
            .map(Value::Record),
        J::Null => Err(CodecError::Unsupported {
            context: context.to_string(),
            message: "null has no value counterpart".to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trips() {
        let v = Value::record([("title", Value::str("Earl Gray"))]);
        let text = encode_value(&v);
        assert_eq!(text, r#"{"title":"Earl Gray"}"#);
        assert_eq!(decode_value(&text).unwrap(), v);
    }

    #[test]
    fn empty_list_round_trips() {
        let v = Value::List(vec![]);
        let text = encode_value(&v);
        assert_eq!(text, "[]");
        assert_eq!(decode_value(&text).unwrap(), v);
    }

    #[test]
    fn record_keys_are_sorted() {
        let v = Value::record([("z", Value::Int(1)), ("a", Value::Int(2))]);
        assert_eq!(encode_value(&v), r#"{"a":2,"z":1}"#);
    }

    #[test]
    fn malformed_text_reports_offset() {
        let err = decode_value("{\"a\": }").unwrap_err();
        match err {
            CodecError::Malformed { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn floats_and_nulls_are_rejected() {
        assert!(decode_value("1.5").is_err());
        assert!(decode_value("null").is_err());
        assert!(decode_value("[1, null]").is_err());
    }
}
