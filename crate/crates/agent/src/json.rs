//! Relaxed extraction of a JSON object from model output, followed by a
//! strict key check.
//!
//! A fenced block wins over bare text. Inside the chosen text the first
//! balanced `{...}` object is taken, with braces inside string literals
//! ignored.

use std::collections::BTreeSet;

use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no JSON object found")]
    NoObject,
    #[error("unbalanced braces: object opened at byte {0} never closes")]
    Unbalanced(usize),
    #[error("invalid JSON: {0}")]
    Invalid(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
}

/// Byte range `start..end` of the first balanced object in `text`.
pub fn find_balanced_object(text: &str) -> Result<(usize, usize), ExtractError> {
    let bytes = text.as_bytes();
    let start = text.find('{').ok_or(ExtractError::NoObject)?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_str {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_str = false;
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok((start, i + 1));
                }
            }
            _ => {}
        }
    }
    Err(ExtractError::Unbalanced(start))
}

/// Bodies of ``` fences, in order. An info string on the opening line
/// (`json`, `JSON`, ...) is dropped.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = match after.find('\n') {
            Some(nl) if after[..nl].trim().chars().all(|c| c.is_ascii_alphanumeric()) => nl + 1,
            _ => 0,
        };
        let body = &after[body_start..];
        match body.find("```") {
            Some(close) => {
                out.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    out
}

/// The JSON object embedded in `text`.
pub fn extract_json_object(text: &str) -> Result<Map<String, Value>, ExtractError> {
    let source = fenced_blocks(text)
        .into_iter()
        .find(|b| b.contains('{'))
        .unwrap_or(text);
    let (s, e) = find_balanced_object(source)?;
    match serde_json::from_str::<Value>(&source[s..e]) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ExtractError::NoObject),
        Err(err) => Err(ExtractError::Invalid(err.to_string())),
    }
}

fn check_keys(obj: &Map<String, Value>, expected: &[&str]) -> Result<(), ExtractError> {
    let want: BTreeSet<&str> = expected.iter().copied().collect();
    let have: BTreeSet<&str> = obj.keys().map(String::as_str).collect();
    let missing: Vec<_> = want.difference(&have).copied().collect();
    let extra: Vec<_> = have.difference(&want).copied().collect();
    if missing.is_empty() && extra.is_empty() {
        return Ok(());
    }
    let mut parts = Vec::new();
    if !missing.is_empty() {
        parts.push(format!("missing keys {}", missing.join(", ")));
    }
    if !extra.is_empty() {
        parts.push(format!("unexpected keys {}", extra.join(", ")));
    }
    Err(ExtractError::Schema(parts.join("; ")))
}

fn string_field(obj: &Map<String, Value>, key: &str) -> Result<String, ExtractError> {
    obj[key]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| ExtractError::Schema(format!("key {key} must be a string")))
}

/// A generation or revision payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub model: String,
    pub data: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub aligned: bool,
    pub assessment: String,
}

pub fn parse_generation(text: &str) -> Result<Generated, ExtractError> {
    let obj = extract_json_object(text)?;
    check_keys(&obj, &["model", "data"])?;
    Ok(Generated { model: string_field(&obj, "model")?, data: string_field(&obj, "data")? })
}

pub fn parse_verdict(text: &str) -> Result<Verdict, ExtractError> {
    let obj = extract_json_object(text)?;
    check_keys(&obj, &["aligned", "assessment"])?;
    let aligned = obj["aligned"]
        .as_bool()
        .ok_or_else(|| ExtractError::Schema("key aligned must be a boolean".into()))?;
    let assessment = string_field(&obj, "assessment")?;
    if assessment.trim().is_empty() {
        return Err(ExtractError::Schema("assessment is empty".into()));
    }
    Ok(Verdict { aligned, assessment })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_block_is_preferred() {
        let text = "Here you go: ```json\n{\"model\":\"m\",\"data\":\"d\"}\n```";
        let g = parse_generation(text).unwrap();
        assert_eq!(g, Generated { model: "m".into(), data: "d".into() });

        let both = "{\"model\":\"bare\",\"data\":\"x\"}\n```json\n{\"model\":\"fenced\",\"data\":\"y\"}\n```";
        assert_eq!(parse_generation(both).unwrap().model, "fenced");
    }

    #[test]
    fn prose_around_a_bare_object_is_ignored() {
        let v = parse_verdict("prefix {\"aligned\":true,\"assessment\":\"ok ok ok\"} suffix").unwrap();
        assert!(v.aligned);
        assert_eq!(v.assessment, "ok ok ok");
    }

    #[test]
    fn braces_inside_strings_do_not_count() {
        let g = parse_generation("{\"model\":\"a { b\",\"data\":\"}\"}").unwrap();
        assert_eq!(g.model, "a { b");
        assert_eq!(g.data, "}");
        // Escaped quote followed by a brace stays inside the string.
        let g = parse_generation(r#"{"model":"say \"}\" {","data":"\\"} trailing }"#).unwrap();
        assert_eq!(g.model, "say \"}\" {");
        assert_eq!(g.data, "\\");
    }

    #[test]
    fn failures_are_classified() {
        assert_eq!(extract_json_object("no json here"), Err(ExtractError::NoObject));
        assert_eq!(extract_json_object("x { \"a\": 1"), Err(ExtractError::Unbalanced(2)));
        assert!(matches!(extract_json_object("{ nope }"), Err(ExtractError::Invalid(_))));
        let e = parse_generation("{\"model\":\"m\",\"extra\":1}").unwrap_err();
        assert_eq!(e, ExtractError::Schema("missing keys data; unexpected keys extra".into()));
        let e = parse_verdict("{\"aligned\":\"yes\",\"assessment\":\"fine\"}").unwrap_err();
        assert!(e.to_string().contains("boolean"));
        assert!(parse_verdict("{\"aligned\":true,\"assessment\":\"  \"}").is_err());
    }

    #[test]
    fn fence_without_info_string_and_unclosed_fence() {
        let g = parse_generation("```\n{\"model\":\"m\",\"data\":\"d\"}\n```").unwrap();
        assert_eq!(g.model, "m");
        let g = parse_generation("```json\n{\"model\":\"m\",\"data\":\"d\"}").unwrap();
        assert_eq!(g.data, "d");
    }
}
