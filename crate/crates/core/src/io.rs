//! JSON output for reports and certificates.
//!
//! Every float is written with 17 significant digits, so a value read back
//! is bit-identical. Non-finite floats become the strings `"inf"`, `"-inf"`
//! and `"nan"`. Object keys are sorted, so equal inputs give byte-identical
//! documents.

use crate::error::{Error, Result};
use serde::Serialize;
use serde_value::Value;
use std::fmt::Write;

/// A float with 17 significant digits, or a quoted tag when non-finite.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "\"nan\"".into()
    } else if x.is_infinite() {
        if x > 0.0 { "\"inf\"".into() } else { "\"-inf\"".into() }
    } else if x == 0.0 {
        // Keeps the sign of -0.0.
        if x.is_sign_negative() { "-0.0".into() } else { "0.0".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn key_text(k: &Value) -> Result<String> {
    Ok(match k {
        Value::String(s) => s.clone(),
        Value::Char(c) => c.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::U8(v) => v.to_string(),
        Value::U16(v) => v.to_string(),
        Value::U32(v) => v.to_string(),
        Value::U64(v) => v.to_string(),
        Value::I8(v) => v.to_string(),
        Value::I16(v) => v.to_string(),
        Value::I32(v) => v.to_string(),
        Value::I64(v) => v.to_string(),
        Value::Newtype(v) => key_text(v)?,
        other => return Err(Error::InvalidArgument(format!("unsupported map key {other:?}"))),
    })
}

fn emit(v: &Value, indent: usize, out: &mut String) -> Result<()> {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Unit | Value::Option(None) => out.push_str("null"),
        Value::Option(Some(inner)) | Value::Newtype(inner) => emit(inner, indent, out)?,
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::U8(x) => write!(out, "{x}").unwrap(),
        Value::U16(x) => write!(out, "{x}").unwrap(),
        Value::U32(x) => write!(out, "{x}").unwrap(),
        Value::U64(x) => write!(out, "{x}").unwrap(),
        Value::I8(x) => write!(out, "{x}").unwrap(),
        Value::I16(x) => write!(out, "{x}").unwrap(),
        Value::I32(x) => write!(out, "{x}").unwrap(),
        Value::I64(x) => write!(out, "{x}").unwrap(),
        Value::F32(x) => out.push_str(&format_f64(*x as f64)),
        Value::F64(x) => out.push_str(&format_f64(*x)),
        Value::Char(c) => out.push_str(&quote(&c.to_string())),
        Value::String(s) => out.push_str(&quote(s)),
        Value::Bytes(b) => {
            let items: Vec<Value> = b.iter().map(|x| Value::U8(*x)).collect();
            emit(&Value::Seq(items), indent, out)?;
        }
        Value::Seq(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            // Short rows of scalars stay on one line.
            let flat = items.len() <= 8 && items.iter().all(|i| !matches!(i, Value::Seq(_) | Value::Map(_)));
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                    if flat {
                        out.push(' ');
                    }
                }
                if !flat {
                    out.push('\n');
                    out.push_str(&pad(indent + 1));
                }
                emit(item, indent + 1, out)?;
            }
            if !flat {
                out.push('\n');
                out.push_str(&pad(indent));
            }
            out.push(']');
        }
        Value::Map(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            let mut entries: Vec<(String, &Value)> =
                map.iter().map(|(k, v)| Ok((key_text(k)?, v))).collect::<Result<_>>()?;
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            out.push('{');
            for (i, (k, val)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push('\n');
                out.push_str(&pad(indent + 1));
                out.push_str(&quote(k));
                out.push_str(": ");
                emit(val, indent + 1, out)?;
            }
            out.push('\n');
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let tree = serde_value::to_value(value).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut out = String::new();
    emit(&tree, 0, &mut out)?;
    out.push('\n');
    Ok(out)
}

/// Inverse of [`format_f64`] for values read back from a document.
pub fn parse_f64(v: &serde_json::Value) -> Option<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64(),
        serde_json::Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[derive(Serialize)]
    struct Doc {
        zeta: f64,
        alpha: Option<f64>,
        list: Vec<f64>,
        tag: Kind,
    }

    #[derive(Serialize)]
    enum Kind {
        Plain,
    }

    #[test]
    fn keys_are_sorted_and_non_finite_is_tagged() {
        let d = Doc { zeta: f64::INFINITY, alpha: None, list: vec![f64::NAN, -1.5], tag: Kind::Plain };
        let s = to_json(&d).unwrap();
        assert!(s.find("\"alpha\"").unwrap() < s.find("\"zeta\"").unwrap());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["zeta"], "inf");
        assert!(v["alpha"].is_null());
        assert_eq!(v["list"][0], "nan");
        assert_eq!(v["list"][1].as_f64(), Some(-1.5));
        assert_eq!(v["tag"], "Plain");
    }

    #[test]
    fn hash_map_output_is_deterministic() {
        let a: HashMap<String, f64> = (0..50).map(|i| (format!("k{i}"), i as f64)).collect();
        let b: HashMap<String, f64> = (0..50).rev().map(|i| (format!("k{i}"), i as f64)).collect();
        assert_eq!(to_json(&a).unwrap(), to_json(&b).unwrap());
    }

    #[test]
    fn seventeen_digits() {
        let s = format_f64(0.1);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
        assert_eq!(format_f64(-0.0), "-0.0");
    }

    proptest! {
        #[test]
        fn floats_round_trip_exactly(x in any::<f64>()) {
            let s = format_f64(x);
            let v: serde_json::Value = serde_json::from_str(&s).unwrap();
            let y = parse_f64(&v).unwrap();
            if x.is_nan() {
                prop_assert!(y.is_nan());
            } else {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}
