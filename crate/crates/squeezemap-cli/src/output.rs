use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

/// C-style `%.12e`: 1.250000000000e+01.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
}

/// Single-line JSON with sorted keys and fixed float formatting.
/// Non-finite floats become null.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                out.push_str(&sci(n.as_f64().expect("float")));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push(':');
                write_value(&map[*key], out);
            }
            out.push('}');
        }
    }
}

/// JSON number for finite values, null otherwise.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n", width: header.len() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        let width = header.len();
        Self { text: header.join(",") + "\n", width }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        assert_eq!(cells.len(), self.width, "csv row width");
        let line: Vec<String> = cells.iter().map(Cell::render).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => sci(*x),
            Cell::I(i) => i.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct Artifact {
    /// Appended to the base name, e.g. "-ccw".
    pub suffix: String,
    pub ext: &'static str,
    pub body: String,
}

impl Artifact {
    pub fn json(suffix: &str, v: &Value) -> Self {
        Self { suffix: suffix.into(), ext: "json", body: canonical_json(v) + "\n" }
    }

    pub fn csv(suffix: &str, csv: Csv) -> Self {
        Self { suffix: suffix.into(), ext: "csv", body: csv.into_string() }
    }
}

/// First 16 hex digits of SHA-256 over the canonical identity JSON.
pub fn params_hash(identity: &Value) -> String {
    let digest = Sha256::digest(canonical_json(identity).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn write_all(dir: &Path, base: &str, artifacts: &[Artifact]) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(format!("{base}{}.{}", a.suffix, a.ext));
        fs::write(&path, &a.body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn printf_style_exponent() {
        assert_eq!(sci(12.5), "1.250000000000e+01");
        assert_eq!(sci(-3.0e-7), "-3.000000000000e-07");
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(1e123), "1.000000000000e+123");
    }

    #[test]
    fn keys_are_sorted() {
        let v = json!({"b": 1, "a": [0.5, null, "x"], "c": {"z": true, "y": 2.0}});
        assert_eq!(canonical_json(&v), r#"{"a":[5.000000000000e-01,null,"x"],"b":1,"c":{"y":2.000000000000e+00,"z":true}}"#);
    }

    #[test]
    fn hash_ignores_key_order() {
        assert_eq!(params_hash(&json!({"a": 1, "b": 2})), params_hash(&json!({"b": 2, "a": 1})));
        assert_ne!(params_hash(&json!({"a": 1})), params_hash(&json!({"a": 2})));
    }
}
