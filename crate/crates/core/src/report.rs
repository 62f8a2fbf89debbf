//! Common framing for machine-readable outputs.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON output: the resolved run configuration followed by the result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a serde_json::Value,
    pub result: &'a T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, seed: u64, config: &'a serde_json::Value, result: &'a T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            seed,
            config,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

/// The `result` of an [`Envelope`], or `value` itself when it is not one.
/// Lets graph and code files written by the CLI be read back directly.
pub fn unwrap_envelope(value: serde_json::Value) -> serde_json::Value {
    match value {
        serde_json::Value::Object(mut map) if map.contains_key("schema_version") && map.contains_key("result") => {
            map.remove("result").expect("checked")
        }
        other => other,
    }
}

/// `#`-prefixed header lines for CSV outputs.
pub fn csv_header(command: &str, seed: u64, config: &serde_json::Value) -> String {
    format!("# schema_version: {SCHEMA_VERSION}\n# command: {command}\n# seed: {seed}\n# config: {config}\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing() {
        let cfg = serde_json::json!({"m": 2});
        let json = Envelope::new("graph aghp", 7, &cfg, &vec![1, 2]).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["seed"], 7);
        assert_eq!(v["result"][1], 2);
        let h = csv_header("verify", 3, &cfg);
        assert!(h.lines().all(|l| l.starts_with("# ")));
        assert!(h.contains(r#"{"m":2}"#));
        assert_eq!(unwrap_envelope(v), serde_json::json!([1, 2]));
        assert_eq!(unwrap_envelope(cfg.clone()), cfg);
    }
}
