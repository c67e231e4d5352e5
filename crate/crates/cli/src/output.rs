//! The emitted artifact and its JSON and CSV encodings.
//!
//! Every command produces a [`Report`] with the fields `command`,
//! `inputs`, `results`, `provenance` and `warnings`. Exact quantities are
//! emitted as strings in the rational-function syntax accepted by the
//! library parser, so that they re-parse to the same value; floats are
//! emitted with shortest round-trip formatting.
//!
//! The CSV encoding flattens `results` into `key,value` rows, with nested
//! keys joined by `.` and array positions written as indices.

use crate::config::Format;
use crate::error::CliResult;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::Path;

/// One command's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// Subcommand path, e.g. `modes solve`.
    pub command: String,
    /// Resolved inputs, including defaults.
    pub inputs: Value,
    /// Results.
    pub results: Value,
    /// Conventions and library version the results depend on.
    pub provenance: Value,
    /// Non-fatal observations.
    pub warnings: Vec<String>,
}

impl Report {
    /// Start a report for a command.
    pub fn new(command: &str, inputs: Value) -> Self {
        Report {
            command: command.to_string(),
            inputs,
            results: Value::Object(Map::new()),
            provenance: json!({
                "library": "alh-lab",
                "version": env!("CARGO_PKG_VERSION"),
                "conventions": [],
            }),
            warnings: Vec::new(),
        }
    }

    /// Record a convention the results depend on.
    pub fn convention(&mut self, text: &str) {
        if let Some(Value::Array(v)) = self.provenance.get_mut("conventions") {
            v.push(Value::String(text.to_string()));
        }
    }

    /// Set one result field.
    pub fn put(&mut self, key: &str, value: Value) {
        if let Value::Object(m) = &mut self.results {
            m.insert(key.to_string(), value);
        }
    }

    /// The report as one JSON value.
    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "provenance": self.provenance,
            "warnings": self.warnings,
        })
    }

    /// Encode in the requested format.
    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Json => {
                let mut s =
                    serde_json::to_string_pretty(&self.to_json()).expect("values serialise");
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut rows = Vec::new();
                rows.push(("command".to_string(), self.command.clone()));
                flatten("results", &self.results, &mut rows);
                for (i, w) in self.warnings.iter().enumerate() {
                    rows.push((format!("warnings.{i}"), w.clone()));
                }
                let mut wtr = csv::Writer::from_writer(Vec::new());
                wtr.write_record(["key", "value"]).map_err(csv_err)?;
                for (k, v) in rows {
                    wtr.write_record([k, v]).map_err(csv_err)?;
                }
                let bytes = wtr
                    .into_inner()
                    .map_err(|e| std::io::Error::other(e.to_string()))?;
                Ok(String::from_utf8(bytes).expect("csv of utf-8 strings"))
            }
        }
    }
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Write the artifact once: to stdout, or to a sibling temporary file that
/// is renamed over `path` so readers never see a partial file.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        Some(p) => {
            let name = p.file_name().ok_or_else(|| {
                std::io::Error::other(format!("{} is not a file path", p.display()))
            })?;
            let tmp = p.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
            std::fs::write(&tmp, text)?;
            std::fs::rename(&tmp, p)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_flattens_nested_results() {
        let mut r = Report::new("demo", json!({}));
        r.put(
            "roots",
            json!([{"value": "-1", "multiplicity": 1}, {"value": "0", "multiplicity": 1}]),
        );
        r.put("label", json!("a, b"));
        r.warnings.push("note".into());
        let s = r.render(Format::Csv).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "key,value");
        assert!(lines.contains(&"results.roots.0.value,-1"));
        assert!(lines.contains(&"results.roots.1.multiplicity,1"));
        assert!(lines.contains(&"results.label,\"a, b\""));
        assert!(lines.contains(&"warnings.0,note"));
    }

    #[test]
    fn json_has_fixed_top_level_keys() {
        let r = Report::new("demo", json!({"b": 1}));
        let v: Value = serde_json::from_str(&r.render(Format::Json).unwrap()).unwrap();
        for k in ["command", "inputs", "results", "provenance", "warnings"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
