//! Flat `key = value` files with `[section]` headers.
//!
//! Keys before any header belong to the global section. A section named
//! after a subcommand (`solve-radial`, `verify`, `minimize`) supplies
//! defaults for that command's flags; flags on the command line win.

use std::collections::BTreeMap;

use anyhow::{bail, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    /// section name ("" for global) -> key -> value
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut current = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    bail!("line {}: unterminated section header", lineno + 1);
                };
                current = name.trim().to_string();
                cfg.sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected key = value", lineno + 1);
            };
            let key = k.trim();
            if key.is_empty() {
                bail!("line {}: empty key", lineno + 1);
            }
            cfg.sections
                .entry(current.clone())
                .or_default()
                .insert(key.to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }

    /// Canonical text: global keys first, then sections in name order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if let Some(global) = self.sections.get("") {
            for (k, v) in global {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        for (name, kv) in &self.sections {
            if name.is_empty() {
                continue;
            }
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in kv {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(|s| s.as_str())
    }

    /// Command-line style arguments for a section (`--key value`, or
    /// `--key` alone for `true`).
    pub fn as_args(&self, section: &str) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(kv) = self.sections.get(section) {
            for (k, v) in kv {
                if v == "true" {
                    out.push(format!("--{k}"));
                } else if v != "false" {
                    out.push(format!("--{k}"));
                    out.push(v.clone());
                }
            }
        }
        out
    }
}
