//! TOML simulation configs, `--set path=value` overrides and the canonical
//! hash recorded in manifests.

use std::path::Path;

use ema_sim::SimConfig;
use sha2::{Digest, Sha256};

use crate::error::{config, CliResult};

/// Parses an override value as a TOML value, falling back to a bare string
/// so `--set rule.rule=ema` works without quotes.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn apply_override(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| config(format!("override {assignment:?} is not of the form key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config(format!("override key {path:?} is malformed")));
    }
    let (last, parents) = keys.split_last().unwrap();
    let mut cursor = table;
    for key in parents {
        let entry = cursor
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| config(format!("override {path:?}: {key:?} is not a section")))?;
    }
    cursor.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

pub fn parse_config(text: &str, overrides: &[String]) -> CliResult<SimConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| config(format!("config: {e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: SimConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| config(format!("config: {e}")))?;
    cfg.validate().map_err(config)?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> CliResult<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

/// The fully resolved config (defaults filled in) as JSON with sorted keys.
/// Numbers come from typed fields, so `1` and `1.0` in a float slot agree.
pub fn canonical_json(cfg: &SimConfig) -> String {
    let value = serde_json::to_value(cfg).expect("config serializes");
    serde_json::to_string(&value).expect("json value serializes")
}

pub fn config_hash(cfg: &SimConfig) -> String {
    hex::encode(Sha256::digest(canonical_json(cfg).as_bytes()))
}
