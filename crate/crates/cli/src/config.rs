//! Run configuration files: flat TOML (`key = value`, dotted keys for
//! nested settings) or JSON, plus `--set key=value` overrides.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hrl_core::trainer::TrainConfig;
use toml::{Table, Value};

/// Parses a config document. Text starting with `{` is read as JSON.
pub fn parse_document(text: &str) -> Result<Table> {
    if text.trim_start().starts_with('{') {
        let json: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        match Value::try_from(json).context("config JSON cannot be expressed as settings")? {
            Value::Table(t) => Ok(t),
            _ => bail!("config JSON must be an object"),
        }
    } else {
        text.parse::<Table>().context("config is not valid key = value text")
    }
}

/// Parses one `key=value` override. Values that are not valid literals are
/// taken as bare strings, so `variant=four_room_key_lock` works unquoted.
pub fn parse_override(item: &str) -> Result<Table> {
    let (key, value) = item.split_once('=').ok_or_else(|| anyhow!("override `{item}` is not key=value"))?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        bail!("override `{item}` has an empty key");
    }
    let literal = format!("{key} = {value}");
    if let Ok(t) = literal.parse::<Table>() {
        return Ok(t);
    }
    format!("{key} = {}", Value::String(value.to_string()))
        .parse::<Table>()
        .with_context(|| format!("bad override key `{key}`"))
}

/// Recursively overlays `top` onto `base`.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Builds and validates a config. Unknown keys and bad values are
/// rejected with the offending key named.
pub fn build(mut table: Table, overrides: &[String]) -> Result<TrainConfig> {
    for item in overrides {
        merge(&mut table, parse_override(item)?);
    }
    let config: TrainConfig = serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        anyhow!("invalid config key `{key}`: {}", e.into_inner())
    })?;
    config.validate().map_err(|e| anyhow!(e))?;
    Ok(config)
}

/// Defaults, then the file at `path`, then `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<TrainConfig> {
    let table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_document(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => Table::new(),
    };
    build(table, overrides)
}

/// The config as key = value text that [`parse_document`] reads back.
pub fn emit(config: &TrainConfig) -> Result<String> {
    Ok(toml::to_string(config)?)
}
