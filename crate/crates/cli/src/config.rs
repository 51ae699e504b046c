//! TOML experiment files and `key=value` overrides.
//!
//! A file holds one table per section (`[run]`, `[supg]`, `[gamcal]`,
//! `[data]`, `[study]`). Every key must belong to the section it appears in.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use cascade_core::engine::{ExperimentConfig, KEYS};
use toml::Value;

/// Defaults, then the file (if any), then the overrides in order.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        apply_toml(&mut cfg, &text).with_context(|| format!("in {}", path.display()))?;
    }
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("override `{item}` is not of the form key=value"))?;
        cfg.set(key.trim(), value.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn apply_toml(cfg: &mut ExperimentConfig, text: &str) -> Result<()> {
    let table: toml::Table = text.parse()?;
    for (section, body) in &table {
        let Value::Table(body) = body else {
            bail!("`{section}`: top-level keys must sit inside a section such as [run]");
        };
        if !KEYS.iter().any(|(s, _)| s == section) {
            bail!("unknown section [{section}]");
        }
        for (key, value) in body {
            if !KEYS.iter().any(|(s, k)| s == section && k == key) {
                bail!("unknown key `{key}` in section [{section}]");
            }
            cfg.set(key, &scalar_text(key, value)?)?;
        }
    }
    Ok(())
}

fn scalar_text(key: &str, value: &Value) -> Result<String> {
    Ok(match value {
        Value::String(s) => s.clone(),
        Value::Integer(i) => i.to_string(),
        Value::Float(f) => f.to_string(),
        Value::Boolean(b) => b.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| scalar_text(key, v))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => bail!("`{key}`: unsupported value {value}"),
    })
}

/// The effective configuration as a TOML file that `parse_config` reads back.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut section = "";
    for &(s, key) in KEYS {
        if s != section {
            if !section.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("[{s}]\n"));
            section = s;
        }
        match cfg.get(key) {
            Some(v) => out.push_str(&format!("{key} = {}\n", render_value(key, &v))),
            None => out.push_str(&format!("# {key} is unset\n")),
        }
    }
    out
}

fn render_value(key: &str, v: &str) -> String {
    let list_key = matches!(
        key,
        "sweep_values" | "reliability_t_p" | "reliability_t_r" | "parallel_workers"
    );
    if list_key {
        let items: Vec<&str> = v.split(',').filter(|s| !s.is_empty()).collect();
        return format!("[{}]", items.join(", "));
    }
    if v.parse::<f64>().is_ok() {
        v.to_string()
    } else {
        Value::String(v.to_string()).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_rendering() {
        let cfg = ExperimentConfig::default();
        let mut back = ExperimentConfig::default();
        apply_toml(&mut back, &render_config(&cfg)).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn edited_values_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("algorithm", "gam_cal").unwrap();
        cfg.set("alpha", "0.35").unwrap();
        cfg.set("sweep_values", "0.2,0.4").unwrap();
        cfg.set("path", "data/x.csv").unwrap();
        let mut back = ExperimentConfig::default();
        apply_toml(&mut back, &render_config(&cfg)).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn key_must_match_section() {
        let mut cfg = ExperimentConfig::default();
        let err = apply_toml(&mut cfg, "[run]\nalpha = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
        assert!(apply_toml(&mut cfg, "alpha = 0.3\n").is_err());
        assert!(apply_toml(&mut cfg, "[nope]\nx = 1\n").is_err());
    }

    #[test]
    fn arrays_become_lists() {
        let mut cfg = ExperimentConfig::default();
        apply_toml(&mut cfg, "[study]\nparallel_workers = [1, 2]\nsweep_values = [0.5]\n").unwrap();
        assert_eq!(cfg.study.parallel_workers, vec![1, 2]);
        assert_eq!(cfg.study.sweep_values, vec![0.5]);
    }
}
