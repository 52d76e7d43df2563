//! Flat `key = value` run configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use relplan::bench::{Guidance, RunConfig};
use relplan::guidance::AbstractionConfig;
use relplan::planner::SearchConfig;

use crate::Usage;

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Usage(format!("{key}: expected a boolean, found '{v}'")).into()),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Usage(format!("{key}: cannot parse '{v}'")).into())
}

/// `none`, `random:SEED`, `knn:K` or `model:PATH` (relative to `base`).
pub fn parse_guidance(v: &str, base: &Path) -> Result<Guidance> {
    let (kind, arg) = v.split_once(':').unwrap_or((v, ""));
    Ok(match kind {
        "none" => Guidance::None,
        "random" => Guidance::Random(if arg.is_empty() { 0 } else { parse_num("guidance", arg)? }),
        "knn" => Guidance::Knn(parse_num("guidance", arg)?),
        "model" if !arg.is_empty() => Guidance::Model(base.join(arg)),
        _ => bail!(Usage(format!("guidance: expected none | random:SEED | knn:K | model:PATH, found '{v}'"))),
    })
}

pub fn preset(name: &str, timeout: f64) -> Result<SearchConfig> {
    Ok(match name {
        "gbfs-ff" => SearchConfig::gbfs_ff(timeout),
        "enhanced" => SearchConfig::enhanced_gbfs(timeout),
        "ucs" => SearchConfig::uniform_cost(timeout),
        _ => bail!(Usage(format!("preset: expected gbfs-ff | enhanced | ucs, found '{name}'"))),
    })
}

/// Applies one key to a run configuration.
pub fn apply(cfg: &mut RunConfig, key: &str, value: &str, base: &Path) -> Result<()> {
    let a: &mut AbstractionConfig = &mut cfg.abstraction;
    match key {
        "name" => cfg.name = value.to_string(),
        "preset" => {
            let t = cfg.timeout;
            cfg.search = preset(value, t)?;
        }
        "strategy" => cfg.search.strategy = value.parse().map_err(Usage)?,
        "heuristic" => cfg.search.heuristic = value.parse().map_err(Usage)?,
        "helpful" | "helpful_actions" => cfg.search.helpful_actions = parse_bool(key, value)?,
        "exploration" => cfg.search.exploration = parse_bool(key, value)?,
        "lazy" => cfg.search.lazy = parse_bool(key, value)?,
        "max_expansions" => cfg.search.max_expansions = Some(parse_num(key, value)?),
        "timeout" => {
            cfg.timeout = parse_num(key, value)?;
            cfg.search.timeout = cfg.timeout;
        }
        "guidance" => cfg.guidance = parse_guidance(value, base)?,
        "theta_obj" => a.theta_obj = parse_num(key, value)?,
        "theta_rel" => a.theta_rel = parse_num(key, value)?,
        "gamma" => a.gamma = parse_num(key, value)?,
        "max_rounds" => a.max_rounds = parse_num(key, value)?,
        "one_shot" => a.one_shot = parse_bool(key, value)?,
        "top_k" => a.top_k = if value == "none" { None } else { Some(parse_num(key, value)?) },
        "parallelism" | "jobs" => cfg.parallelism = parse_num(key, value)?,
        _ => bail!(Usage(format!("unknown config key '{key}'"))),
    }
    Ok(())
}

pub fn parse_run_config(text: &str, base: &Path, default_name: &str, timeout: f64) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(default_name, SearchConfig::enhanced_gbfs(timeout), Guidance::None);
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!(Usage(format!("line {}: expected key = value", i + 1)));
        };
        apply(&mut cfg, k.trim(), v.trim(), base).with_context(|| format!("line {}", i + 1))?;
    }
    cfg.search.validate().map_err(Usage)?;
    cfg.abstraction.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(cfg)
}

pub fn load_run_config(path: &PathBuf, timeout: f64) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
    let base = path.parent().unwrap_or(Path::new("."));
    parse_run_config(&text, base, stem, timeout).with_context(|| format!("in {}", path.display()))
}
