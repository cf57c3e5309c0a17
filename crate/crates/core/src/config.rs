//! Plain-text `key = value` configuration files.
//!
//! Keys are the [`SimParams`] field names; sweep files additionally accept
//! the list-valued level keys plus `replications` and `parallelism`. Blank
//! lines and `#` comments are ignored. Unknown or repeated keys are errors.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::SimParams;
use crate::sweep::SweepSpec;

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

fn entries(text: &str) -> Result<Vec<Entry<'_>>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let key = key.trim();
        if !seen.insert(key) {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{key}`",
                i + 1
            )));
        }
        out.push(Entry {
            line: i + 1,
            key,
            value: value.trim(),
        });
    }
    Ok(out)
}

fn parse<T: FromStr>(e: &Entry<'_>) -> Result<T> {
    e.value.parse().map_err(|_| {
        Error::Config(format!(
            "line {}: cannot parse `{}` for key `{}`",
            e.line, e.value, e.key
        ))
    })
}

fn parse_list<T: FromStr>(e: &Entry<'_>) -> Result<Vec<T>> {
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| {
                Error::Config(format!(
                    "line {}: cannot parse `{s}` in list `{}`",
                    e.line, e.key
                ))
            })
        })
        .collect()
}

fn parse_bool(e: &Entry<'_>) -> Result<bool> {
    match e.value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "line {}: `{}` expects true or false",
            e.line, e.key
        ))),
    }
}

/// Applies one entry to `params`; returns false for a key that is not a
/// simulation parameter.
fn apply_sim(params: &mut SimParams, e: &Entry<'_>) -> Result<bool> {
    match e.key {
        "number_local" => params.number_local = parse(e)?,
        "number_migrant" => params.number_migrant = parse(e)?,
        "conservatism_local" => params.conservatism_local = parse(e)?,
        "conservatism_migrant" => params.conservatism_migrant = parse(e)?,
        "init_sd" => params.init_sd = parse(e)?,
        "speed_intake" => params.speed_intake = parse(e)?,
        "intake_policy" => params.intake_policy = e.value.parse()?,
        "ticks" => params.ticks = parse(e)?,
        "grid_width" => params.grid_width = parse(e)?,
        "grid_height" => params.grid_height = parse(e)?,
        "auto_scale_grid" => params.auto_scale_grid = parse_bool(e)?,
        "happiness_threshold" => params.happiness_threshold = parse(e)?,
        "neighbor_radius" => params.neighbor_radius = parse(e)?,
        "conservatism_bounds" => {
            let b: Vec<f64> = parse_list(e)?;
            if b.len() != 2 {
                return Err(Error::Config(format!(
                    "line {}: conservatism_bounds needs two values",
                    e.line
                )));
            }
            params.conservatism_bounds = (b[0], b[1]);
        }
        "seed" => params.seed = parse(e)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn unknown(e: &Entry<'_>) -> Error {
    Error::Config(format!("line {}: unknown key `{}`", e.line, e.key))
}

pub fn parse_sim_params(text: &str) -> Result<SimParams> {
    let mut params = SimParams::default();
    for e in entries(text)? {
        if !apply_sim(&mut params, &e)? {
            return Err(unknown(&e));
        }
    }
    Ok(params)
}

/// Sweep file; unspecified keys take the full 5 x 5 x 2 design.
pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec> {
    let mut spec = SweepSpec::full_design();
    for e in entries(text)? {
        if apply_sim(&mut spec.base, &e)? {
            continue;
        }
        match e.key {
            "conservatism_local_levels" => spec.conservatism_local_levels = parse_list(&e)?,
            "conservatism_migrant_levels" => spec.conservatism_migrant_levels = parse_list(&e)?,
            "speed_levels" => spec.speed_levels = parse_list(&e)?,
            "replications" => spec.replications = parse(&e)?,
            "parallelism" => spec.parallelism = parse(&e)?,
            _ => return Err(unknown(&e)),
        }
    }
    Ok(spec)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn load_sim_params(path: &Path) -> Result<SimParams> {
    parse_sim_params(&read(path)?)
}

pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    parse_sweep_spec(&read(path)?)
}

/// Every configuration key with its default, one per line.
pub fn defaults_help() -> String {
    let p = SimParams::default();
    let s = SweepSpec::full_design();
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!(
        "Configuration keys (key = value) and defaults:\n  \
         number_local = {}\n  number_migrant = {}\n  conservatism_local = {}\n  \
         conservatism_migrant = {}\n  init_sd = {}\n  speed_intake = {}\n  intake_policy = {}\n  \
         ticks = {}\n  grid_width = {}\n  grid_height = {}\n  auto_scale_grid = {}\n  \
         happiness_threshold = {}\n  neighbor_radius = {}\n  conservatism_bounds = {}, {}\n  seed = {}\n\
         Sweep files also accept:\n  conservatism_local_levels = {}\n  \
         conservatism_migrant_levels = {}\n  speed_levels = {}\n  replications = {}\n  \
         parallelism = <available cores>",
        p.number_local,
        p.number_migrant,
        p.conservatism_local,
        p.conservatism_migrant,
        p.init_sd,
        p.speed_intake,
        p.intake_policy,
        p.ticks,
        p.grid_width,
        p.grid_height,
        p.auto_scale_grid,
        p.happiness_threshold,
        p.neighbor_radius,
        p.conservatism_bounds.0,
        p.conservatism_bounds.1,
        p.seed,
        list(&s.conservatism_local_levels),
        list(&s.conservatism_migrant_levels),
        s.speed_levels.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "),
        s.replications,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::IntakePolicy;

    #[test]
    fn parses_all_sim_keys() {
        let text = "\
# desk run
number_local = 200
number_migrant = 150
conservatism_local = -0.25
conservatism_migrant = 0.75   # extremely conservative
init_sd = 0.4
speed_intake = 100
intake_policy = literal
ticks = 300
grid_width = 60
grid_height = 30
auto_scale_grid = false
happiness_threshold = 0.5
neighbor_radius = 1.5
conservatism_bounds = -1, 1
seed = 99
";
        let p = parse_sim_params(text).unwrap();
        assert_eq!(p.number_local, 200);
        assert_eq!(p.number_migrant, 150);
        assert_eq!(p.conservatism_migrant, 0.75);
        assert_eq!(p.intake_policy, IntakePolicy::Literal);
        assert_eq!(p.grid_width, 60);
        assert!(!p.auto_scale_grid);
        assert_eq!(p.seed, 99);
    }

    #[test]
    fn unknown_key_is_error() {
        let err = parse_sim_params("number_locals = 3\n").unwrap_err();
        assert!(err.to_string().contains("unknown key `number_locals`"));
        assert!(parse_sim_params("replications = 3\n").is_err());
    }

    #[test]
    fn duplicate_and_malformed() {
        assert!(parse_sim_params("ticks = 3\nticks = 4\n").is_err());
        assert!(parse_sim_params("ticks 3\n").is_err());
        assert!(parse_sim_params("ticks = many\n").is_err());
        assert!(parse_sim_params("intake_policy = fast\n").is_err());
    }

    #[test]
    fn sweep_lists() {
        let spec = parse_sweep_spec(
            "conservatism_local_levels = -0.75, 0.75\nspeed_levels = 1,100\nreplications = 5\nticks = 50\nparallelism = 3\n",
        )
        .unwrap();
        assert_eq!(spec.conservatism_local_levels, vec![-0.75, 0.75]);
        assert_eq!(spec.conservatism_migrant_levels.len(), 5);
        assert_eq!(spec.condition_count(), 20);
        assert_eq!(spec.base.ticks, 50);
        assert_eq!(spec.parallelism, 3);
    }
}
