//! Flat key-value run configuration.
//!
//! ```text
//! # lines are comments; keys follow the reference parameter names
//! M = 10          # users
//! L = 1000        # steps
//! dt = 0.01
//! m = 10          # demands per step
//! D = 10          # max duration
//! K = 2           # capacity exponent
//! C_unit = 100
//! C_max = 1
//! lambda = 10     # scalar broadcast, or a comma list per router
//! S0 = 10
//! topology = default          # or a path to an edge-list file
//! seed = 1
//! ```
//!
//! `topology_inline = N;u v;u v;...` embeds the graph directly; run
//! manifests use it so a manifest is itself a complete, reproducible
//! config file. `N` is optional and cross-checked against the topology.
//! `cash_convention = post_impact | pre_impact` selects the trade pricing
//! of the cash account (post-impact is the default).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::sim::{CashConvention, SimulationConfig};
use crate::topology::{load_topology, Topology, TopologyError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected \"key = value\", found {found:?}")]
    Syntax { line: usize, found: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value for {key}: {value:?} ({reason})")]
    BadValue {
        key: &'static str,
        value: String,
        reason: String,
    },
    #[error("config declares N = {declared} but the topology has {actual} nodes")]
    NodeCountMismatch { declared: usize, actual: usize },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
}

fn parse_num<T: std::str::FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| ConfigError::BadValue {
        key,
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_list(key: &'static str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|tok| parse_num::<f64>(key, tok))
        .collect()
}

fn broadcast(key: &'static str, list: Vec<f64>, n: usize) -> Result<Vec<f64>, ConfigError> {
    if list.len() == 1 {
        Ok(vec![list[0]; n])
    } else if list.len() == n {
        Ok(list)
    } else {
        Err(ConfigError::BadValue {
            key,
            value: format!("{} values", list.len()),
            reason: format!("expected 1 or {n} comma-separated values"),
        })
    }
}

/// Parses config text. `resolve_topology` maps a `topology = <spec>` value
/// (anything other than `default`) to edge-list text, typically by reading
/// a file relative to the config's directory.
pub fn parse_simulation_config(
    text: &str,
    resolve_topology: &dyn Fn(&str) -> Result<String, std::io::Error>,
) -> Result<SimulationConfig, ConfigError> {
    let mut pairs: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                found: content.to_string(),
            });
        };
        pairs.insert(key.trim().to_string(), (line, value.trim().to_string()));
    }

    const KNOWN: &[&str] = &[
        "N",
        "M",
        "L",
        "dt",
        "m",
        "D",
        "K",
        "C_unit",
        "C_max",
        "lambda",
        "S0",
        "topology",
        "topology_inline",
        "seed",
        "cash_convention",
    ];
    for (key, (line, _)) in &pairs {
        if !KNOWN.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                line: *line,
                key: key.clone(),
            });
        }
    }
    let get = |key: &str| pairs.get(key).map(|(_, v)| v.clone());

    let topology = if let Some(inline) = get("topology_inline") {
        let text = inline.replace(';', "\n");
        load_topology(&text)?
    } else {
        match get("topology").as_deref() {
            None | Some("default") => Topology::petersen(),
            Some(spec) => {
                let text = resolve_topology(spec).map_err(|source| ConfigError::Io {
                    path: PathBuf::from(spec),
                    source,
                })?;
                load_topology(&text)?
            }
        }
    };
    let n = topology.node_count();
    if let Some(declared) = get("N") {
        let declared: usize = parse_num("N", &declared)?;
        if declared != n {
            return Err(ConfigError::NodeCountMismatch {
                declared,
                actual: n,
            });
        }
    }

    let defaults = SimulationConfig::paper_defaults();
    let config = SimulationConfig {
        n_users: match get("M") {
            Some(v) => parse_num("M", &v)?,
            None => defaults.n_users,
        },
        n_steps: match get("L") {
            Some(v) => parse_num("L", &v)?,
            None => defaults.n_steps,
        },
        dt: match get("dt") {
            Some(v) => parse_num("dt", &v)?,
            None => defaults.dt,
        },
        demands_per_step: match get("m") {
            Some(v) => parse_num("m", &v)?,
            None => defaults.demands_per_step,
        },
        max_duration: match get("D") {
            Some(v) => parse_num("D", &v)?,
            None => defaults.max_duration,
        },
        cap_exponent: match get("K") {
            Some(v) => parse_num("K", &v)?,
            None => defaults.cap_exponent,
        },
        unit_reward: match get("C_unit") {
            Some(v) => parse_num("C_unit", &v)?,
            None => defaults.unit_reward,
        },
        cost_factor: match get("C_max") {
            Some(v) => parse_num("C_max", &v)?,
            None => defaults.cost_factor,
        },
        liquidity: match get("lambda") {
            Some(v) => broadcast("lambda", parse_list("lambda", &v)?, n)?,
            None => vec![10.0; n],
        },
        initial_price: match get("S0") {
            Some(v) => broadcast("S0", parse_list("S0", &v)?, n)?,
            None => vec![10.0; n],
        },
        seed: match get("seed") {
            Some(v) => parse_num("seed", &v)?,
            None => defaults.seed,
        },
        cash_convention: match get("cash_convention").as_deref() {
            None | Some("post_impact") => CashConvention::PostImpact,
            Some("pre_impact") => CashConvention::PreImpact,
            Some(other) => {
                return Err(ConfigError::BadValue {
                    key: "cash_convention",
                    value: other.to_string(),
                    reason: "expected post_impact or pre_impact".into(),
                })
            }
        },
        topology,
    };
    Ok(config)
}

/// Reads a config file; `topology = <path>` values resolve relative to the
/// config file's directory.
pub fn load_config_file(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_simulation_config(&text, &move |spec: &str| {
        let p = base.join(spec);
        std::fs::read_to_string(p)
    })
}

fn inline_topology(topology: &Topology) -> String {
    let mut parts = vec![topology.node_count().to_string()];
    for &(u, v) in topology.edges() {
        parts.push(format!("{u} {v}"));
    }
    parts.join(";")
}

/// Serializes a config (plus tool version) as manifest text. The result
/// parses back with [`parse_simulation_config`], so every run can be
/// reproduced from its manifest alone.
pub fn manifest_string(config: &SimulationConfig, tool_version: &str) -> String {
    let fmt_list = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let convention = match config.cash_convention {
        CashConvention::PostImpact => "post_impact",
        CashConvention::PreImpact => "pre_impact",
    };
    format!(
        "# bwmarket run manifest (tool version {tool_version})\n\
         # re-run with: bwmarket run --config <this file>\n\
         N = {n}\n\
         M = {m_users}\n\
         L = {l}\n\
         dt = {dt}\n\
         m = {m}\n\
         D = {d}\n\
         K = {k}\n\
         C_unit = {c_unit}\n\
         C_max = {c_max}\n\
         lambda = {lambda}\n\
         S0 = {s0}\n\
         seed = {seed}\n\
         cash_convention = {convention}\n\
         topology_inline = {topo}\n",
        n = config.n_routers(),
        m_users = config.n_users,
        l = config.n_steps,
        dt = config.dt,
        m = config.demands_per_step,
        d = config.max_duration,
        k = config.cap_exponent,
        c_unit = config.unit_reward,
        c_max = config.cost_factor,
        lambda = fmt_list(&config.liquidity),
        s0 = fmt_list(&config.initial_price),
        seed = config.seed,
        topo = inline_topology(&config.topology),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_files(_: &str) -> Result<String, std::io::Error> {
        Err(std::io::Error::new(std::io::ErrorKind::NotFound, "no fs"))
    }

    #[test]
    fn empty_config_gives_reference_defaults() {
        let cfg = parse_simulation_config("", &no_files).unwrap();
        let d = SimulationConfig::paper_defaults();
        assert_eq!(cfg.n_users, d.n_users);
        assert_eq!(cfg.n_steps, 1000);
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.liquidity, vec![10.0; 10]);
        assert_eq!(cfg.topology, d.topology);
    }

    #[test]
    fn parses_overrides_and_lists() {
        let text = "L = 50\nlambda = 1,2,3,4,5,6,7,8,9,10\nseed = 42\n# comment\nC_max = 4\n";
        let cfg = parse_simulation_config(text, &no_files).unwrap();
        assert_eq!(cfg.n_steps, 50);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.cost_factor, 4.0);
        assert_eq!(cfg.liquidity[2], 3.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(
            parse_simulation_config("lambdas = 10\n", &no_files),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(matches!(
            parse_simulation_config("L = ten\n", &no_files),
            Err(ConfigError::BadValue { key: "L", .. })
        ));
        assert!(matches!(
            parse_simulation_config("just words\n", &no_files),
            Err(ConfigError::Syntax { .. })
        ));
    }

    #[test]
    fn node_count_cross_check() {
        assert!(parse_simulation_config("N = 10\n", &no_files).is_ok());
        assert!(matches!(
            parse_simulation_config("N = 7\n", &no_files),
            Err(ConfigError::NodeCountMismatch { .. })
        ));
    }

    #[test]
    fn wrong_list_length_names_key() {
        let err = parse_simulation_config("lambda = 1,2,3\n", &no_files).unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { key: "lambda", .. }));
    }

    #[test]
    fn manifest_round_trips() {
        let mut config = SimulationConfig::paper_defaults();
        config.seed = 31;
        config.liquidity[4] = 25.0;
        let manifest = manifest_string(&config, "test");
        let parsed = parse_simulation_config(&manifest, &no_files).unwrap();
        assert_eq!(parsed.seed, 31);
        assert_eq!(parsed.liquidity, config.liquidity);
        assert_eq!(parsed.topology, config.topology);
        assert_eq!(parsed.dt, config.dt);
    }

    #[test]
    fn inline_topology_overrides_default() {
        let cfg =
            parse_simulation_config("topology_inline = 3;0 1;1 2\nlambda = 5\nS0 = 2\n", &no_files)
                .unwrap();
        assert_eq!(cfg.n_routers(), 3);
        assert_eq!(cfg.liquidity, vec![5.0; 3]);
    }

    #[test]
    fn custom_topology_resolver() {
        let resolver = |spec: &str| -> Result<String, std::io::Error> {
            assert_eq!(spec, "ring.txt");
            Ok("4\n0 1\n1 2\n2 3\n3 0\n".to_string())
        };
        let cfg = parse_simulation_config("topology = ring.txt\n", &resolver).unwrap();
        assert_eq!(cfg.n_routers(), 4);
    }
}
