//! Run configuration as a flat TOML document.
//!
//! Every key is optional; omitted keys take the defaults listed in
//! [`CONFIG_KEYS`]. Unknown keys are rejected.

use std::f64::consts::PI;

use toml::Value;

use crate::energy::EnergyParams;
use crate::error::{BandError, Result};
use crate::grid::Closure;
use crate::solver::{SolveConfig, DEFAULT_NODES};

/// Documentation of one configuration key.
#[derive(Debug, Clone, Copy)]
pub struct ConfigKey {
    pub name: &'static str,
    pub default: &'static str,
    pub unit: &'static str,
    pub about: &'static str,
}

const fn key(
    name: &'static str,
    default: &'static str,
    unit: &'static str,
    about: &'static str,
) -> ConfigKey {
    ConfigKey { name, default, unit, about }
}

pub const CONFIG_KEYS: &[ConfigKey] = &[
    key("L", "6.283185307179586 (2 pi)", "length", "band (midline) length"),
    key("N", "512", "nodes", "grid nodes, at least 8"),
    key("A", "1", "energy*length", "bending stiffness"),
    key("closure", "\"mobius\"", "-", "\"mobius\" (half twist) or \"periodic\" (annulus)"),
    key(
        "delta_schedule",
        "[0.5, 0.2, 0.1, 0.05, 0.02] * 2 pi / L",
        "1/length",
        "strictly decreasing regularization values, one stage each",
    ),
    key("w_pos", "100 * A / L^2", "energy/length^2", "initial weight on the squared position gap"),
    key("w_frame", "100 * A / L", "energy", "initial weight on the squared frame gap"),
    key("grad_tol", "1e-9", "energy/length", "stage stops when max |dF/dx_i| / h is below this"),
    key("step_tol", "1e-15", "1/length", "stage stops when the largest update is below this"),
    key("max_iterations", "5000", "iterations", "quasi-Newton iterations per stage"),
    key("weight_growth", "10", "-", "closure weight factor when the gaps stop shrinking"),
    key("max_escalations", "20", "stages", "closure stages after the last regularization stage"),
    key("pos_tol", "1e-6", "fraction of L", "required position gap"),
    key("frame_tol", "1e-6", "-", "required frame gap"),
    key("seed", "0", "-", "seed of the start perturbation"),
    key("init_noise", "0", "1/length", "amplitude of the seeded start perturbation"),
    key("mask_window", "0.05 * L", "length", "window around K sign changes left out of residual norms"),
    key("half_width", "0.02 * L", "length", "half width of the exported strip mesh"),
    key("residual_tol", "0.5 * A * (2 pi / L)^3", "force/length", "equilibrium residual tolerance"),
];

/// Solver configuration plus export and reporting settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solve: SolveConfig,
    pub half_width: f64,
    pub residual_tol: f64,
}

impl RunConfig {
    pub fn with_defaults(length: f64, nodes: usize, a: f64) -> Result<Self> {
        Ok(Self {
            solve: SolveConfig::with_defaults(length, nodes, a)?,
            half_width: 0.02 * length,
            residual_tol: default_residual_tol(length, a),
        })
    }
}

pub fn default_residual_tol(length: f64, a: f64) -> f64 {
    0.5 * a * (2.0 * PI / length).powi(3)
}

/// Table of keys, defaults and units for `--help`.
pub fn config_help() -> String {
    let mut out = String::from("Configuration keys (TOML, all optional):\n");
    for k in CONFIG_KEYS {
        out.push_str(&format!(
            "  {:<16} default {}  [{}]\n      {}\n",
            k.name, k.default, k.unit, k.about
        ));
    }
    out
}

fn bad(key: &str, reason: impl Into<String>) -> BandError {
    BandError::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn number(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(bad(key, format!("expected a number, got {}", other.type_str()))),
    }
}

fn positive(key: &str, v: &Value) -> Result<f64> {
    let x = number(key, v)?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, format!("expected a finite number > 0, got {x}")))
    }
}

fn count(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(i) => Err(bad(key, format!("expected an integer >= 0, got {i}"))),
        other => Err(bad(key, format!("expected an integer, got {}", other.type_str()))),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| BandError::Parse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        reason: e.message().to_string(),
    })?;
    for (k, v) in &table {
        if !CONFIG_KEYS.iter().any(|c| c.name == k) {
            let known: Vec<&str> = CONFIG_KEYS.iter().map(|c| c.name).collect();
            return Err(bad(k, format!("unknown key; expected one of {}", known.join(", "))));
        }
        if matches!(v, Value::Table(_)) {
            return Err(bad(k, "nested tables are not allowed"));
        }
    }

    let length = table.get("L").map(|v| positive("L", v)).transpose()?.unwrap_or(2.0 * PI);
    let nodes = match table.get("N") {
        Some(v) => count("N", v)? as usize,
        None => DEFAULT_NODES,
    };
    let a = table.get("A").map(|v| positive("A", v)).transpose()?.unwrap_or(1.0);
    let mut run = RunConfig::with_defaults(length, nodes, a).map_err(|e| match e {
        BandError::InvalidGrid(reason) if nodes < crate::grid::MIN_NODES => bad("N", reason),
        other => other,
    })?;
    let cfg = &mut run.solve;

    for (k, v) in &table {
        match k.as_str() {
            "L" | "N" | "A" => {}
            "closure" => {
                let text = v.as_str().ok_or_else(|| bad(k, "expected a string"))?;
                cfg.closure = Closure::parse(text)
                    .ok_or_else(|| bad(k, format!("expected \"mobius\" or \"periodic\", got {text:?}")))?;
            }
            "delta_schedule" => {
                let items = v.as_array().ok_or_else(|| bad(k, "expected a list of numbers"))?;
                cfg.delta_schedule = items.iter().map(|x| number(k, x)).collect::<Result<_>>()?;
            }
            "w_pos" => cfg.weights.pos = positive(k, v)?,
            "w_frame" => cfg.weights.frame = positive(k, v)?,
            "grad_tol" => cfg.grad_tol = positive(k, v)?,
            "step_tol" => cfg.step_tol = number(k, v)?,
            "max_iterations" => cfg.max_iterations = count(k, v)? as usize,
            "weight_growth" => cfg.weight_growth = number(k, v)?,
            "max_escalations" => cfg.max_escalations = count(k, v)? as usize,
            "pos_tol" => cfg.pos_tol = positive(k, v)?,
            "frame_tol" => cfg.frame_tol = positive(k, v)?,
            "seed" => cfg.seed = count(k, v)?,
            "init_noise" => cfg.init_noise = number(k, v)?,
            "mask_window" => cfg.mask_window = number(k, v)?,
            "half_width" => run.half_width = positive(k, v)?,
            "residual_tol" => run.residual_tol = positive(k, v)?,
            _ => unreachable!("keys checked above"),
        }
    }
    if let Some(&last) = cfg.delta_schedule.last() {
        if last.is_finite() && last >= 0.0 {
            cfg.params = EnergyParams::new(a, last)?;
        }
    }
    cfg.validate()?;
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn minimal_document_gets_defaults() {
        let run = parse_config("L = 6.2832\nN = 256\nA = 1.0\n").unwrap();
        assert_eq!(run.solve.grid.nodes(), 256);
        assert_eq!(run.solve.grid.length(), 6.2832);
        assert_eq!(run.solve.delta_schedule.len(), 5);
        assert_eq!(run.half_width, 0.02 * 6.2832);
        assert_eq!(run.solve.params.delta(), *run.solve.delta_schedule.last().unwrap());
    }

    #[test]
    fn too_few_nodes_names_n() {
        let err = parse_config("N = 4").unwrap_err();
        assert!(matches!(&err, BandError::Config { key, .. } if key == "N"), "{err}");
    }

    #[test]
    fn increasing_schedule_is_rejected() {
        let err = parse_config("delta_schedule = [0.1, 0.2]").unwrap_err();
        assert!(matches!(&err, BandError::Config { key, .. } if key == "delta_schedule"));
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        let err = parse_config("lenght = 3.0").unwrap_err();
        assert!(matches!(&err, BandError::Config { key, .. } if key == "lenght"));
        let err = parse_config("N = \"many\"").unwrap_err();
        assert!(matches!(&err, BandError::Config { key, .. } if key == "N"));
        let err = parse_config("A = -1").unwrap_err();
        assert!(matches!(&err, BandError::Config { key, .. } if key == "A"));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("N = 16\nL = = 2\n").unwrap_err();
        assert!(matches!(err, BandError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn help_lists_every_key() {
        let help = config_help();
        for k in CONFIG_KEYS {
            assert!(help.contains(k.name) && help.contains(k.default));
        }
    }
}
