//! JSON run configuration.
//!
//! Validation walks the whole document and reports every problem with its
//! JSON path instead of stopping at the first one.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::Expr;
use crate::curvature::KBranch;
use crate::diffcalc::Strategy;

pub const DEFAULT_SAMPLES: usize = 50;
pub const DEFAULT_SEED: u64 = 42;

const KEYS: &[&str] = &["m", "f", "level", "samples", "seed", "tolerances", "strategy", "orientation", "k_branch"];
const TOLERANCE_KEYS: &[&str] = &["geometry", "first_order", "second_order"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub geometry: f64,
    pub first_order: f64,
    pub second_order: f64,
}

impl Tolerances {
    pub fn defaults(strategy: Strategy) -> Self {
        Tolerances {
            geometry: 1e-7,
            first_order: 1e-6,
            second_order: match strategy {
                Strategy::Jet => 1e-6,
                Strategy::Fd => 1e-4,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub m: usize,
    pub f: String,
    #[serde(skip)]
    pub expr: Expr,
    pub level: f64,
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub strategy: Strategy,
    pub orientation: i8,
    pub k_branch: KBranch,
    /// True when `second_order` came from the strategy default, so a later
    /// strategy override can move it.
    #[serde(skip)]
    second_order_defaulted: bool,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, ConfigError> {
        let mut errs = Vec::new();
        let Some(obj) = value.as_object() else {
            return Err(ConfigError::Invalid(vec![FieldError::new("$", "expected a JSON object")]));
        };
        unknown_keys(obj, KEYS, "$", &mut errs);

        let m = match obj.get("m") {
            None => {
                errs.push(FieldError::new("$.m", "required"));
                None
            }
            Some(v) => match v.as_u64() {
                Some(m) if m >= 1 => Some(m as usize),
                _ => {
                    errs.push(FieldError::new("$.m", "must be an integer >= 1"));
                    None
                }
            },
        };

        let f = match obj.get("f") {
            None => {
                errs.push(FieldError::new("$.f", "required"));
                None
            }
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                errs.push(FieldError::new("$.f", "must be a string"));
                None
            }
        };
        let expr = f.as_ref().and_then(|src| {
            let parsed = match m {
                Some(m) => Expr::parse_for(src, m),
                None => Expr::parse(src),
            };
            parsed.map_err(|e| errs.push(FieldError::new("$.f", &e.to_string()))).ok()
        });

        let level = match obj.get("level") {
            None => {
                errs.push(FieldError::new("$.level", "required"));
                None
            }
            Some(v) => finite(v, "$.level", &mut errs),
        };

        let samples = match obj.get("samples") {
            None => Some(DEFAULT_SAMPLES),
            Some(v) => match v.as_u64() {
                Some(n) if n >= 1 => Some(n as usize),
                _ => {
                    errs.push(FieldError::new("$.samples", "must be an integer >= 1"));
                    None
                }
            },
        };

        let seed = match obj.get("seed") {
            None => Some(DEFAULT_SEED),
            Some(v) => v.as_u64().or_else(|| {
                errs.push(FieldError::new("$.seed", "must be a non-negative integer"));
                None
            }),
        };

        let strategy = match obj.get("strategy") {
            None => Some(Strategy::default()),
            Some(v) => match v.as_str() {
                Some("jet") => Some(Strategy::Jet),
                Some("fd") => Some(Strategy::Fd),
                _ => {
                    errs.push(FieldError::new("$.strategy", "must be \"jet\" or \"fd\""));
                    None
                }
            },
        };

        let orientation = match obj.get("orientation") {
            None => Some(1),
            Some(v) => match v.as_i64() {
                Some(1) => Some(1),
                Some(-1) => Some(-1),
                _ => {
                    errs.push(FieldError::new("$.orientation", "must be 1 or -1"));
                    None
                }
            },
        };

        let k_branch = match obj.get("k_branch") {
            None => Some(KBranch::default()),
            Some(v) => match v.as_str() {
                Some("lemma") => Some(KBranch::Lemma),
                Some("alt") => Some(KBranch::Alt),
                Some("auto") => Some(KBranch::Auto),
                _ => {
                    errs.push(FieldError::new("$.k_branch", "must be \"lemma\", \"alt\" or \"auto\""));
                    None
                }
            },
        };

        let defaults = Tolerances::defaults(strategy.unwrap_or_default());
        let mut tolerances = defaults;
        let mut second_order_defaulted = true;
        match obj.get("tolerances") {
            None => {}
            Some(Value::Object(t)) => {
                unknown_keys(t, TOLERANCE_KEYS, "$.tolerances", &mut errs);
                for (key, slot) in [
                    ("geometry", &mut tolerances.geometry),
                    ("first_order", &mut tolerances.first_order),
                    ("second_order", &mut tolerances.second_order),
                ] {
                    let Some(v) = t.get(key) else { continue };
                    let path = format!("$.tolerances.{key}");
                    match v.as_f64() {
                        Some(x) if x.is_finite() && x > 0.0 => {
                            *slot = x;
                            if key == "second_order" {
                                second_order_defaulted = false;
                            }
                        }
                        _ => errs.push(FieldError::new(&path, "must be a positive finite number")),
                    }
                }
            }
            Some(_) => errs.push(FieldError::new("$.tolerances", "must be an object")),
        }

        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }
        Ok(RunConfig {
            m: m.unwrap(),
            f: f.unwrap(),
            expr: expr.unwrap(),
            level: level.unwrap(),
            samples: samples.unwrap(),
            seed: seed.unwrap(),
            tolerances,
            strategy: strategy.unwrap(),
            orientation: orientation.unwrap(),
            k_branch: k_branch.unwrap(),
            second_order_defaulted,
        })
    }

    /// Switches strategy, moving a defaulted second-order tolerance along with it.
    pub fn set_strategy(&mut self, strategy: Strategy) {
        self.strategy = strategy;
        if self.second_order_defaulted {
            self.tolerances.second_order = Tolerances::defaults(strategy).second_order;
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    RunConfig::from_json_str(&text)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    fn new(path: &str, message: &str) -> Self {
        FieldError { path: path.to_string(), message: message.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("config is not valid JSON: {0}")]
    Syntax(String),
    #[error("invalid config:{}", .0.iter().map(|e| format!("\n  {}: {}", e.path, e.message)).collect::<String>())]
    Invalid(Vec<FieldError>),
}

fn unknown_keys(obj: &Map<String, Value>, known: &[&str], prefix: &str, errs: &mut Vec<FieldError>) {
    for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        errs.push(FieldError::new(&format!("{prefix}.{key}"), "unknown key"));
    }
}

fn finite(v: &Value, path: &str, errs: &mut Vec<FieldError>) -> Option<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Some(x),
        _ => {
            errs.push(FieldError::new(path, "must be a finite number"));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json_str(r#"{"m": 1, "f": "x + z", "level": 0}"#).unwrap();
        assert_eq!((c.samples, c.seed, c.orientation), (50, 42, 1));
        assert_eq!(c.strategy, Strategy::Jet);
        assert_eq!(c.k_branch, KBranch::Auto);
        assert_eq!(c.tolerances, Tolerances::defaults(Strategy::Jet));
    }

    #[test]
    fn all_errors_are_collected() {
        let text = r#"{"m": 0, "f": "x + (", "samples": -3, "strategy": "exact",
                       "tolerances": {"geometry": -1, "bogus": 1}, "colour": "red"}"#;
        let ConfigError::Invalid(errs) = RunConfig::from_json_str(text).unwrap_err() else {
            panic!("expected validation errors");
        };
        let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
        for p in ["$.m", "$.f", "$.level", "$.samples", "$.strategy", "$.tolerances.geometry", "$.tolerances.bogus", "$.colour"] {
            assert!(paths.contains(&p), "missing {p} in {paths:?}");
        }
    }

    #[test]
    fn variable_binding_uses_m() {
        let e = RunConfig::from_json_str(r#"{"m": 1, "f": "x2", "level": 0}"#).unwrap_err();
        assert!(e.to_string().contains("$.f"));
        assert!(RunConfig::from_json_str(r#"{"m": 2, "f": "x2", "level": 0}"#).is_ok());
    }

    #[test]
    fn strategy_override_moves_default_tolerance() {
        let mut c = RunConfig::from_json_str(r#"{"m": 1, "f": "x", "level": 0}"#).unwrap();
        c.set_strategy(Strategy::Fd);
        assert_eq!(c.tolerances.second_order, 1e-4);
        let mut c =
            RunConfig::from_json_str(r#"{"m": 1, "f": "x", "level": 0, "tolerances": {"second_order": 1e-3}}"#)
                .unwrap();
        c.set_strategy(Strategy::Fd);
        assert_eq!(c.tolerances.second_order, 1e-3);
    }
}
