//! Flat JSON experiment configurations.

use crate::experiment::{experiment_registry, Experiment};
use crate::RunError;
use serde_json::{Map, Number, Value};
use std::collections::BTreeMap;

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Value type of a config key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Real,
    Int,
    Reals,
    Ints,
    /// Signed integers, used for site windows.
    Sites,
    Text,
    Texts,
}

/// How a missing key is filled.
#[derive(Debug, Clone, Copy)]
pub enum Fill {
    Required,
    /// Left absent, or filled by the experiment's own defaults.
    Optional,
    Real(f64),
    Int(u64),
    Reals(&'static [f64]),
    Ints(&'static [u64]),
    Sites(&'static [i64]),
    Text(&'static str),
    Texts(&'static [&'static str]),
}

/// One accepted key of a command.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub fill: Fill,
}

impl Key {
    pub const fn new(name: &'static str, kind: Kind, fill: Fill) -> Self {
        Key { name, kind, fill }
    }
}

const COMMON: [Key; 2] = [
    Key::new("seed", Kind::Int, Fill::Int(DEFAULT_SEED)),
    Key::new("output_dir", Kind::Text, Fill::Text(DEFAULT_OUTPUT_DIR)),
];

fn config_error<T>(msg: impl Into<String>) -> Result<T, RunError> {
    Err(RunError::Config(msg.into()))
}

fn real_value(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// Checks `v` against `kind` and returns it in normal form (reals as floats).
fn normalise(name: &str, kind: Kind, v: &Value) -> Result<Value, RunError> {
    let bad = |what: &str| config_error(format!("key '{name}' must be {what}"));
    let real = |v: &Value| v.as_f64().filter(|x| x.is_finite());
    match kind {
        Kind::Real => match real(v) {
            Some(x) => Ok(real_value(x)),
            None => bad("a number"),
        },
        Kind::Int => match v.as_u64() {
            Some(x) => Ok(Value::from(x)),
            None => bad("a non-negative integer"),
        },
        Kind::Sites => match v.as_array() {
            Some(a) if a.iter().all(|x| x.as_i64().is_some()) => Ok(v.clone()),
            _ => bad("a list of integers"),
        },
        Kind::Ints => match v.as_array() {
            Some(a) if a.iter().all(|x| x.as_u64().is_some()) => Ok(v.clone()),
            _ => bad("a list of non-negative integers"),
        },
        Kind::Reals => match v.as_array() {
            Some(a) if a.iter().all(|x| real(x).is_some()) => {
                Ok(Value::Array(a.iter().map(|x| real_value(real(x).unwrap_or_default())).collect()))
            }
            _ => bad("a list of numbers"),
        },
        Kind::Text => match v {
            Value::String(_) => Ok(v.clone()),
            _ => bad("a string"),
        },
        Kind::Texts => match v.as_array() {
            Some(a) if a.iter().all(Value::is_string) => Ok(v.clone()),
            _ => bad("a list of strings"),
        },
    }
}

fn fill_value(fill: Fill) -> Option<Value> {
    match fill {
        Fill::Required | Fill::Optional => None,
        Fill::Real(x) => Some(real_value(x)),
        Fill::Int(x) => Some(Value::from(x)),
        Fill::Reals(v) => Some(Value::Array(v.iter().map(|&x| real_value(x)).collect())),
        Fill::Ints(v) => Some(Value::from(v.to_vec())),
        Fill::Sites(v) => Some(Value::from(v.to_vec())),
        Fill::Text(s) => Some(Value::from(s)),
        Fill::Texts(v) => Some(Value::from(v.to_vec())),
    }
}

/// Validated key/value map of one run, defaults filled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    values: BTreeMap<String, Value>,
}

impl Params {
    pub fn has(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    fn get(&self, name: &str) -> Result<&Value, RunError> {
        self.values.get(name).ok_or_else(|| RunError::Config(format!("missing required key '{name}'")))
    }

    pub fn real(&self, name: &str) -> Result<f64, RunError> {
        self.get(name)?.as_f64().ok_or_else(|| RunError::Config(format!("key '{name}' must be a number")))
    }

    pub fn int(&self, name: &str) -> Result<u64, RunError> {
        self.get(name)?.as_u64().ok_or_else(|| RunError::Config(format!("key '{name}' must be a non-negative integer")))
    }

    pub fn size(&self, name: &str) -> Result<usize, RunError> {
        Ok(self.int(name)? as usize)
    }

    fn list<T>(&self, name: &str, f: impl Fn(&Value) -> Option<T>) -> Result<Vec<T>, RunError> {
        let bad = || RunError::Config(format!("key '{name}' has the wrong element type"));
        self.get(name)?.as_array().ok_or_else(bad)?.iter().map(|v| f(v).ok_or_else(bad)).collect()
    }

    pub fn reals(&self, name: &str) -> Result<Vec<f64>, RunError> {
        self.list(name, Value::as_f64)
    }

    pub fn sizes(&self, name: &str) -> Result<Vec<usize>, RunError> {
        self.list(name, |v| v.as_u64().map(|x| x as usize))
    }

    pub fn sites(&self, name: &str) -> Result<Vec<i64>, RunError> {
        self.list(name, Value::as_i64)
    }

    pub fn text(&self, name: &str) -> Result<String, RunError> {
        self.get(name)?
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| RunError::Config(format!("key '{name}' must be a string")))
    }

    pub fn texts(&self, name: &str) -> Result<Vec<String>, RunError> {
        self.list(name, |v| v.as_str().map(str::to_owned))
    }

    /// Threshold `name`, taken from the `thresholds` object.
    pub fn threshold(&self, name: &str) -> Result<f64, RunError> {
        self.get("thresholds")?
            .get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| RunError::Config(format!("missing threshold '{name}'")))
    }

    pub fn seed(&self) -> Result<u64, RunError> {
        self.int("seed")
    }

    pub fn set_real(&mut self, name: &str, x: f64) {
        self.values.insert(name.to_owned(), real_value(x));
    }

    pub fn set_int(&mut self, name: &str, x: u64) {
        self.values.insert(name.to_owned(), Value::from(x));
    }

    pub fn set_text(&mut self, name: &str, s: &str) {
        self.values.insert(name.to_owned(), Value::from(s));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.values.iter()
    }
}

/// A command together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: String,
    pub params: Params,
}

impl ExperimentConfig {
    /// The flat JSON object, `command` included.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command.as_str()));
        for (k, v) in self.params.iter() {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("config values serialise")
    }
}

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub output_dir: Option<String>,
}

/// Parses a flat JSON object into a validated config with defaults filled.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<ExperimentConfig, RunError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| RunError::Config(format!("config is not valid JSON: {e}")))?;
    let Value::Object(mut map) = value else {
        return config_error("config must be a JSON object");
    };
    let in_file = match map.remove("command") {
        Some(Value::String(s)) => Some(s),
        Some(_) => return config_error("key 'command' must be a string"),
        None => None,
    };
    let command = match (&overrides.command, in_file) {
        (Some(a), Some(b)) if *a != b => {
            return config_error(format!("config is for command '{b}' but '{a}' was requested"));
        }
        (Some(a), _) => a.clone(),
        (None, Some(b)) => b,
        (None, None) => return config_error("missing required key 'command'"),
    };
    if let Some(seed) = overrides.seed {
        map.insert("seed".into(), Value::from(seed));
    }
    if let Some(dir) = &overrides.output_dir {
        map.insert("output_dir".into(), Value::from(dir.as_str()));
    }
    let registry = experiment_registry();
    let exp = registry.get(&command).ok_or_else(|| {
        RunError::Config(format!("unknown command '{command}'; expected one of: {}", registry.names().join(", ")))
    })?;
    let params = build_params(exp, map)?;
    Ok(ExperimentConfig { command, params })
}

/// Reads and parses a config file; `None` starts from an empty object.
pub fn load_config(path: Option<&std::path::Path>, overrides: &Overrides) -> Result<ExperimentConfig, RunError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| RunError::Config(format!("cannot read config {}: {e}", p.display())))?,
        None => "{}".to_owned(),
    };
    parse_config(&text, overrides)
}

fn build_params(exp: &dyn Experiment, mut map: Map<String, Value>) -> Result<Params, RunError> {
    let keys: Vec<Key> = COMMON.iter().chain(exp.keys()).copied().collect();
    if let Some(k) = map.keys().find(|k| *k != "thresholds" && !keys.iter().any(|key| key.name == k.as_str())) {
        return config_error(format!("unknown key '{k}' for command '{}'", exp.name()));
    }
    let mut values = BTreeMap::new();
    for key in &keys {
        let v = match map.remove(key.name) {
            Some(v) => Some(normalise(key.name, key.kind, &v)?),
            None => fill_value(key.fill),
        };
        match v {
            Some(v) => {
                values.insert(key.name.to_owned(), v);
            }
            None if matches!(key.fill, Fill::Required) => {
                return config_error(format!("missing required key '{}'", key.name));
            }
            None => {}
        }
    }
    let mut thresholds = Map::new();
    for &(name, x) in exp.thresholds() {
        thresholds.insert(name.to_owned(), real_value(x));
    }
    match map.remove("thresholds") {
        None => {}
        Some(Value::Object(given)) => {
            for (name, v) in given {
                if !thresholds.contains_key(&name) {
                    return config_error(format!("unknown threshold '{name}' for command '{}'", exp.name()));
                }
                thresholds.insert(name.clone(), normalise(&format!("thresholds.{name}"), Kind::Real, &v)?);
            }
        }
        Some(_) => return config_error("key 'thresholds' must be an object"),
    }
    values.insert("thresholds".into(), Value::Object(thresholds));
    let mut params = Params { values };
    exp.finish(&mut params)?;
    Ok(params)
}

/// Sets `Y` to `16 * max_n` when absent and returns `Y / max_n`, which must
/// be at least 2.
pub fn truncation_factor(p: &mut Params, max_n: usize) -> Result<usize, RunError> {
    if max_n == 0 {
        return config_error("volumes must be positive");
    }
    if !p.has("Y") {
        p.set_int("Y", 16 * max_n as u64);
    }
    let y = p.size("Y")?;
    if y < 2 * max_n {
        return config_error(format!("key 'Y' must be at least 2 * max N = {}", 2 * max_n));
    }
    Ok(y / max_n)
}
