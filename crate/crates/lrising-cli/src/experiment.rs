//! Experiments as named strategy objects.

use crate::config::{Key, Params};
use crate::experiments;
use crate::RunError;
use lrising::registry::{Named, Registry, RegistryBuilder};
use serde::Serialize;

/// A command of the tool.
pub trait Experiment: Named + Send + Sync {
    /// One-line description for `--help`.
    fn about(&self) -> &'static str;

    /// Accepted keys besides `seed`, `output_dir` and `thresholds`.
    fn keys(&self) -> &'static [Key];

    /// Named thresholds and their defaults.
    fn thresholds(&self) -> &'static [(&'static str, f64)] {
        &[]
    }

    /// Derived defaults and cross-key checks, run before any computation.
    fn finish(&self, _p: &mut Params) -> Result<(), RunError> {
        Ok(())
    }

    fn run(&self, p: &Params) -> Result<Outcome, RunError>;
}

/// CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    /// Integers in decimal, reals in shortest round-trip exponent form.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// One CSV file, written as `<name>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_owned(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Builds a row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::experiment::Cell::from($x)),*]
    };
}

/// A checked claim with its measured value and threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub threshold: f64,
    /// Second bound for `within`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Assertion {
    fn make(name: impl Into<String>, value: f64, relation: &'static str, threshold: f64, pass: bool) -> Self {
        Assertion { name: name.into(), value, relation, threshold, upper: None, pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::make(name, value, "<=", threshold, value <= threshold)
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::make(name, value, "<", threshold, value < threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::make(name, value, ">=", threshold, value >= threshold)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::make(name, value, ">", threshold, value > threshold)
    }

    /// `lo <= value <= hi`.
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        let mut a = Self::make(name, value, "within", lo, (lo..=hi).contains(&value));
        a.upper = Some(hi);
        a
    }

    /// A yes/no property, recorded as value 1 or 0 against threshold 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::make(name, f64::from(u8::from(ok)), "==", 1.0, ok)
    }
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub assertions: Vec<Assertion>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// All commands, keyed by name.
pub fn experiment_registry() -> Registry<dyn Experiment> {
    experiments::all()
        .into_iter()
        .fold(RegistryBuilder::<dyn Experiment>::new(), |b, e| b.register(e))
        .build()
        .expect("command names are distinct")
}
