//! Named experiments with tolerance-checked result rows, shared by the `cohproj` binary and the
//! acceptance tests.

mod config;
mod runs;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

pub use config::{ExperimentConfig, OutputFormat};

/// One checked quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub re: f64,
    pub im: f64,
    pub tolerance: f64,
    pub residual: f64,
    pub pass: bool,
}

impl Row {
    pub fn new(quantity: impl Into<String>, value: C64, residual: f64, tolerance: f64) -> Self {
        Self {
            quantity: quantity.into(),
            re: value.re,
            im: value.im,
            tolerance,
            residual,
            pass: residual.is_finite() && residual <= tolerance,
        }
    }

    /// A real quantity that must itself stay below the tolerance.
    pub fn bound(quantity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(quantity, C64::new(value, 0.0), value.abs(), tolerance)
    }

    /// A real quantity compared against a target.
    pub fn target(quantity: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(quantity, C64::new(value, 0.0), (value - target).abs(), tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Suite {
    Fast,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Suite::Fast),
            "full" => Ok(Suite::Full),
            other => Err(Error::Usage(format!("unknown suite '{other}', expected fast or full"))),
        }
    }
}

/// Parameter values after defaults and overrides. `NaN` defaults mark optional keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    fn resolve(defaults: &[(&str, f64)], overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut values: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        values.insert("tolerance_scale".into(), 1.0);
        for (k, v) in overrides {
            match values.get_mut(k) {
                Some(slot) => *slot = *v,
                None => return Err(Error::Usage(format!("unknown parameter '{k}'"))),
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    pub fn opt(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied().filter(|v| !v.is_nan())
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key);
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Usage(format!("parameter '{key}' = {v} must be a nonnegative integer")));
        }
        Ok(v as usize)
    }

    /// Base tolerance times `tolerance_scale`.
    pub fn tol(&self, base: f64) -> f64 {
        base * self.get("tolerance_scale")
    }
}

pub type RunFn = fn(&Params, u64) -> Result<Vec<Row>>;

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    /// Library operation the experiment exercises, as a module path.
    pub anchor: &'static str,
    /// Smallest suite that includes the experiment.
    pub suite: Suite,
    pub defaults: &'static [(&'static str, f64)],
    run: RunFn,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).field("anchor", &self.anchor).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub name: String,
    pub seed: u64,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.pass)
    }

    /// Worst `residual / tolerance` over the rows.
    pub fn worst_ratio(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| if r.tolerance > 0.0 { r.residual / r.tolerance } else if r.residual == 0.0 { 0.0 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,re,im,tolerance,residual,pass\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.16e},{:.16e},{:.16e},{:.16e},{}", r.quantity, r.re, r.im, r.tolerance, r.residual, r.pass);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

impl Experiment {
    pub fn params(&self, overrides: &BTreeMap<String, f64>) -> Result<Params> {
        Params::resolve(self.defaults, overrides)
    }

    pub fn run(&self, overrides: &BTreeMap<String, f64>, seed: u64) -> Result<Report> {
        let params = self.params(overrides)?;
        let rows = (self.run)(&params, seed)?;
        Ok(Report { name: self.name.to_string(), seed, rows })
    }
}

/// Registered experiments in stable order; the first twelve are the acceptance criteria.
pub fn registry() -> &'static [Experiment] {
    runs::REGISTRY
}

pub fn find(name: &str) -> Result<&'static Experiment> {
    registry()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Usage(format!("unknown experiment '{name}'")))
}

/// Runs every experiment in `suite` and returns the reports in registry order.
pub fn verify(suite: Suite, overrides: &BTreeMap<String, f64>, seed: u64) -> Vec<(&'static Experiment, Result<Report>)> {
    registry()
        .iter()
        .filter(|e| e.suite <= suite)
        .map(|e| {
            // only pass keys the experiment knows, so a global tolerance_scale reaches all of them
            let own: BTreeMap<String, f64> = overrides
                .iter()
                .filter(|(k, _)| k.as_str() == "tolerance_scale" || e.defaults.iter().any(|(d, _)| d == k))
                .map(|(k, v)| (k.clone(), *v))
                .collect();
            (e, e.run(&own, seed))
        })
        .collect()
}
