use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Usage(format!("unknown format '{other}', expected csv or json"))),
        }
    }
}

/// Run settings from a config file, later overridden by command-line flags.
///
/// The file holds `key = value` lines. Top-level keys are `name`, `seed`, `out` and `format`;
/// a `[experiment-name]` section sets parameters for that experiment. `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub parameters: BTreeMap<String, BTreeMap<String, f64>>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { name: None, parameters: BTreeMap::new(), seed: 0, output_path: None, format: OutputFormat::Csv }
    }
}

fn parse_number(key: &str, value: &str) -> Result<f64> {
    value.parse::<f64>().map_err(|_| Error::Config(format!("'{key}' needs a number, got '{value}'")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                cfg.parameters.entry(name.clone()).or_default();
                section = Some(name);
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            match &section {
                Some(s) => {
                    cfg.parameters.get_mut(s).expect("section inserted").insert(key.to_string(), parse_number(key, value)?);
                }
                None => match key {
                    "name" => cfg.name = Some(value.to_string()),
                    "seed" => cfg.seed = value.parse().map_err(|_| Error::Config(format!("seed '{value}' is not an integer")))?,
                    "out" => cfg.output_path = Some(PathBuf::from(value)),
                    "format" => cfg.format = value.parse()?,
                    other => return Err(Error::Config(format!("line {}: unknown key '{other}'", lineno + 1))),
                },
            }
        }
        Ok(cfg)
    }

    /// Parameters for `name` from its section.
    pub fn section(&self, name: &str) -> BTreeMap<String, f64> {
        self.parameters.get(name).cloned().unwrap_or_default()
    }

    /// Applies a `key=value` override to the section of `name`.
    pub fn set(&mut self, name: &str, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects key=value, got '{assignment}'")))?;
        let v = parse_number(key.trim(), value.trim()).map_err(|e| Error::Usage(e.to_string()))?;
        self.parameters.entry(name.to_string()).or_default().insert(key.trim().to_string(), v);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_top_level() {
        let cfg = ExperimentConfig::parse("name = su2-kernel\nseed = 7 # fixed\n[su2-kernel]\ns = 1.5\n").unwrap();
        assert_eq!(cfg.name.as_deref(), Some("su2-kernel"));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.section("su2-kernel")["s"], 1.5);
    }

    #[test]
    fn rejects_garbage() {
        assert!(ExperimentConfig::parse("colour = red").is_err());
        assert!(ExperimentConfig::parse("[a]\nx = y").is_err());
        assert!(ExperimentConfig::parse("just words").is_err());
    }
}
