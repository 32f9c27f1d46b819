//! Flat `key = value` scenario files.
//!
//! Lines starting with `#` and blank lines are ignored. Energies and
//! temperatures are in units of the coupling, times in units of its inverse.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use reslevel_core::{DensityMatrix, ModelParams};

use crate::table::Column;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Parity superselection: the initial state has no coherence.
    Fermion,
    /// Spin reading of the level, coherences allowed.
    Spin,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Fermion => "fermion",
            Mode::Spin => "spin",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fermion" => Ok(Mode::Fermion),
            "spin" => Ok(Mode::Spin),
            _ => Err(format!("expected `fermion` or `spin`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub epsilon_level: f64,
    pub mu: f64,
    pub gamma_coupling: f64,
    pub temperature: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub initial_parity: f64,
    pub initial_field_re: f64,
    pub initial_field_im: f64,
    pub mode: Mode,
    /// Empty means every column.
    pub outputs: Vec<Column>,
    /// `alpha` in the `g_divisor` column, evaluated at `(t, alpha t)`.
    pub divisor_ratio: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            epsilon_level: 2.0 * std::f64::consts::PI,
            mu: 0.0,
            gamma_coupling: 1.0,
            temperature: 0.1,
            t_max: 10.0,
            n_points: 201,
            initial_parity: 1.0,
            initial_field_re: 0.0,
            initial_field_im: 0.0,
            mode: Mode::Fermion,
            outputs: Vec::new(),
            divisor_ratio: 0.5,
        }
    }
}

pub const KEYS: [&str; 12] = [
    "epsilon_level",
    "mu",
    "gamma_coupling",
    "temperature",
    "t_max",
    "n_points",
    "initial_parity",
    "initial_field_re",
    "initial_field_im",
    "mode",
    "outputs",
    "divisor_ratio",
];

fn number(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value
        .parse()
        .map_err(|_| ConfigError::new(key, format!("`{value}` is not a number")))?;
    if !x.is_finite() {
        return Err(ConfigError::new(key, "must be finite"));
    }
    Ok(x)
}

impl ScenarioConfig {
    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "epsilon_level" => self.epsilon_level = number(key, value)?,
            "mu" => self.mu = number(key, value)?,
            "gamma_coupling" => self.gamma_coupling = number(key, value)?,
            "temperature" => self.temperature = number(key, value)?,
            "t_max" => self.t_max = number(key, value)?,
            "n_points" => {
                self.n_points = value
                    .parse()
                    .map_err(|_| ConfigError::new(key, format!("`{value}` is not a count")))?
            }
            "initial_parity" => self.initial_parity = number(key, value)?,
            "initial_field_re" => self.initial_field_re = number(key, value)?,
            "initial_field_im" => self.initial_field_im = number(key, value)?,
            "mode" => self.mode = value.parse().map_err(|e: String| ConfigError::new(key, e))?,
            "outputs" => {
                self.outputs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|e: String| ConfigError::new(key, e)))
                    .collect::<Result<_, _>>()?
            }
            "divisor_ratio" => self.divisor_ratio = number(key, value)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(assignment, "override must have the form key=value"))?;
        self.set(key.trim(), value)
    }

    /// Parses a scenario file on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(&format!("line {}", n + 1), "expected `key = value`"))?;
            cfg.set(key.trim(), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn value_of(&self, key: &str) -> String {
        match key {
            "epsilon_level" => self.epsilon_level.to_string(),
            "mu" => self.mu.to_string(),
            "gamma_coupling" => self.gamma_coupling.to_string(),
            "temperature" => self.temperature.to_string(),
            "t_max" => self.t_max.to_string(),
            "n_points" => self.n_points.to_string(),
            "initial_parity" => self.initial_parity.to_string(),
            "initial_field_re" => self.initial_field_re.to_string(),
            "initial_field_im" => self.initial_field_im.to_string(),
            "mode" => self.mode.to_string(),
            "outputs" => self.outputs.iter().map(|c| c.name()).collect::<Vec<_>>().join(","),
            "divisor_ratio" => self.divisor_ratio.to_string(),
            _ => String::new(),
        }
    }

    /// One `key = value` line per field. Numbers use the shortest exact
    /// representation, so parsing the result gives back the same config.
    pub fn serialize(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.value_of(k))).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma_coupling > 0.0) {
            return Err(ConfigError::new("gamma_coupling", "must be positive"));
        }
        if self.temperature < 0.0 {
            return Err(ConfigError::new("temperature", "must be non-negative"));
        }
        if !(self.t_max > 0.0) {
            return Err(ConfigError::new("t_max", "must be positive"));
        }
        if self.n_points < 2 {
            return Err(ConfigError::new("n_points", "need at least 2 time points"));
        }
        if !(0.0..=1.0).contains(&self.divisor_ratio) {
            return Err(ConfigError::new("divisor_ratio", "must lie in [0, 1]"));
        }
        if self.mode == Mode::Fermion && (self.initial_field_re != 0.0 || self.initial_field_im != 0.0) {
            return Err(ConfigError::new(
                "initial_field_re",
                "fermion mode forbids an initial coherence; use mode = spin",
            ));
        }
        let norm = self.initial_parity.powi(2) + 4.0 * (self.initial_field_re.powi(2) + self.initial_field_im.powi(2));
        if norm > 1.0 + 1e-12 {
            return Err(ConfigError::new(
                "initial_parity",
                format!("parity^2 + |2 field|^2 = {norm} exceeds 1"),
            ));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<ModelParams, ConfigError> {
        ModelParams::new(self.epsilon_level, self.mu, self.gamma_coupling, self.temperature)
            .map_err(|e| ConfigError::new("epsilon_level", e.to_string()))
    }

    pub fn initial_state(&self) -> Result<DensityMatrix, ConfigError> {
        DensityMatrix::new(
            self.initial_parity,
            Complex64::new(self.initial_field_re, self.initial_field_im),
        )
        .map_err(|e| ConfigError::new("initial_parity", e.to_string()))
    }

    pub fn columns(&self) -> Vec<Column> {
        if self.outputs.is_empty() {
            Column::ALL.to_vec()
        } else {
            self.outputs.clone()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_points - 1;
        (0..=n)
            .map(|k| if k == n { self.t_max } else { self.t_max * k as f64 / n as f64 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_overrides() {
        let mut cfg = ScenarioConfig::parse("# scenario\n\nepsilon_level = 3.5\noutputs = t, parity\n").unwrap();
        assert_eq!(cfg.epsilon_level, 3.5);
        assert_eq!(cfg.outputs, vec![Column::T, Column::Parity]);
        cfg.apply_override("temperature=0.25").unwrap();
        assert_eq!(cfg.temperature, 0.25);
    }

    #[test]
    fn errors_name_the_field() {
        let err = ScenarioConfig::parse("gamma_coupling = -1").unwrap_err();
        assert_eq!(err.field, "gamma_coupling");
        let err = ScenarioConfig::parse("initial_field_re = 0.1").unwrap_err();
        assert_eq!(err.field, "initial_field_re");
        let err = ScenarioConfig::parse("colour = blue").unwrap_err();
        assert_eq!(err.message, "unknown key");
        assert!(ScenarioConfig::parse("mode = spin\ninitial_parity = 0.9\ninitial_field_re = 0.4").is_err());
    }
}
