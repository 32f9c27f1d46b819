//! Command implementations behind the `reslevel` binary.
//!
//! Every command returns its output as a string so that the binary only
//! handles argument parsing, files and exit codes.

pub mod config;
pub mod figures;
pub mod table;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use reslevel_core::kernels::KernelCache;
use reslevel_validation::{verify, Level, Options, Outcome};

pub use config::{ConfigError, Mode, ScenarioConfig};
use table::{render, sample, Column};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical error: {0}")]
    Numerical(#[from] reslevel_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

fn config_meta(cfg: &ScenarioConfig) -> Vec<String> {
    cfg.serialize().lines().map(|l| format!("config: {l}")).collect()
}

/// Rows of the selected columns on the config's time grid.
fn trace_rows(cfg: &ScenarioConfig, columns: &[Column]) -> Result<Vec<Vec<f64>>, CliError> {
    cfg.validate()?;
    let p = cfg.params()?;
    let rho0 = cfg.initial_state()?;
    let cache = KernelCache::new(&p, cfg.t_max)?;
    let rows = cfg
        .times()
        .into_par_iter()
        .map(|t| {
            let s = sample(&cache, &rho0, cfg.divisor_ratio, t)?;
            Ok(columns.iter().map(|&c| s.get(c)).collect())
        })
        .collect::<reslevel_core::Result<_>>()?;
    Ok(rows)
}

/// Single trajectory as CSV.
pub fn run_trace(cfg: &ScenarioConfig) -> Result<String, CliError> {
    let columns = cfg.columns();
    let rows = trace_rows(cfg, &columns)?;
    let mut meta = vec!["reslevel trace".to_string()];
    meta.extend(config_meta(cfg));
    let header: Vec<&str> = columns.iter().map(|c| c.name()).collect();
    Ok(render(&meta, &header, &rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    InitialParity,
    EpsilonLevel,
    Temperature,
}

impl Axis {
    pub fn key(self) -> &'static str {
        match self {
            Axis::InitialParity => "initial_parity",
            Axis::EpsilonLevel => "epsilon_level",
            Axis::Temperature => "temperature",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Axis::InitialParity, Axis::EpsilonLevel, Axis::Temperature]
            .into_iter()
            .find(|a| a.key() == s)
            .ok_or_else(|| format!("unknown scan axis `{s}`"))
    }
}

/// `count` equally spaced values from `from` to `to`, inclusive.
pub fn linspace(from: f64, to: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..count)
            .map(|k| if k + 1 == count { to } else { from + (to - from) * k as f64 / (count - 1) as f64 })
            .collect(),
    }
}

/// Long-format CSV over one parameter axis, sorted by axis value and time.
pub fn run_scan(cfg: &ScenarioConfig, axis: Axis, from: f64, to: f64, count: usize) -> Result<String, CliError> {
    if count == 0 {
        return Err(ConfigError::new("count", "scan needs at least one point").into());
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(ConfigError::new("from", "scan bounds must be finite").into());
    }
    let mut values = linspace(from, to, count);
    values.sort_by(f64::total_cmp);
    let columns: Vec<Column> = cfg.columns().into_iter().filter(|&c| c != Column::T).collect();
    let mut with_t = vec![Column::T];
    with_t.extend(&columns);

    let configs = values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.set(axis.key(), &v.to_string())?;
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let blocks = values
        .par_iter()
        .zip(&configs)
        .map(|(&v, c)| {
            let rows = trace_rows(c, &with_t)?;
            Ok(rows
                .into_iter()
                .map(|r| std::iter::once(v).chain(r).collect::<Vec<f64>>())
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut meta = vec![
        "reslevel scan".to_string(),
        format!("axis: {axis} from {from} to {to} count {count}"),
    ];
    meta.extend(config_meta(cfg));
    let mut header = vec![axis.key()];
    header.extend(with_t.iter().map(|c| c.name()));
    Ok(render(&meta, &header, &blocks.concat()))
}

/// Result of the built-in checks.
pub struct VerifyReport {
    pub outcomes: Vec<Outcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn text(&self) -> String {
        let mut out: String = self.outcomes.iter().map(|o| o.line() + "\n").collect();
        let n = self.outcomes.iter().filter(|o| o.passed).count();
        out.push_str(&format!("verify: {n} of {} checks passed\n", self.outcomes.len()));
        out
    }

    pub fn json(&self) -> String {
        let report = serde_json::json!({
            "passed": self.passed(),
            "checks": self.outcomes,
        });
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    }
}

pub fn run_verify(level: Level, inject_g: Option<f64>) -> VerifyReport {
    VerifyReport {
        outcomes: verify(level, &Options { inject_g }),
    }
}
