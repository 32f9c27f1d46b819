use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reslevel_cli::figures::{figure, FIGURE_IDS};
use reslevel_cli::{run_scan, run_trace, run_verify, Axis, CliError, ScenarioConfig};
use reslevel_validation::Level;

#[derive(Parser)]
#[command(name = "reslevel", version, about = "Exact dynamics of a resonant level coupled to a fermionic reservoir")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Scenario {
    /// Scenario file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set temperature=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Scenario {
    fn load(&self) -> Result<ScenarioConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::parse(&fs::read_to_string(path)?)?,
            None => ScenarioConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanAxis {
    InitialParity,
    EpsilonLevel,
    Temperature,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Time trace of one scenario as CSV.
    Trace {
        #[command(flatten)]
        scenario: Scenario,
        /// Output file, stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Traces over a range of one parameter, long-format CSV.
    Scan {
        #[command(flatten)]
        scenario: Scenario,
        #[arg(long, value_enum)]
        axis: ScanAxis,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in consistency checks. Exits with 1 when any fails.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: VerifyLevel,
        /// Also write a JSON report.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Replace g(t) by a constant in the map checks (negative control).
        #[arg(long, hide = true, allow_hyphen_values = true)]
        inject_g: Option<f64>,
    },
    /// Writes the data of one figure to `<out>/fig<id>.csv`.
    Figure {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(FIGURE_IDS))]
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prints the effective scenario in config-file form.
    Config {
        #[command(flatten)]
        scenario: Scenario,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Trace { scenario, out } => {
            emit(&run_trace(&scenario.load()?)?, out.as_deref())?;
        }
        Command::Scan {
            scenario,
            axis,
            from,
            to,
            count,
            out,
        } => {
            let axis = match axis {
                ScanAxis::InitialParity => Axis::InitialParity,
                ScanAxis::EpsilonLevel => Axis::EpsilonLevel,
                ScanAxis::Temperature => Axis::Temperature,
            };
            emit(&run_scan(&scenario.load()?, axis, from, to, count)?, out.as_deref())?;
        }
        Command::Verify { level, json, inject_g } => {
            let level = match level {
                VerifyLevel::Quick => Level::Quick,
                VerifyLevel::Full => Level::Full,
            };
            let report = run_verify(level, inject_g);
            print!("{}", report.text());
            if let Some(path) = json {
                fs::write(path, report.json())?;
            }
            return Ok(report.passed());
        }
        Command::Figure { id, out } => {
            let csv = figure(&id).expect("id checked by the parser")?;
            fs::create_dir_all(&out)?;
            let path = out.join(format!("fig{id}.csv"));
            fs::write(&path, csv)?;
            println!("{}", path.display());
        }
        Command::Config { scenario } => print!("{}", scenario.load()?.serialize()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("reslevel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
