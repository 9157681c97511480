use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use densop::cli::oracle::{self, Suite};
use densop::cli::{estimate_table, figure_table, read_samples, ExperimentConfig, Figure};
use densop::Result;

/// Density-operator learning of probability densities.
#[derive(Debug, Parser)]
#[command(name = "densop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// Experiment config (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the sampler seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override any config key, e.g. `--set family=haar`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write the effective config to this path.
    #[arg(long)]
    save_config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the data table behind one figure.
    Reproduce {
        #[arg(long)]
        figure: String,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Estimate a density from a sample file (one value per line).
    Estimate {
        samples: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Run the built-in invariant checks.
    Oracle {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?)?,
            None => ExperimentConfig::default(),
        };
        for entry in &self.overrides {
            let (key, value) = entry.split_once('=').ok_or_else(|| {
                densop::Error::Config(format!("expected KEY=VALUE, got '{entry}'"))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        config.validate()?;
        if let Some(path) = &self.save_config {
            fs::write(path, config.to_text())?;
        }
        Ok(config)
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Reproduce { figure, args } => {
            let figure: Figure = figure.parse()?;
            let config = args.resolve()?;
            figure_table(figure, &config)?.save(config.output.as_deref())?;
        }
        Command::Estimate { samples, args } => {
            let config = args.resolve()?;
            let set = read_samples(&samples, &config)?;
            estimate_table(&set, &config)?.save(config.output.as_deref())?;
        }
        Command::Oracle { suite } => {
            let suite: Suite = suite.parse()?;
            let report = oracle::run(suite)?;
            println!("{report}");
            if !report.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("densop: {e}");
            ExitCode::from(1)
        }
    }
}
