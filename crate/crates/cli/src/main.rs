//! `qpg`: run the quantum public-goods game from a JSON configuration.
//!
//! Exit codes: 0 on success, 2 on usage or validation errors, 3 when a run
//! exceeds the configured capacity limits.

mod commands;
mod config;

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qpg_core::{Engine, Error, Limits, Result};
use serde::Serialize;

use commands::Output;
use config::{Format, MethodConfig, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "qpg", version, about = "Quantum public-goods game simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file, or `-` for standard input
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output format; csv covers the tabular part of each report
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for Monte Carlo sampling and random deviation draws
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Switch to Monte Carlo estimation with this many samples
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads (defaults to one per core)
    #[arg(long, global = true, env = "QPG_THREADS")]
    threads: Option<usize>,
    /// Capacity limits as `<amplitudes>,<work>`
    #[arg(long, global = true, value_name = "AMPLITUDES,WORK", value_parser = parse_caps)]
    caps: Option<Limits>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Classical payoffs for all 2^n contribution outcomes
    PayoffTable,
    /// Expected payoffs of the configured strategy profile
    Simulate,
    /// Closed-form payoff and single-player deviation search
    Equilibrium,
    /// Contribution plan for heterogeneous endowments
    Plan,
    /// Expected entanglement-distribution attempts per scheme
    Cost,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::PayoffTable => "payoff-table",
            Command::Simulate => "simulate",
            Command::Equilibrium => "equilibrium",
            Command::Plan => "plan",
            Command::Cost => "cost",
        }
    }
}

fn parse_caps(s: &str) -> std::result::Result<Limits, String> {
    let (amps, work) = s.split_once(',').ok_or("expected <amplitudes>,<work>")?;
    let parse = |v: &str| v.trim().parse::<u64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Limits {
        max_amplitudes: parse(amps)?,
        max_work: parse(work)?,
    })
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a RunConfig,
    result: serde_json::Value,
}

fn read_config(path: &PathBuf) -> Result<String> {
    let mut text = String::new();
    let read = if path.as_os_str() == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    read.map_err(|e| Error::InvalidArgument(format!("reading {}: {e}", path.display())))?;
    Ok(text)
}

/// Flags override the matching config fields; the overridden config is what
/// the report echoes.
fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--config <PATH|-> is required".into()))?;
    let mut config = RunConfig::parse(&read_config(path)?)?;
    if let Some(format) = cli.format {
        config.format = format;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(samples) = cli.samples {
        config.method = MethodConfig::MonteCarlo { samples };
    }
    if let Some(caps) = cli.caps {
        config.limits = caps;
    }
    Ok(config)
}

fn render(command: Command, config: &RunConfig, out: Output) -> Result<String> {
    match config.format {
        Format::Json => {
            let report = Report {
                tool: "qpg",
                version: env!("CARGO_PKG_VERSION"),
                command: command.name(),
                seed: config.seed,
                config,
                result: out.json,
            };
            let mut text = serde_json::to_string_pretty(&report).expect("reports serialize");
            text.push('\n');
            Ok(text)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::InvalidState(format!("writing csv: {e}"));
            w.write_record(&out.header).map_err(csv_err)?;
            for row in &out.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::InvalidState(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

fn run(cli: &Cli) -> Result<String> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidState(format!("thread pool: {e}")))?;
    }
    let config = effective_config(cli)?;
    let engine = Engine::new(config.limits);
    let out = match cli.command {
        Command::PayoffTable => commands::payoff_table(&config)?,
        Command::Simulate => commands::simulate(&config, &engine)?,
        Command::Equilibrium => commands::equilibrium(&config, &engine)?,
        Command::Plan => commands::plan(&config)?,
        Command::Cost => commands::cost(&config)?,
    };
    render(cli.command, &config, out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(text) => {
            // one write, so a failed run never leaves a partial report behind
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qpg: {e}");
            ExitCode::from(if matches!(e, Error::Capacity(_)) { 3 } else { 2 })
        }
    }
}
