//! `breakren`: tune break maps, build partitions, tabulate renormalizations.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] breakren::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_precision() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "breakren", version, about = "Renormalization experiments for circle maps with a break")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tune β so the preset has the target rotation number.
    Tune(Common),
    /// Write the level-n dynamical partition.
    Partition(Common),
    /// Per-level coefficients and approximant distances, with a plot script.
    RenormTable(Common),
    /// Fit an exponential or polynomial rate to one column of a table.
    RateFit(Common),
    /// Distortion probes on shrinking intervals plus the Υ̃ bound check.
    LemmaSuite(Common),
    /// Empirical class constant of f′ from second symmetric differences.
    ZygmundCheck(Common),
    /// Möbius identity gate: f_n = F_n and g_n = G_n to rounding.
    Oracle(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Family preset, e.g. `zygmund:c=2,gamma=0.75,eps=0.05,xstar=0.5`.
    #[arg(long)]
    preset: Option<String>,
    /// `golden`, `silver` or a comma list of partial quotients.
    #[arg(long)]
    quotients: Option<String>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Partition level.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    base_bits: Option<u32>,
    #[arg(long)]
    per_level_bits: Option<u32>,
    /// Output directory; the BREAKREN_OUT environment variable wins over it.
    #[arg(long)]
    out: Option<String>,
    /// Table to read for rate-fit.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    column: Option<String>,
    /// `exponential` or `polynomial`.
    #[arg(long)]
    model: Option<String>,
    /// Level window `lo..hi`.
    #[arg(long)]
    window: Option<String>,
    /// Any other config key as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<Config, CliError> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        let flags: [(&str, Option<String>); 11] = [
            ("preset", self.preset.clone()),
            ("quotients", self.quotients.clone()),
            ("n_max", self.n_max.map(|v| v.to_string())),
            ("n", self.n.map(|v| v.to_string())),
            ("base_bits", self.base_bits.map(|v| v.to_string())),
            ("per_level_bits", self.per_level_bits.map(|v| v.to_string())),
            ("out", self.out.clone()),
            ("input", self.input.clone()),
            ("column", self.column.clone()),
            ("model", self.model.clone()),
            ("window", self.window.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    match cli.command {
        Command::Tune(c) => commands::tune(&c.config()?),
        Command::Partition(c) => {
            let cfg = c.config()?;
            commands::partition(&cfg, &cfg.out_dir())
        }
        Command::RenormTable(c) => {
            let cfg = c.config()?;
            commands::renorm_table(&cfg, &cfg.out_dir())
        }
        Command::RateFit(c) => commands::rate_fit(&c.config()?),
        Command::LemmaSuite(c) => {
            let cfg = c.config()?;
            commands::lemma_suite(&cfg, &cfg.out_dir())
        }
        Command::ZygmundCheck(c) => {
            let cfg = c.config()?;
            commands::zygmund_check(&cfg, &cfg.out_dir())
        }
        Command::Oracle(c) => commands::oracle(&c.config()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
