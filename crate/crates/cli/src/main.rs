use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use ccss_cli::commands::{self, RunOpts};
use ccss_cli::output::{Format, Table};
use ccss_cli::scenario::{config_err, ModelSel, Scenario};
use ccss_cli::validate;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccss", version, about = "Cooperative spectrum sensing experiments over Nakagami-m fading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Monte Carlo trials per hypothesis (overrides the scenario).
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Base seed (overrides the scenario).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Detection-probability model (overrides the scenario).
    #[arg(long, value_enum)]
    model: Option<ModelSel>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "N", default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Local ROC of single energy detectors.
    LocalRoc(Common),
    /// Complementary local ROC (miss probability against p_f).
    Croc(Common),
    /// System ROC at the fusion center.
    SystemRoc(Common),
    /// Total error against the vote threshold l, with l_opt.
    Lopt(Common),
    /// Cooperative and single-SU detection against mean sensing SNR.
    PdVsSnr(Common),
    /// Sum-product cost against explicit marginalization.
    Complexity {
        #[command(flatten)]
        common: Common,
        /// Alphabet sizes |X| (overrides the scenario).
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        cards: Option<Vec<u32>>,
        /// Label each row and append the graph census.
        #[arg(long)]
        census: bool,
    },
    /// Runs the oracle matrix and prints a PASS/FAIL table.
    Validate(Common),
}

fn load(path: Option<&Path>, required: bool) -> Result<Scenario> {
    match path {
        Some(p) => Scenario::load(p),
        None if required => Err(config_err("--scenario PATH is required for this command")),
        None => Ok(Scenario::empty()),
    }
}

fn emit(table: &Table, c: &Common) -> Result<()> {
    let text = table.render(c.format)?;
    match &c.out {
        Some(path) => std::fs::write(path, text).map_err(|e| config_err(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let (c, table, ok) = match &cli.command {
        Command::LocalRoc(c) | Command::Croc(c) => {
            let sc = load(c.scenario.as_deref(), true)?;
            let o = RunOpts::resolve(&sc, c.trials, c.seed, c.model, c.workers);
            let croc = matches!(cli.command, Command::Croc(_));
            (c, commands::local_roc(&sc, &o, croc)?, true)
        }
        Command::SystemRoc(c) => {
            let sc = load(c.scenario.as_deref(), true)?;
            let o = RunOpts::resolve(&sc, c.trials, c.seed, c.model, c.workers);
            (c, commands::system_roc(&sc, &o)?, true)
        }
        Command::Lopt(c) => {
            let sc = load(c.scenario.as_deref(), true)?;
            let o = RunOpts::resolve(&sc, c.trials, c.seed, c.model, c.workers);
            let t = commands::lopt(&sc, &o)?;
            if let Some((_, l)) = t.summary.iter().find(|(k, _)| *k == "l_opt") {
                eprintln!("l_opt = {}", l.text());
            }
            (c, t, true)
        }
        Command::PdVsSnr(c) => {
            let sc = load(c.scenario.as_deref(), true)?;
            let o = RunOpts::resolve(&sc, c.trials, c.seed, c.model, c.workers);
            (c, commands::pd_vs_snr(&sc, &o)?, true)
        }
        Command::Complexity { common, cards, census } => {
            let sc = load(common.scenario.as_deref(), false)?;
            (common, commands::complexity(&sc, cards.as_deref(), *census)?, true)
        }
        Command::Validate(c) => {
            let sc = load(c.scenario.as_deref(), false)?;
            let o = RunOpts::resolve(&sc, c.trials, c.seed, c.model, c.workers);
            let (t, ok) = validate::validate(&o)?;
            (c, t, ok)
        }
    };
    emit(&table, c)?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
