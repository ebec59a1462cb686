use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hybrid_repeater_cli::config::Config;
use hybrid_repeater_cli::{report, sweep};

#[derive(Parser)]
#[command(name = "hybrid-repeater", version, about = "Ion-ion entanglement through SPDC and multimode-memory repeaters")]
struct Cli {
    /// Worker threads (defaults to the config value, then to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the Monte-Carlo checks; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize every (protocol, topology, distance) cell and write sweep.csv and sweep.json.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check closed forms against the Fock oracle and schedules against simulation.
    Validate {
        config: PathBuf,
        /// Also write the table to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn load(path: &Path, cli: &Cli) -> Result<Config> {
    let mut cfg = Config::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("starting thread pool")?;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.cmd {
        Cmd::Sweep { config, out } => {
            let cfg = load(config, cli)?;
            let (csv, json) = sweep::sweep_to_dir(&cfg, out)?;
            println!("wrote {} and {}", csv.display(), json.display());
            Ok(true)
        }
        Cmd::Validate { config, report: path } => {
            let cfg = load(config, cli)?;
            let rows = report::validate(&cfg)?;
            let table = report::render(&rows);
            print!("{table}");
            if let Some(p) = path {
                std::fs::write(p, &table).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(rows.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
