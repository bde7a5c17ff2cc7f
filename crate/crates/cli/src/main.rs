use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rdde_cli::commands::{lyapunov, no_semiflow, simulate, verify, wong_zakai};
use rdde_cli::{exit, ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rdde", version, about = "Rough delay equation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent and the config names none).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One trajectory: t, y, y'.
    Simulate,
    /// Mollified drivers against the Stratonovich lift.
    WongZakai,
    /// Lyapunov spectrum by volume growth.
    Lyapunov,
    /// The divergent series behind the missing semi-flow.
    NoSemiflow,
    /// Property checks; exits 3 on failure.
    Verify,
}

fn write_to(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    let out = out.as_deref();
    match cli.command {
        Command::Simulate => write_to(out, &simulate::run(&cfg)?)?,
        Command::WongZakai => write_to(out, &wong_zakai::run(&cfg)?)?,
        Command::NoSemiflow => write_to(out, &no_semiflow::run(&cfg)?)?,
        Command::Lyapunov => {
            let (json, csv) = lyapunov::run(&cfg)?;
            write_to(out, &json)?;
            match out {
                Some(p) => write_to(Some(&p.with_extension("logvol.csv")), &csv)?,
                None => eprintln!("per-step log-volumes are written only with --out"),
            }
        }
        Command::Verify => {
            let (json, passed) = verify::run(&cfg)?;
            write_to(out, &json)?;
            if !passed {
                return Ok(exit::PROPERTY);
            }
        }
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| c.downcast_ref::<ConfigError>().is_some());
            ExitCode::from(if config { exit::CONFIG } else { exit::FAILURE } as u8)
        }
    }
}
