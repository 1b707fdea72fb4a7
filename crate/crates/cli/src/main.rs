use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use pdmp_cli::{exit_code, replay, run, Command, EXIT_INCONCLUSIVE};

#[derive(Parser)]
#[command(name = "pdmp", version, about = "Simulate and classify randomly switched population models")]
struct Cli {
    #[command(subcommand)]
    cmd: Top,
}

#[derive(Subcommand)]
enum Top {
    #[command(flatten)]
    Run(Command),
    /// Re-run a manifest and compare its CSV outputs byte for byte
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Top::Run(cmd) => run(&cmd, None).map(|r| r.inconclusive),
        Top::Replay { manifest, out } => replay_and_check(&manifest, &out),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_INCONCLUSIVE as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn replay_and_check(manifest: &Path, out: &Path) -> Result<bool> {
    let (result, checks) = replay(manifest, out)?;
    let mut differing = Vec::new();
    for c in &checks {
        let status = match c.identical {
            Some(true) => "identical",
            Some(false) => "DIFFERS",
            None => "missing",
        };
        println!("{}: {status}", c.file);
        if c.identical != Some(true) {
            differing.push(c.file.as_str());
        }
    }
    if !differing.is_empty() {
        bail!("replay does not reproduce {}", differing.join(", "));
    }
    Ok(result.inconclusive)
}
