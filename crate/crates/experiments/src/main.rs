use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use penopt_experiments::{pipeline, ExperimentConfig};

#[derive(Parser)]
#[command(name = "penopt", about = "Reduced vs penalty inversion studies", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate data on the fine grid and write truth, data and geometry.
    Generate(Common),
    /// Run the configured optimizer on generated data.
    Invert(Common),
    /// Evaluate misfit surfaces around the ground truth.
    Landscape(Common),
    /// Eigenvalue shift tables for the 1D operators.
    Spectra(Common),
    /// Error-bound diagnostics at the inverted model.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a key, e.g. `--set optimizer.max_iter=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Noise seed; required whenever `noise.percent > 0`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> anyhow::Result<ExperimentConfig> {
        let mut o = self.overrides.clone();
        if let Some(s) = self.seed {
            o.push(format!("noise.seed={s}"));
        }
        if let Some(d) = &self.out {
            o.push(format!("output.dir={:?}", d.display().to_string()));
        }
        ExperimentConfig::load(&self.config, &o).with_context(|| format!("loading {}", self.config.display()))
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(c) => {
            let cfg = c.load()?;
            let g = pipeline::cmd_generate(&cfg)?;
            println!("wrote {} experiments to {}", g.data.len(), cfg.output.dir.display());
        }
        Command::Invert(c) => {
            let cfg = c.load()?;
            let inv = pipeline::cmd_invert(&cfg)?;
            println!(
                "{} after {} iterations, {} PDE solves, data misfit {:e}",
                inv.run.status.as_str(),
                inv.run.records.len().saturating_sub(1),
                inv.run.total_solves(),
                inv.reduced_misfit
            );
        }
        Command::Landscape(c) => {
            let cfg = c.load()?;
            let s = pipeline::cmd_landscape(&cfg)?;
            println!("wrote {} surfaces", s.len());
        }
        Command::Spectra(c) => {
            let cfg = c.load()?;
            let cases = pipeline::cmd_spectra(&cfg)?;
            println!("wrote {} spectral tables", cases.len());
        }
        Command::Report(c) => {
            let cfg = c.load()?;
            print!("{}", pipeline::cmd_report(&cfg)?.to_text());
        }
    }
    Ok(())
}
