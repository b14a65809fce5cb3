use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qpwms::dli::ScanPortion;
use qpwms_cli::commands::{compare, reconstruct, simulate};
use qpwms_cli::{exit, validate_scenario, CliError, SchemeChoice, ScenarioFile};

/// Quasi-parallel WMS simulation, FP/QP comparison and tomographic reconstruction.
#[derive(Parser)]
#[command(name = "qpwms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every scenario invariant and list the violations.
    Validate(Common),
    /// Write per-beam 2f/1f spectra.
    Simulate(Common),
    /// FP-vs-QP fitting-residual report over an ensemble of runs.
    Compare(Common),
    /// Reconstruct a concentration image from simulated or stored spectra.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Read beam_NN.csv spectra from this directory instead of simulating.
        #[arg(long)]
        spectra: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; overrides outputs.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeChoice>,
    #[arg(long, value_parser = parse_portion)]
    portion: Option<ScanPortion>,
}

fn parse_portion(s: &str) -> Result<ScanPortion, String> {
    s.parse().map_err(|e: qpwms::Error| e.to_string())
}

impl Common {
    fn load(&self) -> Result<(ScenarioFile, PathBuf), CliError> {
        let mut file = ScenarioFile::load(&self.scenario)?;
        if let Some(r) = self.runs {
            file.run.runs = r;
        }
        if let Some(s) = self.seed {
            file.run.master_seed = s;
        }
        if let Some(s) = self.scheme {
            file.run.scheme = s;
        }
        if let Some(p) = self.portion {
            file.run.portion = p;
        }
        let out = self.out.clone().unwrap_or_else(|| file.outputs.dir.clone());
        Ok((file, out))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(c) => {
            let (file, _) = c.load()?;
            let v = validate_scenario(&file);
            if !v.is_empty() {
                return Err(CliError::Invalid(v));
            }
            println!("{}: ok", c.scenario.display());
        }
        Command::Simulate(c) => {
            let (file, out) = c.load()?;
            let s = simulate(&file, &out)?;
            println!(
                "wrote {} spectra ({} beams, {} run(s)) to {}",
                s.files.len(),
                s.beams,
                s.runs,
                out.display()
            );
        }
        Command::Compare(c) => {
            let (file, out) = c.load()?;
            let s = compare(&file, &out)?;
            println!(
                "{} runs: max mean difference {:.3} %, max std difference {:.3} % ({})",
                s.runs,
                s.max_mean_diff_pct(),
                s.max_std_diff_pct(),
                out.join("compare.csv").display()
            );
        }
        Command::Reconstruct { common, spectra } => {
            let (file, out) = common.load()?;
            let s = reconstruct(&file, spectra.as_deref(), &out)?;
            println!(
                "{} beams, relative residual {:.3e}, peak pixel {:?} (phantom {:?}) in {}",
                s.beams,
                s.relative_residual,
                s.peak_pixel,
                s.phantom_peak_pixel,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
