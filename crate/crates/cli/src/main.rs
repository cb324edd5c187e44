#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::{ConfigError, RunConfig};
use output::Writer;

/// Effective atom number, fluctuation spectra and Monte Carlo validation
/// for a falling cold-atom cloud probed by a Gaussian beam.
#[derive(Parser)]
#[command(name = "coldcloud", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, default_value = "configs/default.json")]
    config: PathBuf,
    /// Output directory; falls back to $COLDCLOUD_OUT_DIR, then the current directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `mc.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Mean effective atom number on the `t` grid.
    Mean,
    /// Effective number per beam section: quadrature and the three closed forms.
    Sigma,
    /// Saturated effective number, general path and closed form.
    Saturated,
    /// Mean, variance and their ratio.
    Variance,
    /// Exact and quasistationary covariance on the `T` x `tau` grid.
    Covariance,
    /// Noise spectrum on the `T` x `omega` grid.
    Spectrum,
    /// Cavity detuning noise spectrum and linear-regime check.
    DetuningSpectrum,
    /// Monte Carlo ensemble statistics on the `t` grid.
    Mc,
    /// Monte Carlo against the analytic mean, variance and covariance.
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Mean => "mean",
            Command::Sigma => "sigma",
            Command::Saturated => "saturated",
            Command::Variance => "variance",
            Command::Covariance => "covariance",
            Command::Spectrum => "spectrum",
            Command::DetuningSpectrum => "detuning_spectrum",
            Command::Mc => "mc",
            Command::Validate => "validate",
        }
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("COLDCLOUD_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: &Cli) -> Result<Option<commands::ValidationFailed>> {
    let cfg = RunConfig::load(&cli.config)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let mut out = Writer::new(&out_dir(cli))?;
    let uses_mc = matches!(cli.command, Command::Mc | Command::Validate);
    let seed = if uses_mc {
        Some(cli.seed.unwrap_or(cfg.mc()?.seed))
    } else {
        None
    };
    let mut failure = None;
    let results = match cli.command {
        Command::Mean => commands::mean(&cfg, &mut out)?,
        Command::Sigma => commands::sigma(&cfg, &mut out)?,
        Command::Saturated => commands::saturated(&cfg, &mut out)?,
        Command::Variance => commands::variance_cmd(&cfg, &mut out)?,
        Command::Covariance => commands::covariance(&cfg, &mut out)?,
        Command::Spectrum => commands::spectrum(&cfg, &mut out)?,
        Command::DetuningSpectrum => commands::detuning(&cfg, &mut out)?,
        Command::Mc => commands::mc(&cfg, seed.unwrap_or_default(), &mut out)?,
        Command::Validate => {
            let (summary, fail) = commands::validate(&cfg, seed.unwrap_or_default(), &mut out)?;
            failure = fail;
            summary
        }
    };
    out.finish(cli.command.name(), &cfg, seed, results)?;
    Ok(failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(fail)) => {
            eprintln!("error: {fail}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
