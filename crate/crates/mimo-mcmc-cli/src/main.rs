//! Command line front end: BER sweeps and complexity reports.
//!
//! Configuration comes from an optional `--config` file in the library's
//! key-value format; every flag below overrides the corresponding file
//! value. With no `--out`, the CSV goes to stdout.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mimo_mcmc::sim::{
    estimate_complexity_report, parse_config_file, render_csv, run_experiment,
    ExperimentConfig,
};
use mimo_mcmc::{Error, Result};

#[derive(Parser)]
#[command(
    name = "mimo-mcmc",
    version,
    about = "Stochastic MIMO detection experiments",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a BER sweep and emit CSV records.
    Run(SweepArgs),
    /// Print the per-detector operation-count model for a config.
    Complexity(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Config file with `key = value` lines; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Transmit antennas.
    #[arg(long)]
    n: Option<usize>,

    /// Receive antennas.
    #[arg(long)]
    m: Option<usize>,

    /// qpsk, 16qam or 64qam.
    #[arg(long)]
    modulation: Option<String>,

    /// Exponential channel correlation in [0, 1).
    #[arg(long)]
    rho: Option<f64>,

    /// Detector id; repeat the flag for several.
    #[arg(long = "detector")]
    detectors: Vec<String>,

    /// Explicit SNR grid in dB, comma separated.
    #[arg(long)]
    snr_db: Option<String>,

    /// Inclusive SNR range start in dB.
    #[arg(long)]
    snr_start: Option<f64>,

    /// Inclusive SNR range stop in dB.
    #[arg(long)]
    snr_stop: Option<f64>,

    /// SNR range step in dB.
    #[arg(long)]
    snr_step: Option<f64>,

    /// Monte-Carlo trials per SNR point.
    #[arg(long)]
    trials: Option<usize>,

    /// Master seed; equal seeds give byte-identical CSV.
    #[arg(long)]
    seed: Option<u64>,

    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; 0 uses the default pool.
    #[arg(long)]
    threads: Option<usize>,

    /// per-antenna-unit-power or total-unit-power.
    #[arg(long)]
    snr_convention: Option<String>,

    /// JSON-lines per-trial debug log.
    #[arg(long)]
    trace: Option<PathBuf>,

    /// Drop the per-trial timing column for byte-stable output.
    #[arg(long)]
    no_timing: bool,

    #[arg(long, help_heading = "HMC overrides")]
    hmc_steps_per_chain: Option<usize>,

    #[arg(long, help_heading = "HMC overrides")]
    hmc_chains: Option<usize>,

    #[arg(long, help_heading = "HMC overrides")]
    hmc_leapfrog_steps: Option<usize>,

    #[arg(long, help_heading = "HMC overrides")]
    hmc_step_size: Option<f64>,

    #[arg(long, help_heading = "HMC overrides")]
    hmc_init_box: Option<f64>,

    #[arg(long, help_heading = "Gibbs overrides")]
    mgs_total_steps: Option<usize>,

    #[arg(long, help_heading = "Gibbs overrides")]
    mgs_restarts: Option<usize>,

    #[arg(long, help_heading = "Gibbs overrides")]
    mgs_mixing_alpha: Option<f64>,

    #[arg(long, help_heading = "Gibbs overrides")]
    mgs_temperature: Option<f64>,
}

impl SweepArgs {
    fn build_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::Config(format!("config: {}: {e}", path.display()))
                })?;
                parse_config_file(&text)?
            }
            None => ExperimentConfig::default(),
        };

        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if let Some(modulation) = &self.modulation {
            cfg.modulation = modulation.parse()?;
        }
        if let Some(rho) = self.rho {
            cfg.rho = rho;
        }
        if !self.detectors.is_empty() {
            cfg.detectors = self
                .detectors
                .iter()
                .map(|d| d.parse())
                .collect::<Result<Vec<_>>>()?;
        }
        match (&self.snr_db, self.snr_start, self.snr_stop, self.snr_step) {
            (Some(_), None, None, None) | (None, _, _, _) => {}
            _ => {
                return Err(Error::Config(
                    "snr_db: give either an explicit grid or a range, not both"
                        .into(),
                ))
            }
        }
        if let Some(list) = &self.snr_db {
            cfg.snr_db = list
                .split(',')
                .map(|v| {
                    v.trim().parse().map_err(|e| {
                        Error::Config(format!("snr_db: cannot parse {v:?} ({e})"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
        } else if self.snr_start.is_some()
            || self.snr_stop.is_some()
            || self.snr_step.is_some()
        {
            let (start, stop, step) =
                match (self.snr_start, self.snr_stop, self.snr_step) {
                    (Some(a), Some(b), Some(s)) => (a, b, s),
                    _ => {
                        return Err(Error::Config(
                            "snr_start/snr_stop/snr_step: all three are required"
                                .into(),
                        ))
                    }
                };
            cfg.snr_db = build_grid(start, stop, step)?;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        if let Some(conv) = &self.snr_convention {
            cfg.snr_convention = conv.parse()?;
        }
        if let Some(trace) = &self.trace {
            cfg.trace = Some(trace.clone());
        }
        if self.no_timing {
            cfg.emit_timing = false;
        }
        if let Some(v) = self.hmc_steps_per_chain {
            cfg.hmc.steps_per_chain = Some(v);
        }
        if let Some(v) = self.hmc_chains {
            cfg.hmc.n_chains = Some(v);
        }
        if let Some(v) = self.hmc_leapfrog_steps {
            cfg.hmc.leapfrog_steps = v;
        }
        if let Some(v) = self.hmc_step_size {
            cfg.hmc.step_size = Some(v);
        }
        if let Some(v) = self.hmc_init_box {
            cfg.hmc.init_box = Some(v);
        }
        if let Some(v) = self.mgs_total_steps {
            cfg.mgs.total_steps = v;
        }
        if let Some(v) = self.mgs_restarts {
            cfg.mgs.restarts = v;
        }
        if let Some(v) = self.mgs_mixing_alpha {
            cfg.mgs.mixing_alpha = Some(v);
        }
        if let Some(v) = self.mgs_temperature {
            cfg.mgs.temperature = v;
        }
        Ok(cfg)
    }
}

fn build_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::Config(format!(
            "snr_step: must be positive, got {step}"
        )));
    }
    if stop < start {
        return Err(Error::Config(format!(
            "snr_stop: {stop} is below snr_start {start}"
        )));
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let v = start + f64::from(i) * step;
        if v > stop + 1e-9 {
            break;
        }
        grid.push(v);
        i += 1;
    }
    Ok(grid)
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = args.build_config()?;
            let records = run_experiment(&cfg)?;
            if cfg.out.is_none() {
                print!("{}", render_csv(&records));
            }
        }
        Command::Complexity(args) => {
            // No validation here: the report is pure arithmetic, and an
            // infeasible ML configuration is exactly what it should show.
            let cfg = args.build_config()?;
            print!("{}", estimate_complexity_report(&cfg));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
