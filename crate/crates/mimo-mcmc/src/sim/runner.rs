//! The Monte-Carlo trial runner.
//!
//! Every trial realizes one `(H, y, sigma_w)` triple from its own
//! substreams and feeds the identical realization to every configured
//! detector, so per-trial comparisons between detectors are paired.
//! Trials parallelize freely; aggregation folds the collected outcomes in
//! trial order, keeping results independent of scheduling.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::time::Instant;

use rand::RngExt;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{detect_ml_bruteforce, detect_mmse, siso_awgn_errors};
use crate::constellation::{count_bit_errors, Constellation};
use crate::hmc::detect_hmc;
use crate::mgs::detect_mgs;
use crate::model::{
    complex_to_real, draw_rayleigh_channel, noise_sigma_from_snr,
    real_symbols_to_complex, simulate_received, KroneckerCorrelation,
    RealizedSystem, SnrSpec,
};
use crate::posterior::build_posterior;
use crate::prior::PriorSpec;
use crate::sim::config::{DetectorKind, ExperimentConfig};
use crate::sim::csv::write_csv;
use crate::sim::streams::{
    substream, ROLE_BITS, ROLE_CHANNEL, ROLE_DETECTOR_BASE, ROLE_NOISE,
};
use crate::{Error, Result};

/// One aggregated CSV row: a detector at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub detector: String,
    pub modulation: String,
    pub rho: f64,
    pub snr_db: f64,
    pub trials: usize,
    pub total_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Mean HMC acceptance rate; absent for other detectors.
    pub acceptance_rate: Option<f64>,
    /// Mean wall time per trial; absent when timing is suppressed.
    pub seconds_per_trial: Option<f64>,
}

/// The realized inputs one trial hands to every detector.
#[derive(Debug, Clone)]
pub struct TrialSystem {
    pub sys: RealizedSystem,
    pub tx_bits: Vec<bool>,
    pub sigma_w: f64,
}

/// Realizes the channel, bits and noise for one `(snr, trial)` cell.
///
/// Pure in the sense that the output depends only on the config, the
/// grid index and the trial index; the runner and any external audit of
/// the shared-input contract call this same function.
pub fn generate_trial(
    cfg: &ExperimentConfig,
    snr_idx: usize,
    trial: usize,
) -> Result<TrialSystem> {
    let c = Constellation::new(cfg.modulation);
    let corr = KroneckerCorrelation::new(cfg.m, cfg.n, cfg.rho)?;

    let mut rng = substream(cfg.master_seed, snr_idx, trial, ROLE_CHANNEL);
    let h = corr.apply(&draw_rayleigh_channel(cfg.m, cfg.n, &mut rng))?;

    let mut rng = substream(cfg.master_seed, snr_idx, trial, ROLE_BITS);
    let n_real = 2 * cfg.n;
    let tx_bits: Vec<bool> = (0..n_real * c.bits_per_real_dim())
        .map(|_| rng.random())
        .collect();
    let u = real_symbols_to_complex(&c.modulate(&tx_bits, n_real)?)?;

    let snr_db = *cfg.snr_db.get(snr_idx).ok_or_else(|| {
        Error::Config(format!("snr_db: index {snr_idx} out of range"))
    })?;
    let sigma_w = noise_sigma_from_snr(
        SnrSpec::new(snr_db),
        cfg.snr_convention.effective_n(cfg.n),
    );

    let mut rng = substream(cfg.master_seed, snr_idx, trial, ROLE_NOISE);
    let y = simulate_received(&h, &u, sigma_w, &mut rng);
    let sys = complex_to_real(&h, &y, sigma_w)?;

    Ok(TrialSystem { sys, tx_bits, sigma_w })
}

#[derive(Debug, Clone)]
struct DetectorOutcome {
    bit_errors: u64,
    total_bits: u64,
    acceptance: Option<f64>,
    best_log_likelihood: Option<f64>,
    seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow<'a> {
    snr_db: f64,
    trial: usize,
    detector: &'a str,
    bit_errors: u64,
    total_bits: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    acceptance_rate: Option<f64>,
    seconds: f64,
}

fn run_trial(
    cfg: &ExperimentConfig,
    c: &Constellation,
    snr_idx: usize,
    trial: usize,
) -> Result<Vec<DetectorOutcome>> {
    let ts = generate_trial(cfg, snr_idx, trial)?;
    let snr_db = cfg.snr_db[snr_idx];
    let mut out = Vec::with_capacity(cfg.detectors.len());

    for (det_idx, det) in cfg.detectors.iter().enumerate() {
        let mut rng = substream(
            cfg.master_seed,
            snr_idx,
            trial,
            ROLE_DETECTOR_BASE + det_idx as u64,
        );
        let t0 = Instant::now();
        let outcome = match det {
            DetectorKind::SisoAwgn => {
                let (errors, bits) = siso_awgn_errors(c, snr_db, cfg.n, &mut rng)?;
                DetectorOutcome {
                    bit_errors: errors,
                    total_bits: bits,
                    acceptance: None,
                    best_log_likelihood: None,
                    seconds: t0.elapsed().as_secs_f64(),
                }
            }
            _ => {
                let result = match det {
                    DetectorKind::HmcT => {
                        let prior = PriorSpec::tuned_mixture_t(c);
                        let m = build_posterior(&ts.sys, prior)?;
                        detect_hmc(&m, c, &cfg.hmc, &mut rng)?
                    }
                    DetectorKind::HmcNormal => {
                        let prior = PriorSpec::tuned_mixture_normal(c);
                        let m = build_posterior(&ts.sys, prior)?;
                        detect_hmc(&m, c, &cfg.hmc, &mut rng)?
                    }
                    DetectorKind::Mgs => {
                        let prior = PriorSpec::tuned_mixture_t(c);
                        let m = build_posterior(&ts.sys, prior)?;
                        detect_mgs(&m, c, &cfg.mgs, &mut rng)?
                    }
                    DetectorKind::Mmse => detect_mmse(&ts.sys, c)?,
                    DetectorKind::Ml => detect_ml_bruteforce(&ts.sys, c)?,
                    DetectorKind::SisoAwgn => unreachable!(),
                };
                let errors = count_bit_errors(&ts.tx_bits, &result.bits)? as u64;
                DetectorOutcome {
                    bit_errors: errors,
                    total_bits: ts.tx_bits.len() as u64,
                    acceptance: result.diagnostics.acceptance_rate,
                    best_log_likelihood: Some(result.best_log_likelihood),
                    seconds: t0.elapsed().as_secs_f64(),
                }
            }
        };
        out.push(outcome);
    }
    Ok(out)
}

/// Runs the full sweep and returns one record per `(detector, snr)`.
///
/// Writes the CSV and the trace log if the config asks for them. The
/// returned records are sorted by `(detector, snr_db)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let records = if cfg.threads == 0 {
        sweep(cfg)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
        pool.install(|| sweep(cfg))?
    };
    if let Some(path) = &cfg.out {
        write_csv(path, &records)?;
    }
    Ok(records)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    let c = Constellation::new(cfg.modulation);
    let mut records = Vec::with_capacity(cfg.snr_db.len() * cfg.detectors.len());
    let mut trace = match &cfg.trace {
        Some(path) => Some(BufWriter::new(File::create(path)?)),
        None => None,
    };

    for (snr_idx, &snr_db) in cfg.snr_db.iter().enumerate() {
        let outcomes: Vec<Vec<DetectorOutcome>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| run_trial(cfg, &c, snr_idx, trial))
            .collect::<Result<_>>()?;

        for (det_idx, det) in cfg.detectors.iter().enumerate() {
            let mut bit_errors = 0u64;
            let mut total_bits = 0u64;
            let mut acc_sum = 0.0;
            let mut acc_count = 0usize;
            let mut seconds = 0.0;
            for trial_out in &outcomes {
                let o = &trial_out[det_idx];
                bit_errors += o.bit_errors;
                total_bits += o.total_bits;
                if let Some(a) = o.acceptance {
                    acc_sum += a;
                    acc_count += 1;
                }
                seconds += o.seconds;
            }
            records.push(BerRecord {
                detector: det.id().to_string(),
                modulation: c.modulation().name().to_string(),
                rho: cfg.rho,
                snr_db,
                trials: cfg.trials,
                total_bits,
                bit_errors,
                ber: bit_errors as f64 / total_bits as f64,
                acceptance_rate: (acc_count > 0).then(|| acc_sum / acc_count as f64),
                seconds_per_trial: cfg
                    .emit_timing
                    .then(|| seconds / cfg.trials as f64),
            });
        }

        if let Some(w) = trace.as_mut() {
            for (trial, trial_out) in outcomes.iter().enumerate() {
                for (det_idx, det) in cfg.detectors.iter().enumerate() {
                    let o = &trial_out[det_idx];
                    let row = TraceRow {
                        snr_db,
                        trial,
                        detector: det.id(),
                        bit_errors: o.bit_errors,
                        total_bits: o.total_bits,
                        best_log_likelihood: o.best_log_likelihood,
                        acceptance_rate: o.acceptance,
                        seconds: o.seconds,
                    };
                    let line = serde_json::to_string(&row)
                        .map_err(|e| Error::Config(format!("trace: {e}")))?;
                    writeln!(w, "{line}")?;
                }
            }
        }
    }

    if let Some(mut w) = trace {
        w.flush()?;
    }
    records.sort_by(|a, b| {
        a.detector
            .cmp(&b.detector)
            .then(a.snr_db.partial_cmp(&b.snr_db).expect("finite snr"))
    });
    Ok(records)
}
