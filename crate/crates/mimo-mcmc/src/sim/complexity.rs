//! Per-trial operation-count models for the configured detectors.
//!
//! These are bookkeeping estimates of each detector's dominant term, not
//! measurements; the runner's `seconds_per_trial` column carries the
//! measured side. Counts mirror the same defaults the detectors resolve
//! at run time, so a report for a config describes what that config
//! would actually execute.

use std::fmt;

use crate::baselines::ML_SEARCH_LIMIT;
use crate::sim::config::{DetectorKind, ExperimentConfig};

/// One detector's dominant-term model.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityEntry {
    pub detector: DetectorKind,
    /// Human-readable factorization, e.g. `10 x 960 x 192^2`.
    pub headline: String,
    /// The evaluated dominant operation count; `None` when infeasible.
    pub dominant_ops: Option<u128>,
    pub feasible: bool,
}

/// Operation-count models for every detector in a config.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub n: usize,
    pub m: usize,
    pub n_real: usize,
    pub modulation: String,
    pub entries: Vec<ComplexityEntry>,
}

impl fmt::Display for ComplexityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "per-trial dominant operation counts ({}x{} {}, 2N = {})",
            self.n, self.m, self.modulation, self.n_real
        )?;
        let width = self
            .entries
            .iter()
            .map(|e| e.detector.id().len())
            .max()
            .unwrap_or(0);
        for e in &self.entries {
            writeln!(f, "  {:width$}  {}", e.detector.id(), e.headline)?;
        }
        Ok(())
    }
}

/// Builds the report for a config without running anything.
pub fn estimate_complexity_report(cfg: &ExperimentConfig) -> ComplexityReport {
    let n_real = 2 * cfg.n;
    let m_real = 2 * cfg.m;
    let q = cfg.modulation.q() as u128;
    let entries = cfg
        .detectors
        .iter()
        .map(|&d| entry_for(d, cfg, n_real, m_real, q))
        .collect();
    ComplexityReport {
        n: cfg.n,
        m: cfg.m,
        n_real,
        modulation: cfg.modulation.name().to_string(),
        entries,
    }
}

fn entry_for(
    d: DetectorKind,
    cfg: &ExperimentConfig,
    n_real: usize,
    m_real: usize,
    q: u128,
) -> ComplexityEntry {
    match d {
        DetectorKind::HmcT | DetectorKind::HmcNormal => {
            // Mirrors the run-time defaults: 2N steps per chain and
            // floor(1000 / 2N) chains unless overridden.
            let steps = cfg.hmc.steps_per_chain.unwrap_or(n_real);
            let chains = cfg
                .hmc
                .n_chains
                .unwrap_or_else(|| (1000 / n_real.max(1)).max(1));
            let total_steps = (chains * steps) as u128;
            let grad_cost = (n_real * n_real) as u128;
            let ops = cfg.hmc.leapfrog_steps as u128 * total_steps * grad_cost;
            ComplexityEntry {
                detector: d,
                headline: format!(
                    "{} x {} x {}^2 = {} multiply-adds (leapfrog gradient sweeps)",
                    cfg.hmc.leapfrog_steps, total_steps, n_real, ops
                ),
                dominant_ops: Some(ops),
                feasible: true,
            }
        }
        DetectorKind::Mgs => {
            let updates = (cfg.mgs.restarts * cfg.mgs.total_steps) as u128;
            let per_update = m_real as u128 * q;
            let ops = updates * per_update;
            ComplexityEntry {
                detector: d,
                headline: format!(
                    "{} x {} coordinate updates, {} x {} = {} multiply-adds each -> {}",
                    cfg.mgs.restarts,
                    cfg.mgs.total_steps,
                    m_real,
                    q,
                    per_update,
                    ops
                ),
                dominant_ops: Some(ops),
                feasible: true,
            }
        }
        DetectorKind::Ml => {
            let candidates = q.checked_pow(n_real as u32);
            match candidates {
                Some(c) if c <= ML_SEARCH_LIMIT => {
                    let ops = c * m_real as u128;
                    ComplexityEntry {
                        detector: d,
                        headline: format!(
                            "{q}^{n_real} = {c} candidates x {m_real} residual ops = {ops}",
                        ),
                        dominant_ops: Some(ops),
                        feasible: true,
                    }
                }
                _ => {
                    let size = match candidates {
                        Some(c) => c.to_string(),
                        None => format!("{q}^{n_real} (overflows 128 bits)"),
                    };
                    ComplexityEntry {
                        detector: d,
                        headline: format!(
                            "infeasible: {size} candidates exceeds the {ML_SEARCH_LIMIT} limit",
                        ),
                        dominant_ops: None,
                        feasible: false,
                    }
                }
            }
        }
        DetectorKind::Mmse => {
            let ops = (n_real as u128).pow(3);
            ComplexityEntry {
                detector: d,
                headline: format!(
                    "{n_real}^3 = {ops} multiply-adds (regularized solve)",
                ),
                dominant_ops: Some(ops),
                feasible: true,
            }
        }
        DetectorKind::SisoAwgn => {
            let ops = n_real as u128 * q;
            ComplexityEntry {
                detector: d,
                headline: format!(
                    "negligible: {n_real} scalar quantizations x {q} levels = {ops}",
                ),
                dominant_ops: Some(ops),
                feasible: true,
            }
        }
    }
}
