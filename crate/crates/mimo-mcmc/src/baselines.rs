//! Classical reference detectors: linear MMSE, brute-force maximum
//! likelihood for small systems, and a single-antenna AWGN reference used
//! to anchor bit error rate curves.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::constellation::{count_bit_errors, Constellation};
use crate::detector::{indices_to_levels, quantize_indices, DetectionResult, Diagnostics};
use crate::model::{noise_sigma_from_snr, RealizedSystem, SnrSpec};
use crate::posterior::PosteriorModel;
use crate::{Error, Result};

/// Largest candidate count the exhaustive search will attempt.
pub const ML_SEARCH_LIMIT: u128 = 1 << 24;

/// Linear minimum mean square error estimate of the real symbol vector.
///
/// Solves `(H^T H + 2 sigma^2 I) u = H^T y`. The regularizer uses the
/// per-real-dimension symbol power of one half, which every supported
/// constellation shares.
pub fn mmse_estimate(sys: &RealizedSystem) -> Result<DVector<f64>> {
    let n = sys.n_real;
    let gram = sys.h_real.transpose() * &sys.h_real;
    let reg = 2.0 * sys.sigma_real * sys.sigma_real;
    let lhs = gram + DMatrix::identity(n, n) * reg;
    let rhs = sys.h_real.transpose() * &sys.y_real;
    lhs.cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| Error::InvalidParameter {
            name: "system",
            reason: "regularized normal equations are not positive definite".into(),
        })
}

/// MMSE detection: linear estimate, then per-dimension quantization.
pub fn detect_mmse(sys: &RealizedSystem, c: &Constellation) -> Result<DetectionResult> {
    let t0 = Instant::now();
    let est = mmse_estimate(sys)?;
    let indices = quantize_indices(c, &est);
    let best_candidate = indices_to_levels(c, &indices);
    let bits = c.demap(&best_candidate);
    let u = DVector::from_vec(best_candidate.clone());
    let res = (&sys.y_real - &sys.h_real * &u).norm_squared();
    Ok(DetectionResult {
        bits,
        best_candidate,
        best_log_likelihood: -res / (2.0 * sys.sigma_real * sys.sigma_real),
        diagnostics: Diagnostics {
            acceptance_rate: None,
            per_chain_best: Vec::new(),
            wall_time: t0.elapsed(),
        },
    })
}

/// Exhaustive maximum likelihood detection.
///
/// Walks the full lattice depth-first, reusing the partial residual at
/// each level, and keeps the candidate with the smallest residual norm.
/// Ties keep the first candidate in lexicographic index order. Refuses
/// search spaces larger than [`ML_SEARCH_LIMIT`] candidates.
pub fn detect_ml_bruteforce(
    sys: &RealizedSystem,
    c: &Constellation,
) -> Result<DetectionResult> {
    let n = sys.n_real;
    let q = c.q();
    let space = (q as u128)
        .checked_pow(n as u32)
        .ok_or_else(|| search_space_error(q, n))?;
    if space > ML_SEARCH_LIMIT {
        return Err(search_space_error(q, n));
    }

    let t0 = Instant::now();
    let levels = c.pam_levels().to_vec();
    let mut residual = sys.y_real.clone();
    let mut indices = vec![0u8; n];
    let mut best = vec![0u8; n];
    let mut best_res = f64::INFINITY;
    dfs(
        sys,
        &levels,
        0,
        &mut residual,
        &mut indices,
        &mut best,
        &mut best_res,
    );

    let best_candidate = indices_to_levels(c, &best);
    let bits = c.demap(&best_candidate);
    Ok(DetectionResult {
        bits,
        best_candidate,
        best_log_likelihood: -best_res / (2.0 * sys.sigma_real * sys.sigma_real),
        diagnostics: Diagnostics {
            acceptance_rate: None,
            per_chain_best: Vec::new(),
            wall_time: t0.elapsed(),
        },
    })
}

fn search_space_error(q: usize, n: usize) -> Error {
    Error::SearchSpace(format!(
        "exhaustive search over {q}^{n} candidates exceeds the limit of {ML_SEARCH_LIMIT}",
    ))
}

fn dfs(
    sys: &RealizedSystem,
    levels: &[f64],
    depth: usize,
    residual: &mut DVector<f64>,
    indices: &mut [u8],
    best: &mut [u8],
    best_res: &mut f64,
) {
    if depth == sys.n_real {
        let r = residual.norm_squared();
        if r < *best_res {
            *best_res = r;
            best.copy_from_slice(indices);
        }
        return;
    }
    let col = sys.h_real.column(depth);
    for (k, &a) in levels.iter().enumerate() {
        residual.axpy(-a, &col, 1.0);
        indices[depth] = k as u8;
        dfs(sys, levels, depth + 1, residual, indices, best, best_res);
        residual.axpy(a, &col, 1.0);
    }
}

/// Scores an arbitrary lattice candidate the same way the samplers do.
pub fn candidate_score(m: &PosteriorModel, u: &DVector<f64>) -> f64 {
    m.candidate_log_likelihood(u)
}

/// Simulates uncoded transmission over a scalar AWGN channel and counts
/// bit errors. Returns `(bit_errors, total_bits)`.
///
/// The noise level follows the unit-power convention for a single
/// antenna, so the QPSK error rate approaches `Q(sqrt(snr_linear))`.
pub fn siso_awgn_errors<R: Rng + ?Sized>(
    c: &Constellation,
    snr_db: f64,
    n_symbols: usize,
    rng: &mut R,
) -> Result<(u64, u64)> {
    let sigma_w = noise_sigma_from_snr(SnrSpec::new(snr_db), 1);
    let sigma_real = sigma_w / 2.0_f64.sqrt();
    let bits_per_symbol = 2 * c.bits_per_real_dim();
    let mut errors = 0u64;
    let mut total = 0u64;
    let mut tx_bits = vec![false; bits_per_symbol];
    for _ in 0..n_symbols {
        for b in &mut tx_bits {
            *b = rng.random::<bool>();
        }
        let u = c.modulate(&tx_bits, 2)?;
        let noisy: Vec<f64> = u
            .iter()
            .map(|&x| x + sigma_real * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let rx_bits = c.demap(&noisy);
        errors += count_bit_errors(&tx_bits, &rx_bits)? as u64;
        total += bits_per_symbol as u64;
    }
    Ok((errors, total))
}

/// Convenience wrapper returning the empirical bit error rate.
pub fn siso_awgn_ber<R: Rng + ?Sized>(
    c: &Constellation,
    snr_db: f64,
    n_symbols: usize,
    rng: &mut R,
) -> Result<f64> {
    let (errors, total) = siso_awgn_errors(c, snr_db, n_symbols, rng)?;
    Ok(errors as f64 / total as f64)
}
