//! Complex MIMO channel model and its real-valued reformulation.
//!
//! The received vector is `y = H u + w` with `H` an `M x N` complex channel,
//! `u` a vector of constellation symbols and `w` circularly symmetric complex
//! normal noise of per-entry variance `sigma_w^2`. Everything downstream of
//! this module works on the equivalent real system
//!
//! ```text
//! [Re y]   [Re H  -Im H] [Re u]   [Re w]
//! [Im y] = [Im H   Re H] [Im u] + [Im w]
//! ```
//!
//! with per-entry real noise deviation `sigma_w / sqrt(2)`.
//!
//! Spatial correlation follows the Kronecker model: an uncorrelated draw is
//! multiplied by symmetric square roots of exponential correlation matrices
//! at both ends.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Signal-to-noise operating point in decibels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    pub snr_db: f64,
}

impl SnrSpec {
    pub fn new(snr_db: f64) -> Self {
        SnrSpec { snr_db }
    }

    pub fn linear(self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }
}

/// Noise deviation that realizes `snr` as the average received SNR per
/// receive antenna when all `n` transmit antennas send unit-power symbols.
///
/// The received signal power per antenna is then `n`, so
/// `sigma_w = sqrt(n / 10^(snr_db/10))`.
pub fn noise_sigma_from_snr(snr: SnrSpec, n: usize) -> f64 {
    (n as f64 / snr.linear()).sqrt()
}

/// Draws an `m x n` channel with i.i.d. unit-variance complex normal entries.
pub fn draw_rayleigh_channel<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    rng: &mut R,
) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(m, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Exponential correlation matrix with entries `rho^|i-j|`.
pub fn exponential_correlation(dim: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        rho.powi((i as i32 - j as i32).abs())
    })
}

/// Symmetric positive semidefinite square root via eigendecomposition.
///
/// Small negative eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = a.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        eig.eigenvectors[(i, j)] * sqrt_vals[j]
    });
    &scaled * eig.eigenvectors.transpose()
}

fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}

/// Precomputed square-root factors for repeated correlated channel draws.
#[derive(Debug, Clone)]
pub struct KroneckerCorrelation {
    rho: f64,
    rx_sqrt: DMatrix<Complex64>,
    tx_sqrt: DMatrix<Complex64>,
}

impl KroneckerCorrelation {
    /// Builds receive and transmit factors for an `m x n` system.
    pub fn new(m: usize, n: usize, rho: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: format!("must lie in [0, 1), got {rho}"),
            });
        }
        Ok(KroneckerCorrelation {
            rho,
            rx_sqrt: to_complex(&psd_sqrt(&exponential_correlation(m, rho))),
            tx_sqrt: to_complex(&psd_sqrt(&exponential_correlation(n, rho))),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Correlates an uncorrelated draw from both sides. `rho = 0` is exact
    /// identity.
    pub fn apply(&self, h_w: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if h_w.nrows() != self.rx_sqrt.nrows() || h_w.ncols() != self.tx_sqrt.nrows() {
            return Err(Error::Dimension(format!(
                "channel is {}x{} but correlation factors are {}x{}",
                h_w.nrows(),
                h_w.ncols(),
                self.rx_sqrt.nrows(),
                self.tx_sqrt.nrows()
            )));
        }
        if self.rho == 0.0 {
            return Ok(h_w.clone());
        }
        Ok(&self.rx_sqrt * h_w * &self.tx_sqrt)
    }
}

/// One-shot Kronecker correlation of a single channel draw.
pub fn apply_kronecker_correlation(
    h_w: &DMatrix<Complex64>,
    rho: f64,
) -> Result<DMatrix<Complex64>> {
    KroneckerCorrelation::new(h_w.nrows(), h_w.ncols(), rho)?.apply(h_w)
}

/// Stacks the real and imaginary halves of a complex symbol vector.
pub fn real_symbols_to_complex(u_real: &[f64]) -> Result<DVector<Complex64>> {
    if u_real.len() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "real symbol vector has odd length {}",
            u_real.len()
        )));
    }
    let n = u_real.len() / 2;
    Ok(DVector::from_fn(n, |j, _| {
        Complex64::new(u_real[j], u_real[n + j])
    }))
}

/// Simulates `y = H u + w` with circularly symmetric noise of deviation
/// `sigma_w` per complex entry. `sigma_w = 0` returns `H u` exactly.
pub fn simulate_received<R: Rng + ?Sized>(
    h: &DMatrix<Complex64>,
    u: &DVector<Complex64>,
    sigma_w: f64,
    rng: &mut R,
) -> DVector<Complex64> {
    let mut y = h * u;
    if sigma_w > 0.0 {
        let s = sigma_w * std::f64::consts::FRAC_1_SQRT_2;
        for e in y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *e += Complex64::new(re * s, im * s);
        }
    }
    y
}

/// Real-valued detection problem derived from one complex channel use.
#[derive(Debug, Clone)]
pub struct RealizedSystem {
    /// `2M x 2N` block matrix `[Re H, -Im H; Im H, Re H]`.
    pub h_real: DMatrix<f64>,
    /// `2M` stacked received vector `[Re y; Im y]`.
    pub y_real: DVector<f64>,
    /// Per-entry real noise deviation, `sigma_w / sqrt(2)`.
    pub sigma_real: f64,
    /// Number of real symbol dimensions, `2N`.
    pub n_real: usize,
}

/// Rewrites a complex observation as the equivalent real system.
pub fn complex_to_real(
    h: &DMatrix<Complex64>,
    y: &DVector<Complex64>,
    sigma_w: f64,
) -> Result<RealizedSystem> {
    let (m, n) = h.shape();
    if y.len() != m {
        return Err(Error::Dimension(format!(
            "received vector has {} entries, channel has {} rows",
            y.len(),
            m
        )));
    }
    if sigma_w <= 0.0 || !sigma_w.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_w",
            reason: format!("must be positive and finite, got {sigma_w}"),
        });
    }
    let mut h_real = DMatrix::zeros(2 * m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let z = h[(i, j)];
            h_real[(i, j)] = z.re;
            h_real[(i, n + j)] = -z.im;
            h_real[(m + i, j)] = z.im;
            h_real[(m + i, n + j)] = z.re;
        }
    }
    let y_real = DVector::from_fn(2 * m, |i, _| {
        if i < m {
            y[i].re
        } else {
            y[i - m].im
        }
    });
    Ok(RealizedSystem {
        h_real,
        y_real,
        sigma_real: sigma_w * std::f64::consts::FRAC_1_SQRT_2,
        n_real: 2 * n,
    })
}
