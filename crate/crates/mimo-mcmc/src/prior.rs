//! Symbol priors for the relaxed detection posterior.
//!
//! Discrete constellations put all mass on the PAM levels, which leaves no
//! gradient to follow. The samplers therefore relax the point masses into a
//! mixture of continuous bumps centered on the levels, one of
//!
//! * a mixture of normals with common deviation `sigma`, or
//! * a mixture of location-scale Student t components with common `sigma`
//!   and degrees of freedom `nu`, whose heavier tails let a chain hop
//!   between levels more easily.
//!
//! The plain multinomial family keeps the discrete view (uniform weights on
//! the levels) and is what coordinate-wise Gibbs sampling uses.
//!
//! All densities factor per real dimension; everything here is scalar.

use statrs::function::gamma::ln_gamma;

use crate::constellation::{Constellation, Modulation};
use crate::{Error, Result};

const LN_PI: f64 = 1.1447298858494002;
const LN_SQRT_2PI: f64 = 0.9189385332046727;

/// Per-dimension prior over relaxed symbol coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    /// Uniform point masses on the anchors. Discrete; no density gradient.
    Multinomial { anchors: Vec<f64> },
    /// Equal-weight normal bumps of deviation `sigma` at the anchors.
    MixtureNormal { sigma: f64, anchors: Vec<f64> },
    /// Equal-weight Student t bumps with scale `sigma` and `nu` degrees of
    /// freedom at the anchors.
    MixtureT { sigma: f64, nu: f64, anchors: Vec<f64> },
}

fn check_anchors(anchors: &[f64]) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::InvalidParameter {
            name: "anchors",
            reason: "must not be empty".into(),
        });
    }
    if anchors.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "anchors",
            reason: "must all be finite".into(),
        });
    }
    Ok(())
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {x}"),
        });
    }
    Ok(())
}

impl PriorSpec {
    pub fn multinomial(anchors: Vec<f64>) -> Result<Self> {
        check_anchors(&anchors)?;
        Ok(PriorSpec::Multinomial { anchors })
    }

    pub fn mixture_normal(sigma: f64, anchors: Vec<f64>) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_anchors(&anchors)?;
        Ok(PriorSpec::MixtureNormal { sigma, anchors })
    }

    pub fn mixture_t(sigma: f64, nu: f64, anchors: Vec<f64>) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("nu", nu)?;
        check_anchors(&anchors)?;
        Ok(PriorSpec::MixtureT { sigma, nu, anchors })
    }

    /// Mixture-t prior on the constellation's levels with the tuned
    /// parameters for its modulation.
    pub fn tuned_mixture_t(c: &Constellation) -> Self {
        let p = default_tuned_params(c.modulation());
        PriorSpec::MixtureT {
            sigma: p.sigma_t,
            nu: p.nu_t,
            anchors: c.pam_levels().to_vec(),
        }
    }

    /// Mixture-normal prior on the constellation's levels with the tuned
    /// deviation for its modulation.
    pub fn tuned_mixture_normal(c: &Constellation) -> Self {
        let p = default_tuned_params(c.modulation());
        PriorSpec::MixtureNormal {
            sigma: p.sigma_normal,
            anchors: c.pam_levels().to_vec(),
        }
    }

    pub fn anchors(&self) -> &[f64] {
        match self {
            PriorSpec::Multinomial { anchors }
            | PriorSpec::MixtureNormal { anchors, .. }
            | PriorSpec::MixtureT { anchors, .. } => anchors,
        }
    }

    /// Normalized log density at `x`.
    ///
    /// For the continuous families this integrates to one over the real
    /// line. For the discrete multinomial family the value is the log weight
    /// of any single anchor, `ln(1/q)`, independent of `x`.
    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            PriorSpec::Multinomial { anchors } => -(anchors.len() as f64).ln(),
            PriorSpec::MixtureNormal { sigma, anchors: _ } => {
                let c = -LN_SQRT_2PI - sigma.ln();
                c + self.log_kernel(x)
            }
            PriorSpec::MixtureT { sigma, nu, anchors: _ } => {
                let c = ln_gamma((nu + 1.0) / 2.0)
                    - ln_gamma(nu / 2.0)
                    - 0.5 * (nu.ln() + LN_PI)
                    - sigma.ln();
                c + self.log_kernel(x)
            }
        }
    }

    /// Log density with its additive normalization constant dropped.
    ///
    /// Differences of this function equal differences of [`log_density`]
    /// exactly; potentials use it so the hot path never touches gamma
    /// functions. [`log_density`]: PriorSpec::log_density
    pub fn log_kernel(&self, x: f64) -> f64 {
        match self {
            PriorSpec::Multinomial { anchors } => -(anchors.len() as f64).ln(),
            PriorSpec::MixtureNormal { sigma, anchors } => {
                let inv2s2 = 0.5 / (sigma * sigma);
                let ln_q = (anchors.len() as f64).ln();
                log_sum_exp(anchors.iter().map(|a| {
                    let d = x - a;
                    -d * d * inv2s2
                })) - ln_q
            }
            PriorSpec::MixtureT { sigma, nu, anchors } => {
                let half = (nu + 1.0) / 2.0;
                let nu_s2 = nu * sigma * sigma;
                let ln_q = (anchors.len() as f64).ln();
                log_sum_exp(anchors.iter().map(|a| {
                    let d = x - a;
                    -half * (1.0 + d * d / nu_s2).ln()
                })) - ln_q
            }
        }
    }

    /// Derivative of the log density with respect to `x`.
    ///
    /// The mixture gradient is the responsibility-weighted sum of component
    /// gradients; component weights come out of a stabilized softmax so the
    /// value stays finite for any finite `x`. The multinomial family is
    /// piecewise flat and reports zero.
    pub fn grad_log_density(&self, x: f64) -> f64 {
        match self {
            PriorSpec::Multinomial { .. } => 0.0,
            PriorSpec::MixtureNormal { sigma, anchors } => {
                let inv_s2 = 1.0 / (sigma * sigma);
                let kernels: Vec<f64> = anchors
                    .iter()
                    .map(|a| {
                        let d = x - a;
                        -0.5 * d * d * inv_s2
                    })
                    .collect();
                let w = softmax(&kernels);
                anchors
                    .iter()
                    .zip(&w)
                    .map(|(a, wk)| wk * (a - x) * inv_s2)
                    .sum()
            }
            PriorSpec::MixtureT { sigma, nu, anchors } => {
                let half = (nu + 1.0) / 2.0;
                let nu_s2 = nu * sigma * sigma;
                let kernels: Vec<f64> = anchors
                    .iter()
                    .map(|a| {
                        let d = x - a;
                        -half * (1.0 + d * d / nu_s2).ln()
                    })
                    .collect();
                let w = softmax(&kernels);
                anchors
                    .iter()
                    .zip(&w)
                    .map(|(a, wk)| {
                        let d = x - a;
                        wk * (-(nu + 1.0) * d / (nu_s2 + d * d))
                    })
                    .sum()
            }
        }
    }
}

/// Uniform log weights over the constellation levels, `ln(1/q)` each.
pub fn multinomial_log_weights(c: &Constellation) -> Vec<f64> {
    vec![-(c.q() as f64).ln(); c.q()]
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// Tuned relaxation parameters for one modulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunedParams {
    pub sigma_normal: f64,
    pub sigma_t: f64,
    pub nu_t: f64,
}

/// Relaxation widths and tail weights that work well per modulation.
///
/// The t-family scale sits below the normal one because its tails carry more
/// mass at equal scale; the 64QAM grid is dense enough to need both a wider
/// relative scale and lighter tails.
pub fn default_tuned_params(m: Modulation) -> TunedParams {
    match m {
        Modulation::Qpsk => TunedParams {
            sigma_normal: 0.2483,
            sigma_t: 0.5 * 0.2483,
            nu_t: 1.8,
        },
        Modulation::Qam16 => TunedParams {
            sigma_normal: 0.1242,
            sigma_t: 0.5 * 0.1242,
            nu_t: 1.8,
        },
        Modulation::Qam64 => TunedParams {
            sigma_normal: 0.0664,
            sigma_t: 0.8 * 0.0664,
            nu_t: 2.5,
        },
    }
}
