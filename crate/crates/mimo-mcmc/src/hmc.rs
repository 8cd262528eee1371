//! Hamiltonian Monte Carlo detection over the relaxed posterior.
//!
//! Each chain starts uniformly inside the constellation bounding box and
//! alternates a fresh Gaussian momentum draw, a leapfrog trajectory and a
//! Metropolis accept step. Every post-step position is quantized to the
//! grid and scored; the detector output is the best scoring candidate seen
//! by any chain. Short chains work because the decision only needs the
//! sampler to visit the right lattice cell once, not to mix.
//!
//! The default budget follows the cost model of the Gibbs baseline: chains
//! of `2N` steps, `floor(1000 / 2N)` of them, ten leapfrog steps each.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constellation::Constellation;
use crate::detector::{indices_to_levels, CandidatePool, DetectionResult, Diagnostics};
use crate::posterior::{PhaseState, PosteriorModel};
use crate::{Error, Result};

/// Tuning knobs for [`detect_hmc`]. `None` fields resolve to defaults that
/// depend on the problem size.
#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig {
    /// Steps per chain; defaults to `2N`.
    pub steps_per_chain: Option<usize>,
    /// Number of independent chains; defaults to `floor(1000 / 2N)`, at
    /// least one.
    pub n_chains: Option<usize>,
    /// Leapfrog steps per trajectory.
    pub leapfrog_steps: usize,
    /// Integrator step size; defaults to a curvature-scaled heuristic.
    pub step_size: Option<f64>,
    /// Half-width of the uniform initialization box; defaults to the
    /// largest constellation level.
    pub init_box: Option<f64>,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            steps_per_chain: None,
            n_chains: None,
            leapfrog_steps: 10,
            step_size: None,
            init_box: None,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.leapfrog_steps == 0 {
            return Err(Error::InvalidParameter {
                name: "leapfrog_steps",
                reason: "must be at least 1".into(),
            });
        }
        if self.steps_per_chain == Some(0) {
            return Err(Error::InvalidParameter {
                name: "steps_per_chain",
                reason: "must be at least 1".into(),
            });
        }
        if self.n_chains == Some(0) {
            return Err(Error::InvalidParameter {
                name: "n_chains",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(e) = self.step_size {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "step_size",
                    reason: format!("must be positive and finite, got {e}"),
                });
            }
        }
        if let Some(b) = self.init_box {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "init_box",
                    reason: format!("must be positive and finite, got {b}"),
                });
            }
        }
        Ok(())
    }

    /// Fills in size-dependent defaults for a concrete posterior.
    pub fn resolve(
        &self,
        m: &PosteriorModel,
        c: &Constellation,
    ) -> Result<(ChainParams, usize)> {
        self.validate()?;
        let steps = self.steps_per_chain.unwrap_or(m.n_real);
        let n_chains = self
            .n_chains
            .unwrap_or_else(|| (1000 / m.n_real.max(1)).max(1));
        let step_size = self.step_size.unwrap_or_else(|| auto_step_size(m));
        let init_box = self.init_box.unwrap_or_else(|| c.max_amplitude());
        Ok((
            ChainParams {
                steps,
                leapfrog_steps: self.leapfrog_steps,
                step_size,
                init_box,
            },
            n_chains,
        ))
    }
}

/// Fully resolved per-chain parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainParams {
    pub steps: usize,
    pub leapfrog_steps: usize,
    pub step_size: f64,
    pub init_box: f64,
}

/// Fraction of the characteristic curvature length used by
/// [`auto_step_size`]. Leapfrog on the stiffest likelihood direction is
/// stable below `2.0`; values much smaller than `0.5` leave the chains
/// too slow to cross between constellation cells within their step
/// budget on large correlated systems.
pub const STEP_SCALE: f64 = 0.8;

/// Curvature-scaled default step size.
///
/// A few power iterations estimate the top eigenvalue of the likelihood
/// Hessian `G / sigma^2`; the step is [`STEP_SCALE`] of the corresponding
/// characteristic length, clamped to `[1e-4, 0.5]`.
pub fn auto_step_size(m: &PosteriorModel) -> f64 {
    let n = m.n_real;
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0f64;
    for _ in 0..5 {
        let w = &m.gram * &v;
        lambda = w.norm();
        if lambda <= 0.0 {
            break;
        }
        v = w / lambda;
    }
    let scaled = lambda / (m.sigma_real * m.sigma_real);
    let eps = STEP_SCALE / scaled.sqrt();
    if eps.is_finite() {
        eps.clamp(1e-4, 0.5)
    } else {
        0.5
    }
}

/// Leapfrog integration of Hamilton's equations for `l >= 1` steps.
///
/// Half momentum kick, then alternating full position and momentum updates,
/// closing with another half kick. Exactly `l + 1` gradient evaluations.
pub fn leapfrog(
    m: &PosteriorModel,
    start: &PhaseState,
    step_size: f64,
    l: usize,
) -> PhaseState {
    assert!(l >= 1, "leapfrog needs at least one step");
    let mut u = start.u.clone();
    let mut r = start.r.clone();
    let mut g = m.grad_potential(&u);
    r.axpy(-0.5 * step_size, &g, 1.0);
    for step in 0..l {
        u.axpy(step_size, &r, 1.0);
        g = m.grad_potential(&u);
        let scale = if step + 1 == l { 0.5 } else { 1.0 };
        r.axpy(-scale * step_size, &g, 1.0);
    }
    PhaseState { u, r }
}

/// Positions visited by one chain, plus its acceptance count.
#[derive(Debug, Clone)]
pub struct ChainRun {
    /// One position per step, recorded after the accept decision.
    pub samples: Vec<DVector<f64>>,
    pub accepted: usize,
}

/// Runs a single chain and records every post-step position.
///
/// Non-finite trajectory energies count as rejections, so a divergent
/// integrator step can never propagate into the sample stream.
pub fn hmc_chain<R: Rng + ?Sized>(
    m: &PosteriorModel,
    p: &ChainParams,
    rng: &mut R,
) -> ChainRun {
    let n = m.n_real;
    let mut u =
        DVector::from_fn(n, |_, _| rng.random_range(-p.init_box..p.init_box));
    let mut pot = m.potential(&u);
    let mut samples = Vec::with_capacity(p.steps);
    let mut accepted = 0usize;

    for _ in 0..p.steps {
        let r = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let h0 = pot + 0.5 * r.norm_squared();
        let prop = leapfrog(m, &PhaseState { u: u.clone(), r }, p.step_size, p.leapfrog_steps);
        let prop_pot = m.potential(&prop.u);
        let h1 = prop_pot + 0.5 * prop.r.norm_squared();
        let alpha = if h1.is_finite() {
            (h0 - h1).min(0.0).exp()
        } else {
            0.0
        };
        if rng.random::<f64>() < alpha {
            u = prop.u;
            pot = prop_pot;
            accepted += 1;
        }
        samples.push(u.clone());
    }
    ChainRun { samples, accepted }
}

/// Multi-chain HMC detection with quantize-then-score candidate selection.
///
/// Chains use disjoint counter-derived random streams, so the result does
/// not depend on whether they run in parallel or in sequence.
pub fn detect_hmc<R: Rng + ?Sized>(
    m: &PosteriorModel,
    c: &Constellation,
    cfg: &HmcConfig,
    rng: &mut R,
) -> Result<DetectionResult> {
    if m.prior.anchors() != c.pam_levels() {
        return Err(Error::InvalidParameter {
            name: "prior",
            reason: "prior anchors do not match the constellation levels".into(),
        });
    }
    let (params, n_chains) = cfg.resolve(m, c)?;
    let t0 = Instant::now();
    let base_seed = rng.next_u64();

    let per_chain: Vec<(CandidatePool, usize, f64)> = (0..n_chains)
        .into_par_iter()
        .map(|chain| {
            let mut crng = ChaCha8Rng::seed_from_u64(base_seed);
            crng.set_stream(chain as u64);
            let run = hmc_chain(m, &params, &mut crng);
            let mut pool = CandidatePool::new();
            for s in &run.samples {
                pool.insert_sample(c, m, s);
            }
            let best = pool.best().map(|(_, s)| s).unwrap_or(f64::NEG_INFINITY);
            (pool, run.accepted, best)
        })
        .collect();

    let mut pool = CandidatePool::new();
    let mut accepted = 0usize;
    let mut per_chain_best = Vec::with_capacity(n_chains);
    for (p, acc, best) in per_chain {
        pool.merge(p);
        accepted += acc;
        per_chain_best.push(best);
    }

    let (best_key, best_score) = pool
        .best()
        .map(|(k, s)| (k.to_vec(), s))
        .expect("at least one chain step");
    let best_candidate = indices_to_levels(c, &best_key);
    let bits = c.demap(&best_candidate);

    Ok(DetectionResult {
        bits,
        best_candidate,
        best_log_likelihood: best_score,
        diagnostics: Diagnostics {
            acceptance_rate: Some(accepted as f64 / (n_chains * params.steps) as f64),
            per_chain_best,
            wall_time: t0.elapsed(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::Modulation;
    use crate::model::{complex_to_real, real_symbols_to_complex, simulate_received};
    use crate::posterior::build_posterior;
    use crate::prior::PriorSpec;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn standard_gaussian_model(dim: usize) -> PosteriorModel {
        // Zero channel and a single anchor at the origin turn the potential
        // into ||u||^2 / (2 sigma_p^2).
        let sys = crate::model::RealizedSystem {
            h_real: DMatrix::zeros(dim, dim),
            y_real: DVector::zeros(dim),
            sigma_real: 1.0,
            n_real: dim,
        };
        build_posterior(&sys, PriorSpec::mixture_normal(1.0, vec![0.0]).unwrap())
            .unwrap()
    }

    #[test]
    fn leapfrog_is_near_identity_for_tiny_steps() {
        let m = standard_gaussian_model(3);
        let s = PhaseState {
            u: DVector::from_vec(vec![0.3, -0.2, 0.9]),
            r: DVector::from_vec(vec![-1.0, 0.4, 0.1]),
        };
        let out = leapfrog(&m, &s, 1e-9, 1);
        for i in 0..3 {
            assert_relative_eq!(out.u[i], s.u[i], epsilon = 1e-8);
            assert_relative_eq!(out.r[i], s.r[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn leapfrog_is_reversible() {
        let m = standard_gaussian_model(4);
        let s = PhaseState {
            u: DVector::from_vec(vec![0.5, -1.2, 0.0, 2.0]),
            r: DVector::from_vec(vec![0.3, 0.8, -0.5, -1.0]),
        };
        let fwd = leapfrog(&m, &s, 0.1, 25);
        let back = leapfrog(
            &m,
            &PhaseState { u: fwd.u.clone(), r: -fwd.r.clone() },
            0.1,
            25,
        );
        for i in 0..4 {
            assert_relative_eq!(back.u[i], s.u[i], epsilon = 1e-10);
            assert_relative_eq!(-back.r[i], s.r[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn leapfrog_energy_error_shrinks_quadratically() {
        // Halving the step while doubling the count keeps the trajectory
        // time fixed; a second-order integrator then cuts the mean energy
        // error by about four.
        let m = standard_gaussian_model(2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut coarse = 0.0;
        let mut fine = 0.0;
        for _ in 0..200 {
            let s = PhaseState {
                u: DVector::from_fn(2, |_, _| rng.sample(StandardNormal)),
                r: DVector::from_fn(2, |_, _| rng.sample(StandardNormal)),
            };
            let h0 = m.hamiltonian(&s);
            coarse += (m.hamiltonian(&leapfrog(&m, &s, 0.2, 10)) - h0).abs();
            fine += (m.hamiltonian(&leapfrog(&m, &s, 0.1, 20)) - h0).abs();
        }
        let ratio = coarse / fine;
        assert!((3.0..5.0).contains(&ratio), "mean ratio {ratio}");
    }

    #[test]
    fn auto_step_size_stays_clamped() {
        let m = standard_gaussian_model(3);
        // Zero Gram matrix: heuristic falls back to the upper clamp.
        assert_eq!(auto_step_size(&m), 0.5);
    }

    #[test]
    fn auto_step_size_tracks_curvature() {
        let mut sys = crate::model::RealizedSystem {
            h_real: DMatrix::identity(2, 2) * 4.0,
            y_real: DVector::zeros(2),
            sigma_real: 0.1,
            n_real: 2,
        };
        sys.y_real[0] = 1.0;
        let m = build_posterior(&sys, PriorSpec::mixture_normal(1.0, vec![0.0]).unwrap())
            .unwrap();
        // G = 16 I, lambda / sigma^2 = 1600, STEP_SCALE / 40.
        assert_relative_eq!(auto_step_size(&m), STEP_SCALE / 40.0, max_relative = 1e-6);
    }

    #[test]
    fn chain_acceptance_collapses_for_huge_steps() {
        let mut sys = crate::model::RealizedSystem {
            h_real: DMatrix::identity(2, 2) * 30.0,
            y_real: DVector::zeros(2),
            sigma_real: 0.05,
            n_real: 2,
        };
        sys.y_real[0] = 3.0;
        let m = build_posterior(
            &sys,
            PriorSpec::mixture_normal(0.05, vec![-0.7, 0.7]).unwrap(),
        )
        .unwrap();
        let p = ChainParams {
            steps: 200,
            leapfrog_steps: 10,
            step_size: 5.0,
            init_box: 0.7,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let run = hmc_chain(&m, &p, &mut rng);
        assert!(run.samples.len() == 200);
        assert!(
            (run.accepted as f64) < 10.0,
            "acceptance unexpectedly high: {}",
            run.accepted
        );
        for s in &run.samples {
            assert!(s.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn chain_accepts_most_proposals_at_moderate_step() {
        let m = standard_gaussian_model(2);
        let p = ChainParams {
            steps: 500,
            leapfrog_steps: 10,
            step_size: 0.2,
            init_box: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let run = hmc_chain(&m, &p, &mut rng);
        let rate = run.accepted as f64 / 500.0;
        assert!(rate > 0.9, "acceptance {rate}");
    }

    #[test]
    fn defaults_scale_with_problem_size() {
        let c = Constellation::new(Modulation::Qpsk);
        let dim = 192;
        let sys = crate::model::RealizedSystem {
            h_real: DMatrix::identity(dim, dim),
            y_real: DVector::zeros(dim),
            sigma_real: 1.0,
            n_real: dim,
        };
        let m = build_posterior(&sys, PriorSpec::tuned_mixture_t(&c)).unwrap();
        let (p, chains) = HmcConfig::default().resolve(&m, &c).unwrap();
        assert_eq!(p.steps, 192);
        assert_eq!(chains, 5);
        assert_eq!(p.leapfrog_steps, 10);
        assert_relative_eq!(p.init_box, 1.0 / 2.0_f64.sqrt());
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut cfg = HmcConfig::default();
        cfg.leapfrog_steps = 0;
        assert!(cfg.validate().is_err());
        let cfg = HmcConfig { step_size: Some(0.0), ..HmcConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = HmcConfig { n_chains: Some(0), ..HmcConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn detection_is_deterministic_per_seed() {
        let c = Constellation::new(Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let h = crate::model::draw_rayleigh_channel(4, 4, &mut rng);
        let bits: Vec<bool> = (0..8).map(|i| i % 3 == 0).collect();
        let u = real_symbols_to_complex(&c.modulate(&bits, 8).unwrap()).unwrap();
        let y = simulate_received(&h, &u, 0.3, &mut rng);
        let sys = complex_to_real(&h, &y, 0.3).unwrap();
        let m = build_posterior(&sys, PriorSpec::tuned_mixture_t(&c)).unwrap();

        let cfg = HmcConfig::default();
        let a = detect_hmc(&m, &c, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = detect_hmc(&m, &c, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a.bits, b.bits);
        assert_eq!(a.best_log_likelihood, b.best_log_likelihood);
        assert_eq!(
            a.diagnostics.acceptance_rate,
            b.diagnostics.acceptance_rate
        );
    }

    #[test]
    fn recovers_bits_in_a_clean_channel() {
        let c = Constellation::new(Modulation::Qpsk);
        let h = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        let bits = vec![true, false];
        let u = real_symbols_to_complex(&c.modulate(&bits, 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = simulate_received(&h, &u, 0.0, &mut rng);
        let sys = complex_to_real(&h, &y, 0.05).unwrap();
        let m = build_posterior(&sys, PriorSpec::tuned_mixture_t(&c)).unwrap();
        let out = detect_hmc(&m, &c, &HmcConfig::default(), &mut rng).unwrap();
        assert_eq!(out.bits, bits);
        assert_eq!(out.diagnostics.per_chain_best.len(), 500);
    }

    #[test]
    fn rejects_prior_constellation_mismatch() {
        let c = Constellation::new(Modulation::Qam16);
        let sys = crate::model::RealizedSystem {
            h_real: DMatrix::identity(2, 2),
            y_real: DVector::zeros(2),
            sigma_real: 1.0,
            n_real: 2,
        };
        let qpsk = Constellation::new(Modulation::Qpsk);
        let m = build_posterior(&sys, PriorSpec::tuned_mixture_t(&qpsk)).unwrap();
        assert!(detect_hmc(&m, &c, &HmcConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))
            .is_err());
    }
}
