//! Negative log posterior of the relaxed detection problem.
//!
//! For a realized system `(H, y, sigma)` and a per-dimension prior `p`, the
//! potential is
//!
//! ```text
//! U(u) = ||y - H u||^2 / (2 sigma^2) - sum_i log p(u_i)
//! ```
//!
//! up to an additive constant. The quadratic part is evaluated through the
//! precomputed Gram matrix `H^T H` and projection `H^T y`, so one gradient
//! costs a single `2N x 2N` matrix-vector product regardless of how many
//! receive dimensions the original system had.

use nalgebra::{DMatrix, DVector};

use crate::model::RealizedSystem;
use crate::prior::PriorSpec;
use crate::{Error, Result};

/// Precomputed quadratic form and prior for repeated posterior evaluations.
#[derive(Debug, Clone)]
pub struct PosteriorModel {
    /// `H^T H`, symmetric `2N x 2N`.
    pub gram: DMatrix<f64>,
    /// `H^T y`.
    pub hty: DVector<f64>,
    /// `||y||^2`.
    pub y_norm_sq: f64,
    /// Real-valued noise deviation of the system.
    pub sigma_real: f64,
    /// Per-dimension symbol prior.
    pub prior: PriorSpec,
    /// Number of real symbol dimensions.
    pub n_real: usize,
}

/// Position and momentum of one Hamiltonian trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub u: DVector<f64>,
    pub r: DVector<f64>,
}

/// Assembles the posterior quadratic form from a realized system.
pub fn build_posterior(sys: &RealizedSystem, prior: PriorSpec) -> Result<PosteriorModel> {
    if sys.h_real.ncols() != sys.n_real || sys.h_real.nrows() != sys.y_real.len() {
        return Err(Error::Dimension(format!(
            "system shape mismatch: H is {}x{}, y has {} entries, n_real = {}",
            sys.h_real.nrows(),
            sys.h_real.ncols(),
            sys.y_real.len(),
            sys.n_real
        )));
    }
    let gram = sys.h_real.transpose() * &sys.h_real;
    let hty = sys.h_real.transpose() * &sys.y_real;
    Ok(PosteriorModel {
        gram,
        hty,
        y_norm_sq: sys.y_real.norm_squared(),
        sigma_real: sys.sigma_real,
        prior,
        n_real: sys.n_real,
    })
}

impl PosteriorModel {
    fn check_dim(&self, u: &DVector<f64>) {
        assert_eq!(
            u.len(),
            self.n_real,
            "symbol vector has {} entries, model expects {}",
            u.len(),
            self.n_real
        );
    }

    /// `||y - H u||^2` through the cached quadratic form.
    pub fn residual_norm_sq(&self, u: &DVector<f64>) -> f64 {
        self.check_dim(u);
        let quad = u.dot(&(&self.gram * u));
        self.y_norm_sq - 2.0 * u.dot(&self.hty) + quad
    }

    /// Negative log posterior up to an additive constant.
    pub fn potential(&self, u: &DVector<f64>) -> f64 {
        let like = self.residual_norm_sq(u) / (2.0 * self.sigma_real * self.sigma_real);
        let prior: f64 = u.iter().map(|&x| self.prior.log_kernel(x)).sum();
        like - prior
    }

    /// Gradient of [`potential`] with respect to the position.
    ///
    /// [`potential`]: PosteriorModel::potential
    pub fn grad_potential(&self, u: &DVector<f64>) -> DVector<f64> {
        self.check_dim(u);
        let inv_s2 = 1.0 / (self.sigma_real * self.sigma_real);
        let mut g = (&self.gram * u - &self.hty) * inv_s2;
        for (gi, &x) in g.iter_mut().zip(u.iter()) {
            *gi -= self.prior.grad_log_density(x);
        }
        g
    }

    /// Total energy `U(u) + ||r||^2 / 2` of a phase point.
    pub fn hamiltonian(&self, s: &PhaseState) -> f64 {
        self.potential(&s.u) + 0.5 * s.r.norm_squared()
    }

    /// Log likelihood of a quantized candidate, `-||y - H u||^2 / (2 sigma^2)`.
    ///
    /// This is the score that ranks candidates; the prior plays no role once
    /// a vector sits exactly on the constellation grid.
    pub fn candidate_log_likelihood(&self, u: &DVector<f64>) -> f64 {
        -self.residual_norm_sq(u) / (2.0 * self.sigma_real * self.sigma_real)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::{Constellation, Modulation};
    use crate::model::{
        complex_to_real, draw_rayleigh_channel, simulate_received,
    };
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qpsk_prior() -> PriorSpec {
        PriorSpec::tuned_mixture_t(&Constellation::new(Modulation::Qpsk))
    }

    fn random_system(seed: u64, m: usize, n: usize, sigma_w: f64) -> PosteriorModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = draw_rayleigh_channel(m, n, &mut rng);
        let u = nalgebra::DVector::from_fn(n, |_, _| {
            Complex64::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        });
        let y = simulate_received(&h, &u, sigma_w, &mut rng);
        let sys = complex_to_real(&h, &y, sigma_w).unwrap();
        build_posterior(&sys, qpsk_prior()).unwrap()
    }

    #[test]
    fn identity_channel_gram_is_identity() {
        let h = DMatrix::from_fn(2, 2, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let y = nalgebra::DVector::from_vec(vec![
            Complex64::new(0.5, -0.25),
            Complex64::new(-1.0, 2.0),
        ]);
        let sys = complex_to_real(&h, &y, 1.0).unwrap();
        let m = build_posterior(&sys, qpsk_prior()).unwrap();
        assert_eq!(m.n_real, 4);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(m.gram[(i, j)], want, epsilon = 1e-12);
            }
        }
        assert_relative_eq!(m.hty[0], 0.5);
        assert_relative_eq!(m.hty[1], -1.0);
        assert_relative_eq!(m.hty[2], -0.25);
        assert_relative_eq!(m.hty[3], 2.0);
    }

    #[test]
    fn gram_is_symmetric() {
        let m = random_system(17, 5, 3, 0.4);
        for i in 0..m.n_real {
            for j in 0..m.n_real {
                assert_relative_eq!(
                    m.gram[(i, j)],
                    m.gram[(j, i)],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn quadratic_identity_matches_direct_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = draw_rayleigh_channel(4, 3, &mut rng);
        let uc = nalgebra::DVector::from_fn(3, |_, _| {
            Complex64::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        });
        let y = simulate_received(&h, &uc, 0.5, &mut rng);
        let sys = complex_to_real(&h, &y, 0.5).unwrap();
        let m = build_posterior(&sys, qpsk_prior()).unwrap();
        for _ in 0..50 {
            let u = nalgebra::DVector::from_fn(m.n_real, |_, _| {
                rng.random_range(-2.0..2.0)
            });
            let direct = (&sys.y_real - &sys.h_real * &u).norm_squared();
            assert_relative_eq!(
                m.residual_norm_sq(&u),
                direct,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn doubling_sigma_quarters_the_likelihood_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = draw_rayleigh_channel(3, 2, &mut rng);
        let uc = nalgebra::DVector::from_fn(2, |_, _| {
            Complex64::new(0.3, -0.4)
        });
        let y = simulate_received(&h, &uc, 0.2, &mut rng);
        let s1 = complex_to_real(&h, &y, 0.2).unwrap();
        let s2 = complex_to_real(&h, &y, 0.4).unwrap();
        let m1 = build_posterior(&s1, qpsk_prior()).unwrap();
        let m2 = build_posterior(&s2, qpsk_prior()).unwrap();
        let u = nalgebra::DVector::from_vec(vec![0.7, -0.7, 0.7, 0.7]);
        assert_relative_eq!(
            m1.candidate_log_likelihood(&u),
            4.0 * m2.candidate_log_likelihood(&u),
            max_relative = 1e-10
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = random_system(43, 4, 2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let h = 1e-6;
        for _ in 0..20 {
            let u = nalgebra::DVector::from_fn(m.n_real, |_, _| {
                rng.random_range(-1.5..1.5)
            });
            let g = m.grad_potential(&u);
            for i in 0..m.n_real {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (m.potential(&up) - m.potential(&dn)) / (2.0 * h);
                assert!(
                    (g[i] - fd).abs() <= 1e-5 * g[i].abs().max(1.0),
                    "dim {i}: {} vs {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn zero_channel_single_anchor_gradient_is_closed_form() {
        // With H = 0 and a single-anchor normal prior the potential is a
        // pure Gaussian well around the anchor.
        let sys = crate::model::RealizedSystem {
            h_real: DMatrix::zeros(2, 2),
            y_real: nalgebra::DVector::zeros(2),
            sigma_real: 1.0,
            n_real: 2,
        };
        let prior = PriorSpec::mixture_normal(0.5, vec![0.25]).unwrap();
        let m = build_posterior(&sys, prior).unwrap();
        let u = nalgebra::DVector::from_vec(vec![1.0, -0.5]);
        let g = m.grad_potential(&u);
        assert_relative_eq!(g[0], (1.0 - 0.25) / 0.25, max_relative = 1e-12);
        assert_relative_eq!(g[1], (-0.5 - 0.25) / 0.25, max_relative = 1e-12);
    }

    #[test]
    fn hamiltonian_splits_into_potential_and_kinetic() {
        let m = random_system(57, 3, 2, 0.3);
        let u = nalgebra::DVector::from_element(m.n_real, 0.1);
        let r = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0]);
        let s = PhaseState { u: u.clone(), r: r.clone() };
        assert_relative_eq!(
            m.hamiltonian(&s),
            m.potential(&u) + 0.5 * r.norm_squared(),
            max_relative = 1e-12
        );
        let rest = PhaseState { u: u.clone(), r: nalgebra::DVector::zeros(4) };
        assert_relative_eq!(m.hamiltonian(&rest), m.potential(&u));
    }

    #[test]
    fn potential_differences_do_not_depend_on_dropped_constants() {
        // Recompute the potential with fully normalized prior densities and
        // check that differences agree with the kernel-based implementation.
        let m = random_system(61, 3, 2, 0.4);
        let full = |u: &nalgebra::DVector<f64>| {
            m.residual_norm_sq(u) / (2.0 * m.sigma_real * m.sigma_real)
                - u.iter().map(|&x| m.prior.log_density(x)).sum::<f64>()
        };
        let a = nalgebra::DVector::from_vec(vec![0.3, -0.1, 0.8, -0.9]);
        let b = nalgebra::DVector::from_vec(vec![-0.7, 0.7, 0.1, 0.2]);
        assert_relative_eq!(
            m.potential(&a) - m.potential(&b),
            full(&a) - full(&b),
            epsilon = 1e-10
        );
    }

    #[test]
    fn candidate_scores_rank_by_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let c = Constellation::new(Modulation::Qpsk);
        let h = draw_rayleigh_channel(2, 2, &mut rng);
        let bits = vec![true, false, false, true];
        let u_real = c.modulate(&bits, 4).unwrap();
        let uc = crate::model::real_symbols_to_complex(&u_real).unwrap();
        let y = simulate_received(&h, &uc, 0.05, &mut rng);
        let sys = complex_to_real(&h, &y, 0.05).unwrap();
        let m = build_posterior(&sys, qpsk_prior()).unwrap();

        let tx = nalgebra::DVector::from_vec(u_real.clone());
        let mut other = u_real.clone();
        other[0] = -other[0];
        let other = nalgebra::DVector::from_vec(other);
        assert!(
            m.candidate_log_likelihood(&tx) > m.candidate_log_likelihood(&other)
        );
    }

    #[test]
    fn potential_stays_finite_over_wide_sweeps() {
        let m = random_system(83, 2, 2, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(84);
        for _ in 0..10_000 {
            let u = nalgebra::DVector::from_fn(m.n_real, |_, _| {
                rng.random_range(-25.0..25.0)
            });
            let p = m.potential(&u);
            let g = m.grad_potential(&u);
            assert!(p.is_finite());
            assert!(g.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn build_posterior_rejects_mismatched_shapes() {
        let sys = crate::model::RealizedSystem {
            h_real: DMatrix::zeros(4, 4),
            y_real: nalgebra::DVector::zeros(3),
            sigma_real: 1.0,
            n_real: 4,
        };
        assert!(build_posterior(&sys, qpsk_prior()).is_err());
    }
}
