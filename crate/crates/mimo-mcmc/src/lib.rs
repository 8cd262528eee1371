//! Stochastic detection for large MIMO systems.
//!
//! Recovering the transmitted symbol vector from `y = H u + w` is a
//! discrete least-squares problem whose exact solution costs `q^(2N)`
//! candidate evaluations. This crate takes the sampling route instead:
//! relax the lattice to a continuous posterior whose prior is a mixture
//! of bumps centered on the constellation levels, run Hamiltonian Monte
//! Carlo with gradients of that posterior, then quantize every visited
//! position back to the lattice and keep the best-scoring candidate.
//! Heavy-tailed mixture components (Student-t) keep the density between
//! neighboring bumps from vanishing, which is what lets a chain cross
//! from one symbol hypothesis to another.
//!
//! The crate ships the pieces separately so they compose: channel and
//! noise models ([`model`]), Gray-coded constellations
//! ([`constellation`]), mixture priors ([`prior`]), the relaxed posterior
//! ([`posterior`]), the HMC detector ([`hmc`]), a mixed Gibbs baseline
//! ([`mgs`]), classical references ([`baselines`]) and a reproducible
//! Monte-Carlo harness ([`sim`]).
//!
//! ```
//! use mimo_mcmc::constellation::{Constellation, Modulation};
//! use mimo_mcmc::hmc::{detect_hmc, HmcConfig};
//! use mimo_mcmc::model::{
//!     complex_to_real, draw_rayleigh_channel, real_symbols_to_complex,
//!     simulate_received,
//! };
//! use mimo_mcmc::posterior::build_posterior;
//! use mimo_mcmc::prior::PriorSpec;
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//!
//! # fn main() -> Result<(), mimo_mcmc::Error> {
//! let c = Constellation::new(Modulation::Qpsk);
//! let mut rng = ChaCha8Rng::seed_from_u64(7);
//!
//! // A 4x4 complex channel carries 8 bits per use at QPSK.
//! let h = draw_rayleigh_channel(4, 4, &mut rng);
//! let bits = vec![true, false, true, true, false, false, true, false];
//! let u = real_symbols_to_complex(&c.modulate(&bits, 8)?)?;
//! let y = simulate_received(&h, &u, 0.3, &mut rng);
//!
//! let sys = complex_to_real(&h, &y, 0.3)?;
//! let posterior = build_posterior(&sys, PriorSpec::tuned_mixture_t(&c))?;
//! let result = detect_hmc(&posterior, &c, &HmcConfig::default(), &mut rng)?;
//! assert_eq!(result.bits.len(), 8);
//! # Ok(()) }
//! ```

pub mod baselines;
pub mod constellation;
pub mod detector;
pub mod hmc;
pub mod mgs;
pub mod model;
pub mod posterior;
pub mod prior;
pub mod sim;

pub use detector::{DetectionResult, Diagnostics};

/// Errors across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Mismatched vector or matrix shapes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A numeric argument outside its legal range.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A malformed experiment configuration; the message names the field.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An exhaustive search that would exceed the candidate limit.
    #[error("search space too large: {0}")]
    SearchSpace(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
