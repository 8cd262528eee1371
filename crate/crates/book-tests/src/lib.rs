//! Compiles and runs the guide's code blocks.
//!
//! mdbook renders the chapters under `book/` but cannot execute them, so
//! each chapter is included here as module documentation and `cargo test
//! --doc` runs every ```rust fence as a doc test. One module per chapter
//! keeps failure reports pointed at the right file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/system-model.md")]
pub mod system_model {}

#[doc = include_str!("../../../book/src/constellations.md")]
pub mod constellations {}

#[doc = include_str!("../../../book/src/relaxation-priors.md")]
pub mod relaxation_priors {}

#[doc = include_str!("../../../book/src/posterior-energy.md")]
pub mod posterior_energy {}

#[doc = include_str!("../../../book/src/hmc-detector.md")]
pub mod hmc_detector {}

#[doc = include_str!("../../../book/src/gibbs-baseline.md")]
pub mod gibbs_baseline {}

#[doc = include_str!("../../../book/src/classical-baselines.md")]
pub mod classical_baselines {}

#[doc = include_str!("../../../book/src/running-experiments.md")]
pub mod running_experiments {}

#[doc = include_str!("../../../book/src/tuning-and-diagnostics.md")]
pub mod tuning_and_diagnostics {}
