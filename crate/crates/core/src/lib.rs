//! Learned quantum noise models.
//!
//! Circuits over the native gates `Rx`, `Rz` and `CZ` are simulated exactly
//! on density matrices. A PPO agent learns to insert depolarizing, damping and
//! coherent channels so that the simulated output matches states produced by
//! a reference noise model, and is compared against a randomized
//! benchmarking baseline.

pub mod circuit;
pub mod error;
pub mod eval;
pub mod noise;
pub mod qdm;
pub mod rb;
pub mod rl;

pub use error::{Error, Result};

// The guide's code blocks run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/density-matrices.md")]
    pub mod density_matrices {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    pub mod circuits {}
    #[doc = include_str!("../../../book/src/noise-models.md")]
    pub mod noise_models {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    pub mod benchmarking {}
    #[doc = include_str!("../../../book/src/learning.md")]
    pub mod learning {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    pub mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
