//! Numerical toolkit for the N-dimensional game of coding.
//!
//! Two computing nodes report noisy copies of a vector `U`: an honest node
//! whose noise is uniform on the `N`-ball of radius `Δ`, and an adversary
//! that picks its noise distribution freely. The data collector accepts when
//! the reports are within `ηΔ` of each other and then averages them. The
//! crate computes the leader/follower (Stackelberg) equilibrium of that game:
//!
//! - [`geometry`]: ball, cap and lens volumes and moments, kept in log space
//!   so that `N = 250` does not overflow.
//! - [`kernels`]: the acceptance kernel `Φ_N(z)` and error kernel `Ψ_N(z)`
//!   as functions of the adversarial noise magnitude.
//! - [`frontier`]: the characteristic curve `c_η(α)` built from the upper
//!   concave envelope of the `(Φ, Ψ)` locus.
//! - [`game`]: best response, worst-case tie breaking, threshold search and
//!   the optimal noise construction.
//! - [`simulate`]: an independent Monte-Carlo replay of the system model.
//! - [`oracle`] and [`verify`]: brute-force cross-checks used by tests and
//!   by the `verify` command.

// `!(x > 0.0)` is the idiom here for "not positive, or NaN".
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod frontier;
pub mod game;
pub mod geometry;
pub mod kernels;
pub mod logval;
pub mod numfmt;
pub mod oracle;
pub mod simulate;
mod special;
pub mod verify;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use frontier::{CharacteristicCurve, FrontierConfig, Locus};
pub use game::{EquilibriumReport, NoiseSpec, UtilitySpec};
pub use geometry::{CapSpec, Dim};
pub use kernels::{GameParams, KernelSample};
pub use logval::LogValue;
pub use simulate::{SimConfig, SimNoise, SimResult};
