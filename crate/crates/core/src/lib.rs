//! Age-of-information (AoI) analysis for status updates sent over a noisy
//! channel with a two-attempt hybrid ARQ incremental-redundancy protocol.
//!
//! Each update of `ℓ` data bits is encoded into an `n`-bit codeword. If the
//! receiver fails to decode it, `m` extra incremental-redundancy bits are sent
//! and a second decoding attempt is made on all `n + m` bits. If that also
//! fails the update is dropped and a fresh one is generated. After a
//! successful delivery the transmitter may idle before sampling again.
//!
//! The crate is layered:
//!
//! - [`channel`] maps a code design `(ℓ, n, m)` to per-attempt success
//!   probabilities `(q1, q2)`.
//! - [`analysis`] computes the epoch moments, the parametric objective
//!   `p(λ)`, the threshold waiting policy and the closed-form optimal age.
//! - [`sim`] is a seeded renewal simulator used to validate the analysis.
//! - [`optimizer`] grid-searches `(n, m)` designs and sweeps the crossover
//!   probability.
//!
//! All times are in bit-transmission units.

pub mod analysis;
pub mod channel;
mod error;
pub mod optimizer;
pub mod sim;

pub use analysis::{
    busy_pmf, closed_form, epoch_moments, epoch_objective, optimal_waits, p_of_lambda,
    solve_lambda_bisection, AgeSolution, EpochMoments, EpochObjective, Region, WaitingPolicy,
};
pub use channel::{
    binomial_cdf, bsc_mds_probs, explicit_probs, AttemptProbs, BscParams, HarqScheme, SumConvention,
};
pub use error::{Error, Result};
pub use optimizer::{
    grid_search, sweep_epsilon, GridResult, GridRow, GridSpec, SweepRow, SweepSpec,
};
pub use sim::{PolicyMode, SimConfig, SimStats};
