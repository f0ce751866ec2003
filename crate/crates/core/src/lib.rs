//! Uplift decision trees and profit-targeted mailing policies.
//!
//! Given data from a randomized mailing experiment — categorical covariates,
//! a binary mailed/not-mailed assignment, and a binary subscribe/not outcome
//! — this crate learns decision trees for the outcome distribution under
//! both arms and turns them into mailing policies that maximize expected
//! profit rather than response rate. A person is mailed exactly when the
//! expected lift in profit
//!
//! ```text
//! ELP = r_s * p(subscribe | mailed) - r_u * p(subscribe | not mailed) - c
//! ```
//!
//! is positive, where `c` is the cost of one mailing and `r_s`/`r_u` the
//! revenue from a solicited/unsolicited subscription.
//!
//! Three learners are provided, all greedy maximizers of a Bayesian score
//! (Dirichlet-uniform leaf marginals with a per-parameter structure
//! penalty):
//!
//! * [`learn::grow_normal`] — unconstrained growth over covariates and the
//!   treatment;
//! * [`learn::grow_force`] — growth that scores every leaf as if a final
//!   treatment split were present, then materializes those splits and prunes
//!   the insignificant ones;
//! * [`learn::grow_split_first`] — a treatment split at the root, then two
//!   independent subtrees.
//!
//! The [`eval`] module replays a learned policy against held-out experiment
//! records, scoring only those whose random assignment matches the policy's
//! recommendation, and compares per-person revenue against the mail-to-all
//! baseline across cost/benefit scenarios.

pub mod cli;
pub mod config;
pub mod data;
mod error;
pub mod eval;
pub mod learn;
pub mod policy;
pub mod scoring;
pub mod tree;

pub use error::{Error, Result};
