//! Bayesian scoring for uplift trees.
//!
//! Each leaf contributes the marginal likelihood of its outcome counts under
//! a uniform Dirichlet(1, 1) parameter prior, and every free parameter in the
//! structure is penalized by a constant factor `kappa` (0.001 by default).
//! A binary outcome gives one free parameter per leaf, so a tree with K
//! leaves scores `sum_i log_marginal(leaf_i) + K * ln(kappa)`.
//!
//! Trees in forced form never split on the treatment variable explicitly;
//! they are scored as if every leaf carried a final complete treatment split,
//! which doubles the per-leaf parameter count and scores the two
//! treatment-conditional cells separately.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{CrossTab, Tree, TreeForm};

/// Dirichlet pseudo-count per outcome value. The uniform prior is part of the
/// scoring criterion, not a tunable.
pub const PRIOR_PSEUDOCOUNT: f64 = 1.0;

pub const DEFAULT_KAPPA: f64 = 0.001;

/// Parameters of the scoring criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    /// Structure prior base: a tree with K free parameters has prior kappa^K.
    pub kappa: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl ScoreParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::InvalidScoreParams(format!(
                "kappa must lie in (0, 1], got {kappa}"
            )));
        }
        Ok(ScoreParams { kappa })
    }

    pub fn ln_kappa(&self) -> f64 {
        self.kappa.ln()
    }
}

/// Outcome counts at a single leaf (or a single treatment cell of one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeafCounts {
    pub s1: u64,
    pub s0: u64,
}

impl LeafCounts {
    pub fn new(s1: u64, s0: u64) -> Self {
        LeafCounts { s1, s0 }
    }

    pub fn total(&self) -> u64 {
        self.s1 + self.s0
    }

    pub fn merged(&self, other: &LeafCounts) -> LeafCounts {
        LeafCounts {
            s1: self.s1 + other.s1,
            s0: self.s0 + other.s0,
        }
    }
}

fn ln_factorial(n: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Log marginal likelihood of binary outcome counts under the uniform prior:
/// `ln [ s1! * s0! / (s1 + s0 + 1)! ]`.
pub fn leaf_log_marginal(counts: LeafCounts) -> f64 {
    if counts.total() == 0 {
        return 0.0;
    }
    ln_factorial(counts.s1) + ln_factorial(counts.s0) - ln_factorial(counts.total() + 1)
}

/// Score contribution of one standard-form leaf, structure penalty included.
pub fn leaf_log_score(counts: LeafCounts, params: &ScoreParams) -> f64 {
    leaf_log_marginal(counts) + params.ln_kappa()
}

/// Score contribution of one forced-form leaf: both treatment cells are
/// scored separately, as if a final complete treatment split were present,
/// contributing two free parameters.
pub fn forced_leaf_log_score(tab: &CrossTab, params: &ScoreParams) -> f64 {
    leaf_log_marginal(tab.cell_m1()) + leaf_log_marginal(tab.cell_m0()) + 2.0 * params.ln_kappa()
}

/// Total log score of a tree: leaf marginals plus the structure prior.
///
/// Standard trees score each leaf's pooled outcome counts; forced trees score
/// each leaf's implicit treatment split, so their parameter count is twice
/// the leaf count. The forced total equals the standard total of the same
/// tree with the implicit splits materialized, by the same arithmetic.
pub fn tree_log_score(tree: &Tree, params: &ScoreParams) -> f64 {
    let mut total = 0.0;
    match tree.form() {
        TreeForm::Standard => {
            tree.for_each_leaf(&mut |stats| {
                total += leaf_log_score(stats.counts().pooled(), params);
            });
        }
        TreeForm::Forced => {
            tree.for_each_leaf(&mut |stats| {
                total += forced_leaf_log_score(stats.counts(), params);
            });
        }
    }
    total
}

/// Score change from replacing a standard-form leaf by a split whose children
/// hold `children` counts.
pub fn split_delta(
    parent: LeafCounts,
    children: &[LeafCounts],
    params: &ScoreParams,
) -> Result<f64> {
    let sum = children
        .iter()
        .fold(LeafCounts::default(), |acc, c| acc.merged(c));
    if sum != parent {
        return Err(Error::CountMismatch);
    }
    let child_total: f64 = children
        .iter()
        .map(|c| leaf_log_score(*c, params))
        .sum::<f64>();
    Ok(child_total - leaf_log_score(parent, params))
}

/// Forced-form counterpart of [`split_delta`]: parent and children are
/// treatment cross-tabs and every leaf is scored with its implicit treatment
/// split.
pub fn forced_split_delta(
    parent: &CrossTab,
    children: &[CrossTab],
    params: &ScoreParams,
) -> Result<f64> {
    let sum = children
        .iter()
        .fold(CrossTab::default(), |acc, c| acc.merged(c));
    if sum != *parent {
        return Err(Error::CountMismatch);
    }
    let child_total: f64 = children
        .iter()
        .map(|c| forced_leaf_log_score(c, params))
        .sum::<f64>();
    Ok(child_total - forced_leaf_log_score(parent, params))
}
