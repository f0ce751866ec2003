//! Offline policy evaluation on held-out experiment data.
//!
//! The protocol scores a policy using only the test records whose random
//! assignment happens to match the policy's recommendation. For each test
//! person, the policy decides mail / no mail from the covariates alone — the
//! logged assignment and outcome stay hidden from the decision. Records
//! whose logged assignment disagrees with the recommendation are skipped.
//! Matched mailed records contribute `r_s − c` on subscription and `−c`
//! otherwise; matched unmailed records contribute `r_u` on subscription and
//! nothing otherwise. Total revenue over matched records, divided by the
//! matched count, gives per-person revenue, compared against the mail-to-all
//! baseline.

use std::io::Write;

use serde::Serialize;

use crate::data::{Dataset, Mailing};
use crate::error::{Error, Result};
use crate::policy::{decide_with, Action, CostBenefit};
use crate::tree::{Estimator, Tree};

/// Outcome of one matched-record evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    /// Matched records the policy chose to mail.
    pub matched_mail: u64,
    /// Matched records the policy chose not to mail.
    pub matched_nomail: u64,
    /// Records skipped because the logged assignment disagreed.
    pub skipped: u64,
    pub total_revenue: f64,
    pub per_person_revenue: f64,
    pub baseline_per_person: f64,
    pub improvement: f64,
}

/// Replays the tree's policy against the test set.
pub fn evaluate_policy(tree: &Tree, test: &Dataset, cb: &CostBenefit) -> Result<EvaluationReport> {
    evaluate_policy_with(tree, test, cb, Estimator::PosteriorMean)
}

pub fn evaluate_policy_with(
    tree: &Tree,
    test: &Dataset,
    cb: &CostBenefit,
    estimator: Estimator,
) -> Result<EvaluationReport> {
    cb.validate()?;
    let mut matched_mail = 0u64;
    let mut matched_nomail = 0u64;
    let mut total_revenue = 0.0;
    for rec in test.records() {
        let decision = decide_with(tree, rec.predictors(), cb, estimator)?;
        match (decision.action, rec.mailing()) {
            (Action::Mail, Mailing::Mailed) => {
                matched_mail += 1;
                total_revenue += if rec.subscribed() {
                    cb.solicited_revenue - cb.mail_cost
                } else {
                    -cb.mail_cost
                };
            }
            (Action::NoMail, Mailing::NotMailed) => {
                matched_nomail += 1;
                if rec.subscribed() {
                    total_revenue += cb.unsolicited_revenue;
                }
            }
            _ => {}
        }
    }
    let matched = matched_mail + matched_nomail;
    if matched == 0 {
        return Err(Error::NoMatchedRecords);
    }
    let per_person_revenue = total_revenue / matched as f64;
    let baseline_per_person = mail_to_all_revenue(test, cb)?;
    Ok(EvaluationReport {
        matched_mail,
        matched_nomail,
        skipped: test.len() as u64 - matched,
        total_revenue,
        per_person_revenue,
        baseline_per_person,
        improvement: improvement(per_person_revenue, baseline_per_person),
    })
}

/// Per-person revenue of mailing everyone, estimated over the records that
/// were actually mailed: the mean of `r_s − c` (subscribed) and `−c` (not).
pub fn mail_to_all_revenue(test: &Dataset, cb: &CostBenefit) -> Result<f64> {
    let mut mailed = 0u64;
    let mut revenue = 0.0;
    for rec in test.records() {
        if rec.mailing() == Mailing::Mailed {
            mailed += 1;
            revenue += if rec.subscribed() {
                cb.solicited_revenue - cb.mail_cost
            } else {
                -cb.mail_cost
            };
        }
    }
    if mailed == 0 {
        return Err(Error::NoMailedRecords);
    }
    Ok(revenue / mailed as f64)
}

/// Per-person improvement of a policy over the baseline.
pub fn improvement(policy_revenue: f64, baseline_revenue: f64) -> f64 {
    policy_revenue - baseline_revenue
}

/// One row of a cost/benefit sweep at solicited = unsolicited revenue `r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub baseline: f64,
    /// Per-policy (per_person_revenue, improvement), in input order.
    pub policies: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub policy_names: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Evaluates every named tree across revenue values `r_values` with mailing
/// cost `c` and `r_s = r_u = r`. Decisions are recomputed at each `r`, so a
/// policy may flip as the revenue grows.
pub fn sweep(
    trees: &[(String, &Tree)],
    test: &Dataset,
    mail_cost: f64,
    r_values: &[f64],
) -> Result<SweepResult> {
    if trees.is_empty() {
        return Err(Error::Config("sweep needs at least one model".into()));
    }
    if r_values.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one revenue value".into(),
        ));
    }
    let mut rows = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let cb = CostBenefit::new(mail_cost, r, r)?;
        let baseline = mail_to_all_revenue(test, &cb)?;
        let mut policies = Vec::with_capacity(trees.len());
        for (_, tree) in trees {
            let report = evaluate_policy(tree, test, &cb)?;
            policies.push((report.per_person_revenue, report.improvement));
        }
        rows.push(SweepRow {
            r,
            baseline,
            policies,
        });
    }
    Ok(SweepResult {
        policy_names: trees.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    })
}

/// Writes sweep results as CSV:
/// `r,baseline,<name>_revenue,<name>_improvement,...` per policy.
pub fn write_sweep(
    result: &SweepResult,
    out: &mut dyn Write,
    fingerprint: Option<&str>,
) -> std::io::Result<()> {
    if let Some(fp) = fingerprint {
        writeln!(out, "# config={fp}")?;
    }
    let mut header = String::from("r,baseline");
    for name in &result.policy_names {
        header.push_str(&format!(",{name}_revenue,{name}_improvement"));
    }
    writeln!(out, "{header}")?;
    for row in &result.rows {
        let mut line = format!("{},{}", row.r, row.baseline);
        for (rev, imp) in &row.policies {
            line.push_str(&format!(",{rev},{imp}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Expands a `lo:hi[:step]` range into its values, endpoints inclusive.
pub fn parse_r_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad number {s:?} in range {spec:?}")))
    };
    let (lo, hi, step) = match parts.as_slice() {
        [single] => {
            let v = parse(single)?;
            (v, v, 1.0)
        }
        [lo, hi] => (parse(lo)?, parse(hi)?, 1.0),
        [lo, hi, step] => (parse(lo)?, parse(hi)?, parse(step)?),
        _ => {
            return Err(Error::Config(format!(
                "range {spec:?} must be lo:hi or lo:hi:step"
            )))
        }
    };
    if step <= 0.0 {
        return Err(Error::Config(format!(
            "range step must be positive in {spec:?}"
        )));
    }
    if hi < lo {
        return Err(Error::Config(format!("empty range {spec:?}")));
    }
    let mut values = Vec::new();
    let mut k = 0u32;
    loop {
        let v = lo + step * k as f64;
        if v > hi + 1e-9 {
            break;
        }
        values.push(v);
        k += 1;
    }
    Ok(values)
}
