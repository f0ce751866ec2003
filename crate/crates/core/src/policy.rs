//! Mailing decisions from expected lift in profit.
//!
//! For a person with covariates `x`, the expected lift in profit from
//! mailing is
//!
//! ```text
//! ELP(x) = r_s * p(subscribe | mailed, x)
//!        - r_u * p(subscribe | not mailed, x)
//!        - c
//! ```
//!
//! and the offer is mailed exactly when the lift is strictly positive. The
//! two probabilities come from one tree queried under both arms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::Mailing;
use crate::error::{Error, Result};
use crate::tree::{Estimator, Node, SplitKind, SplitVariable, Tree, TreeForm};

/// Cost/benefit scenario of one campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBenefit {
    /// Cost of sending one mailing.
    pub mail_cost: f64,
    /// Revenue from a subscription solicited by the mailing.
    pub solicited_revenue: f64,
    /// Revenue from an unsolicited subscription.
    pub unsolicited_revenue: f64,
}

impl CostBenefit {
    pub fn new(mail_cost: f64, solicited_revenue: f64, unsolicited_revenue: f64) -> Result<Self> {
        let cb = CostBenefit {
            mail_cost,
            solicited_revenue,
            unsolicited_revenue,
        };
        cb.validate()?;
        Ok(cb)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mail_cost", self.mail_cost),
            ("solicited_revenue", self.solicited_revenue),
            ("unsolicited_revenue", self.unsolicited_revenue),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidCostBenefit(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Same costs with both revenues set to `r`.
    pub fn with_revenue(&self, r: f64) -> CostBenefit {
        CostBenefit {
            mail_cost: self.mail_cost,
            solicited_revenue: r,
            unsolicited_revenue: r,
        }
    }
}

/// Expected lift in profit from mailing a person with subscription
/// probability `p1` when mailed and `p0` when not.
pub fn elp(p1: f64, p0: f64, cb: &CostBenefit) -> f64 {
    cb.solicited_revenue * p1 - cb.unsolicited_revenue * p0 - cb.mail_cost
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Mail,
    NoMail,
}

impl Action {
    pub fn label(self) -> &'static str {
        match self {
            Action::Mail => "mail",
            Action::NoMail => "no_mail",
        }
    }
}

/// The mailing decision for one person: mail exactly when the lift is
/// strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    pub elp: f64,
    pub p1: f64,
    pub p0: f64,
}

/// Decides whether to mail the person with covariates `x`.
pub fn decide(tree: &Tree, x: &[u16], cb: &CostBenefit) -> Result<Decision> {
    decide_with(tree, x, cb, Estimator::PosteriorMean)
}

pub fn decide_with(
    tree: &Tree,
    x: &[u16],
    cb: &CostBenefit,
    estimator: Estimator,
) -> Result<Decision> {
    let p1 = tree.predict_with(x, Mailing::Mailed, estimator)?;
    let p0 = tree.predict_with(x, Mailing::NotMailed, estimator)?;
    let lift = elp(p1, p0, cb);
    Ok(Decision {
        action: if lift > 0.0 {
            Action::Mail
        } else {
            Action::NoMail
        },
        elp: lift,
        p1,
        p0,
    })
}

/// One row of the human-readable segment report: a population described by
/// predictor tests, its two arm probabilities, and the mailing decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentRow {
    pub path: String,
    pub support: u64,
    pub p1: f64,
    pub p0: f64,
    pub elp: f64,
    pub action: Action,
}

/// Describes the tree's policy one population segment at a time.
///
/// Each maximal path from the root to a treatment split (or to a leaf, when
/// no treatment split terminates the path) yields one row; the rows
/// partition the covariate space. Requires a standard-form tree whose
/// treatment splits sit directly above leaves — the shape produced by the
/// force learner.
pub fn segment_report(tree: &Tree, cb: &CostBenefit) -> Result<Vec<SegmentRow>> {
    segment_report_with(tree, cb, Estimator::PosteriorMean)
}

pub fn segment_report_with(
    tree: &Tree,
    cb: &CostBenefit,
    estimator: Estimator,
) -> Result<Vec<SegmentRow>> {
    if tree.form() != TreeForm::Standard {
        return Err(Error::WrongTreeForm {
            expected: "standard",
        });
    }
    let mut rows = Vec::new();
    let mut path: Vec<String> = Vec::new();
    collect_rows(tree, tree.root(), cb, estimator, &mut path, &mut rows)?;
    Ok(rows)
}

fn collect_rows(
    tree: &Tree,
    node: &Node,
    cb: &CostBenefit,
    estimator: Estimator,
    path: &mut Vec<String>,
    rows: &mut Vec<SegmentRow>,
) -> Result<()> {
    let schema = tree.schema();
    match node {
        Node::Leaf { stats } => {
            // No treatment split on this path: both arms read the same
            // pooled estimate and the lift degenerates to revenue difference
            // minus cost.
            let p = stats.pooled_distribution(estimator)[1];
            let lift = elp(p, p, cb);
            rows.push(SegmentRow {
                path: render_path(path),
                support: stats.counts().total(),
                p1: p,
                p0: p,
                elp: lift,
                action: if lift > 0.0 {
                    Action::Mail
                } else {
                    Action::NoMail
                },
            });
            Ok(())
        }
        Node::Internal { rule, children } if rule.variable == SplitVariable::Treatment => {
            if !children.iter().all(Node::is_leaf) {
                return Err(Error::UnsupportedTreeShape);
            }
            // Children are ordered (not mailed, mailed) for the complete
            // split; a binary treatment split puts the singled-out arm first.
            let (m0, m1) = match rule.kind {
                SplitKind::Complete => (&children[0], &children[1]),
                SplitKind::Binary { value: 0 } => (&children[0], &children[1]),
                SplitKind::Binary { .. } => (&children[1], &children[0]),
            };
            let (Node::Leaf { stats: s0 }, Node::Leaf { stats: s1 }) = (m0, m1) else {
                unreachable!()
            };
            let p0 = estimator.prob_s1(s0.counts().pooled());
            let p1 = estimator.prob_s1(s1.counts().pooled());
            let lift = elp(p1, p0, cb);
            rows.push(SegmentRow {
                path: render_path(path),
                support: s0.counts().total() + s1.counts().total(),
                p1,
                p0,
                elp: lift,
                action: if lift > 0.0 {
                    Action::Mail
                } else {
                    Action::NoMail
                },
            });
            Ok(())
        }
        Node::Internal { rule, children } => {
            for (ci, child) in children.iter().enumerate() {
                let test = match rule.kind {
                    SplitKind::Complete => format!(
                        "{}={}",
                        rule.variable.name(schema),
                        value_label(tree, rule.variable, ci as u16)
                    ),
                    SplitKind::Binary { value } => {
                        if ci == 0 {
                            format!(
                                "{}={}",
                                rule.variable.name(schema),
                                value_label(tree, rule.variable, value)
                            )
                        } else {
                            format!(
                                "{}!={}",
                                rule.variable.name(schema),
                                value_label(tree, rule.variable, value)
                            )
                        }
                    }
                };
                path.push(test);
                collect_rows(tree, child, cb, estimator, path, rows)?;
                path.pop();
            }
            Ok(())
        }
    }
}

fn value_label(tree: &Tree, variable: SplitVariable, value: u16) -> String {
    let schema = tree.schema();
    match variable {
        SplitVariable::Predictor(i) => schema.predictor(i).values[value as usize].clone(),
        SplitVariable::Treatment => schema.treatment.values[value as usize].clone(),
    }
}

fn render_path(path: &[String]) -> String {
    if path.is_empty() {
        "(all)".to_string()
    } else {
        path.join(" & ")
    }
}

/// Writes the report as CSV: `path,support,p1,p0,elp,action`.
pub fn write_segment_report(
    rows: &[SegmentRow],
    out: &mut dyn Write,
    fingerprint: Option<&str>,
) -> std::io::Result<()> {
    if let Some(fp) = fingerprint {
        writeln!(out, "# config={fp}")?;
    }
    writeln!(out, "path,support,p1,p0,elp,action")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.path,
            r.support,
            r.p1,
            r.p0,
            r.elp,
            r.action.label()
        )?;
    }
    Ok(())
}
