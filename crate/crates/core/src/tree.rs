//! Decision trees over categorical predictors and a binary treatment.
//!
//! A tree represents the conditional distribution of the binary outcome given
//! the treatment and the predictors. Internal nodes map values of one
//! variable to children; leaves store outcome counts cross-tabbed by
//! treatment arm. Trees come in two forms:
//!
//! * standard — the treatment may appear as an explicit split; a leaf's
//!   prediction pools its counts over both arms (when a treatment split lies
//!   on the path, the off-arm cells are empty, so pooling reads the arm's
//!   conditional distribution);
//! * forced — the treatment never appears as a split; every leaf's
//!   prediction reads the requested arm's cell of the cross-tab directly, as
//!   if a final treatment split were present.
//!
//! [`Tree::materialize_treatment_splits`] rewrites a forced tree into the
//! equivalent standard tree; predictions are unchanged at every input.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Mailing, Schema};
use crate::error::{Error, Result};
use crate::scoring::LeafCounts;

pub const FORMAT_VERSION: u32 = 1;

/// Variable tested by a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitVariable {
    Predictor(usize),
    Treatment,
}

impl SplitVariable {
    /// Position in the tie-break order: predictors by index, treatment last.
    pub fn order_index(self, schema: &Schema) -> usize {
        match self {
            SplitVariable::Predictor(i) => i,
            SplitVariable::Treatment => schema.predictor_count(),
        }
    }

    pub fn arity(self, schema: &Schema) -> usize {
        match self {
            SplitVariable::Predictor(i) => schema.predictor(i).arity(),
            SplitVariable::Treatment => 2,
        }
    }

    pub fn name(self, schema: &Schema) -> &str {
        match self {
            SplitVariable::Predictor(i) => &schema.predictor(i).name,
            SplitVariable::Treatment => &schema.treatment.name,
        }
    }
}

/// How a split partitions its variable's values among the children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    /// One child per value, in value order.
    Complete,
    /// Two children: the singled-out value, then all other values.
    Binary { value: u16 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitRule {
    pub variable: SplitVariable,
    pub kind: SplitKind,
}

impl SplitRule {
    pub fn child_count(&self, schema: &Schema) -> usize {
        match self.kind {
            SplitKind::Complete => self.variable.arity(schema),
            SplitKind::Binary { .. } => 2,
        }
    }

    /// Child index a record with `value` routes to.
    pub fn route(&self, value: u16) -> usize {
        match self.kind {
            SplitKind::Complete => value as usize,
            SplitKind::Binary { value: v } => usize::from(value != v),
        }
    }
}

/// Outcome counts cross-tabbed by treatment arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CrossTab {
    pub s1m1: u64,
    pub s0m1: u64,
    pub s1m0: u64,
    pub s0m0: u64,
}

impl CrossTab {
    pub fn new(s1m1: u64, s0m1: u64, s1m0: u64, s0m0: u64) -> Self {
        CrossTab {
            s1m1,
            s0m1,
            s1m0,
            s0m0,
        }
    }

    pub fn add(&mut self, mailing: Mailing, subscribed: bool) {
        match (mailing, subscribed) {
            (Mailing::Mailed, true) => self.s1m1 += 1,
            (Mailing::Mailed, false) => self.s0m1 += 1,
            (Mailing::NotMailed, true) => self.s1m0 += 1,
            (Mailing::NotMailed, false) => self.s0m0 += 1,
        }
    }

    pub fn merged(&self, other: &CrossTab) -> CrossTab {
        CrossTab {
            s1m1: self.s1m1 + other.s1m1,
            s0m1: self.s0m1 + other.s0m1,
            s1m0: self.s1m0 + other.s1m0,
            s0m0: self.s0m0 + other.s0m0,
        }
    }

    pub fn cell(&self, mailing: Mailing) -> LeafCounts {
        match mailing {
            Mailing::Mailed => self.cell_m1(),
            Mailing::NotMailed => self.cell_m0(),
        }
    }

    pub fn cell_m1(&self) -> LeafCounts {
        LeafCounts::new(self.s1m1, self.s0m1)
    }

    pub fn cell_m0(&self) -> LeafCounts {
        LeafCounts::new(self.s1m0, self.s0m0)
    }

    /// Counts pooled over both arms.
    pub fn pooled(&self) -> LeafCounts {
        LeafCounts::new(self.s1m1 + self.s1m0, self.s0m1 + self.s0m0)
    }

    pub fn total(&self) -> u64 {
        self.s1m1 + self.s0m1 + self.s1m0 + self.s0m0
    }

    /// Cross-tab with only the given arm's cells retained.
    pub fn restricted_to(&self, mailing: Mailing) -> CrossTab {
        match mailing {
            Mailing::Mailed => CrossTab::new(self.s1m1, self.s0m1, 0, 0),
            Mailing::NotMailed => CrossTab::new(0, 0, self.s1m0, self.s0m0),
        }
    }
}

/// Rule turning outcome counts into a subscription probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Posterior mean under the uniform prior: `(s1 + 1) / (n + 2)`.
    /// Total on empty leaves (returns 1/2).
    #[default]
    PosteriorMean,
    /// Raw fraction `s1 / n`; falls back to 1/2 on empty counts.
    MaxLikelihood,
}

impl Estimator {
    pub fn prob_s1(self, counts: LeafCounts) -> f64 {
        match self {
            Estimator::PosteriorMean => (counts.s1 as f64 + 1.0) / (counts.total() as f64 + 2.0),
            Estimator::MaxLikelihood => {
                if counts.total() == 0 {
                    0.5
                } else {
                    counts.s1 as f64 / counts.total() as f64
                }
            }
        }
    }
}

/// Leaf payload: the cross-tab plus its derived predictive distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LeafStats {
    counts: CrossTab,
}

impl LeafStats {
    pub fn new(counts: CrossTab) -> Self {
        LeafStats { counts }
    }

    pub fn counts(&self) -> &CrossTab {
        &self.counts
    }

    /// Predictive distribution `[p(s0), p(s1)]` for one arm.
    pub fn distribution(&self, mailing: Mailing, estimator: Estimator) -> [f64; 2] {
        let p1 = estimator.prob_s1(self.counts.cell(mailing));
        [1.0 - p1, p1]
    }

    /// Predictive distribution pooled over arms.
    pub fn pooled_distribution(&self, estimator: Estimator) -> [f64; 2] {
        let p1 = estimator.prob_s1(self.counts.pooled());
        [1.0 - p1, p1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal {
        rule: SplitRule,
        children: Vec<Node>,
    },
    Leaf {
        stats: LeafStats,
    },
}

impl Node {
    pub fn leaf(counts: CrossTab) -> Node {
        Node::Leaf {
            stats: LeafStats::new(counts),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    /// Sum of leaf cross-tabs under this node.
    pub fn implied_counts(&self) -> CrossTab {
        match self {
            Node::Leaf { stats } => *stats.counts(),
            Node::Internal { children, .. } => {
                children.iter().fold(CrossTab::default(), |acc, c| {
                    acc.merged(&c.implied_counts())
                })
            }
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Internal { children, .. } => children.iter().map(Node::leaf_count).sum(),
        }
    }
}

/// Tree form: whether treatment splits are explicit or implicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeForm {
    Standard,
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    schema: Arc<Schema>,
    root: Node,
    form: TreeForm,
}

impl Tree {
    /// Builds a tree, validating structure against the schema: child counts
    /// match split kinds, every split partitions at least two values still
    /// reachable on its path, and forced trees never split on the treatment.
    pub fn new(schema: Arc<Schema>, root: Node, form: TreeForm) -> Result<Self> {
        let mut reachable: Vec<Vec<bool>> = schema
            .predictors
            .iter()
            .map(|p| vec![true; p.arity()])
            .collect();
        let mut treatment_reachable = vec![true; 2];
        validate_node(
            &root,
            &schema,
            form,
            &mut reachable,
            &mut treatment_reachable,
        )?;
        Ok(Tree { schema, root, form })
    }

    pub fn single_leaf(schema: Arc<Schema>, counts: CrossTab, form: TreeForm) -> Tree {
        Tree {
            schema,
            root: Node::leaf(counts),
            form,
        }
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn form(&self) -> TreeForm {
        self.form
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn for_each_leaf(&self, f: &mut dyn FnMut(&LeafStats)) {
        fn walk(node: &Node, f: &mut dyn FnMut(&LeafStats)) {
            match node {
                Node::Leaf { stats } => f(stats),
                Node::Internal { children, .. } => {
                    for c in children {
                        walk(c, f);
                    }
                }
            }
        }
        walk(&self.root, f);
    }

    fn check_assignment(&self, x: &[u16]) -> Result<()> {
        if x.len() != self.schema.predictor_count() {
            return Err(Error::AssignmentLength {
                expected: self.schema.predictor_count(),
                found: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            let arity = self.schema.predictor(i).arity();
            if v as usize >= arity {
                return Err(Error::ValueOutOfRange {
                    variable: self.schema.predictor(i).name.clone(),
                    value: v as usize,
                    arity,
                });
            }
        }
        Ok(())
    }

    /// Routes a full assignment to its unique leaf.
    pub fn traverse(&self, x: &[u16], mailing: Mailing) -> Result<&LeafStats> {
        self.check_assignment(x)?;
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { stats } => return Ok(stats),
                Node::Internal { rule, children } => {
                    let value = match rule.variable {
                        SplitVariable::Predictor(i) => x[i],
                        SplitVariable::Treatment => mailing.index() as u16,
                    };
                    node = &children[rule.route(value)];
                }
            }
        }
    }

    /// Probability of subscribing for predictors `x` under arm `mailing`,
    /// using the posterior-mean estimate.
    pub fn predict(&self, x: &[u16], mailing: Mailing) -> Result<f64> {
        self.predict_with(x, mailing, Estimator::PosteriorMean)
    }

    pub fn predict_with(&self, x: &[u16], mailing: Mailing, estimator: Estimator) -> Result<f64> {
        let stats = self.traverse(x, mailing)?;
        let counts = match self.form {
            // Explicit treatment splits already conditioned the counts; a
            // leaf without one predicts the same value for both arms.
            TreeForm::Standard => stats.counts().pooled(),
            TreeForm::Forced => stats.counts().cell(mailing),
        };
        Ok(estimator.prob_s1(counts))
    }

    /// Rewrites a forced tree as the equivalent standard tree: every leaf
    /// becomes a complete treatment split over its two arm cells.
    pub fn materialize_treatment_splits(&self) -> Result<Tree> {
        if self.form != TreeForm::Forced {
            return Err(Error::AlreadyStandardForm);
        }
        fn rewrite(node: &Node) -> Node {
            match node {
                Node::Leaf { stats } => {
                    let tab = stats.counts();
                    Node::Internal {
                        rule: SplitRule {
                            variable: SplitVariable::Treatment,
                            kind: SplitKind::Complete,
                        },
                        children: vec![
                            Node::leaf(tab.restricted_to(Mailing::NotMailed)),
                            Node::leaf(tab.restricted_to(Mailing::Mailed)),
                        ],
                    }
                }
                Node::Internal { rule, children } => Node::Internal {
                    rule: *rule,
                    children: children.iter().map(rewrite).collect(),
                },
            }
        }
        Tree::new(
            Arc::clone(&self.schema),
            rewrite(&self.root),
            TreeForm::Standard,
        )
    }
}

fn validate_node(
    node: &Node,
    schema: &Schema,
    form: TreeForm,
    reachable: &mut Vec<Vec<bool>>,
    treatment_reachable: &mut Vec<bool>,
) -> Result<()> {
    let Node::Internal { rule, children } = node else {
        return Ok(());
    };
    if form == TreeForm::Forced && rule.variable == SplitVariable::Treatment {
        return Err(Error::InvalidTree(
            "forced-form tree splits on the treatment".into(),
        ));
    }
    if children.len() != rule.child_count(schema) {
        return Err(Error::InvalidTree(format!(
            "split on {} expects {} children, found {}",
            rule.variable.name(schema),
            rule.child_count(schema),
            children.len()
        )));
    }
    let slots: &mut Vec<bool> = match rule.variable {
        SplitVariable::Predictor(i) => {
            if i >= schema.predictor_count() {
                return Err(Error::InvalidTree(format!("unknown predictor index {i}")));
            }
            &mut reachable[i]
        }
        SplitVariable::Treatment => &mut *treatment_reachable,
    };
    let live = slots.iter().filter(|&&b| b).count();
    if live < 2 {
        return Err(Error::InvalidTree(format!(
            "vacuous re-split on {}",
            rule.variable.name(schema)
        )));
    }
    if let SplitKind::Binary { value } = rule.kind {
        if value as usize >= slots.len() || !slots[value as usize] {
            return Err(Error::InvalidTree(format!(
                "binary split on {} singles out an unreachable value",
                rule.variable.name(schema)
            )));
        }
    }
    let saved = slots.clone();
    for (ci, child) in children.iter().enumerate() {
        // Narrow the reachable set for this branch.
        {
            let slots: &mut Vec<bool> = match rule.variable {
                SplitVariable::Predictor(i) => &mut reachable[i],
                SplitVariable::Treatment => &mut *treatment_reachable,
            };
            for (vi, slot) in slots.iter_mut().enumerate() {
                *slot = saved[vi]
                    && match rule.kind {
                        SplitKind::Complete => vi == ci,
                        SplitKind::Binary { value } => (ci == 0) == (vi == value as usize),
                    };
            }
        }
        validate_node(child, schema, form, reachable, treatment_reachable)?;
        let slots: &mut Vec<bool> = match rule.variable {
            SplitVariable::Predictor(i) => &mut reachable[i],
            SplitVariable::Treatment => &mut *treatment_reachable,
        };
        slots.copy_from_slice(&saved);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON model files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TreeFile {
    format_version: u32,
    schema_fingerprint: String,
    form: TreeForm,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_fingerprint: Option<String>,
    root: NodeDto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDto {
    Internal {
        split: SplitDto,
        children: Vec<NodeDto>,
    },
    Leaf {
        counts: CountsDto,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitDto {
    variable: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountsDto {
    s1m1: u64,
    s0m1: u64,
    s1m0: u64,
    s0m0: u64,
}

impl Tree {
    /// Serializes the tree to its JSON model format. Predictive
    /// distributions are derived data and are never written.
    pub fn to_json(&self, config_fingerprint: Option<&str>) -> String {
        let file = TreeFile {
            format_version: FORMAT_VERSION,
            schema_fingerprint: self.schema.fingerprint(),
            form: self.form,
            config_fingerprint: config_fingerprint.map(|s| s.to_string()),
            root: node_to_dto(&self.root, &self.schema),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("tree serialization");
        out.push('\n');
        out
    }

    /// Loads a tree from its JSON model format, resolving variable names
    /// against `schema` and refusing mismatched fingerprints.
    pub fn from_json(bytes: &[u8], schema: Arc<Schema>) -> Result<Tree> {
        let file: TreeFile =
            serde_json::from_slice(bytes).map_err(|e| Error::MalformedModel(e.to_string()))?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedFormatVersion(file.format_version));
        }
        let expected = file.schema_fingerprint;
        let found = schema.fingerprint();
        if expected != found {
            return Err(Error::SchemaFingerprintMismatch { expected, found });
        }
        let root = node_from_dto(&file.root, &schema)?;
        Tree::new(schema, root, file.form)
    }
}

fn node_to_dto(node: &Node, schema: &Schema) -> NodeDto {
    match node {
        Node::Leaf { stats } => {
            let c = stats.counts();
            NodeDto::Leaf {
                counts: CountsDto {
                    s1m1: c.s1m1,
                    s0m1: c.s0m1,
                    s1m0: c.s1m0,
                    s0m0: c.s0m0,
                },
            }
        }
        Node::Internal { rule, children } => {
            let variable = rule.variable.name(schema).to_string();
            let (kind, value) = match rule.kind {
                SplitKind::Complete => ("complete".to_string(), None),
                SplitKind::Binary { value } => {
                    let label = match rule.variable {
                        SplitVariable::Predictor(i) => {
                            schema.predictor(i).values[value as usize].clone()
                        }
                        SplitVariable::Treatment => schema.treatment.values[value as usize].clone(),
                    };
                    ("binary".to_string(), Some(label))
                }
            };
            NodeDto::Internal {
                split: SplitDto {
                    variable,
                    kind,
                    value,
                },
                children: children.iter().map(|c| node_to_dto(c, schema)).collect(),
            }
        }
    }
}

fn node_from_dto(dto: &NodeDto, schema: &Schema) -> Result<Node> {
    match dto {
        NodeDto::Leaf { counts } => Ok(Node::leaf(CrossTab::new(
            counts.s1m1,
            counts.s0m1,
            counts.s1m0,
            counts.s0m0,
        ))),
        NodeDto::Internal { split, children } => {
            let variable = if split.variable == schema.treatment.name {
                SplitVariable::Treatment
            } else {
                match schema.predictor_index(&split.variable) {
                    Some(i) => SplitVariable::Predictor(i),
                    None => {
                        return Err(Error::MalformedModel(format!(
                            "unknown split variable {:?}",
                            split.variable
                        )))
                    }
                }
            };
            let kind = match split.kind.as_str() {
                "complete" => SplitKind::Complete,
                "binary" => {
                    let label = split.value.as_ref().ok_or_else(|| {
                        Error::MalformedModel("binary split missing value".into())
                    })?;
                    let index = match variable {
                        SplitVariable::Predictor(i) => schema.predictor(i).value_index(label),
                        SplitVariable::Treatment => schema.treatment.value_index(label),
                    }
                    .ok_or_else(|| {
                        Error::MalformedModel(format!(
                            "split value {label:?} not in variable {:?}",
                            split.variable
                        ))
                    })?;
                    SplitKind::Binary {
                        value: index as u16,
                    }
                }
                other => {
                    return Err(Error::MalformedModel(format!(
                        "unknown split kind {other:?}"
                    )))
                }
            };
            let children = children
                .iter()
                .map(|c| node_from_dto(c, schema))
                .collect::<Result<Vec<_>>>()?;
            Ok(Node::Internal {
                rule: SplitRule { variable, kind },
                children,
            })
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::{two_predictor_schema, worked_example_tree};
    use super::*;

    #[test]
    fn worked_example_traversal() {
        let tree = worked_example_tree();
        // X1 = "1" is index 0, X2 = "2" is index 1.
        let x = [0u16, 1u16];
        let p0 = tree.predict(&x, Mailing::NotMailed).unwrap();
        let p1 = tree.predict(&x, Mailing::Mailed).unwrap();
        assert!((p0 - 0.2).abs() < 1e-12, "p0 {p0}");
        assert!((p1 - 0.4).abs() < 1e-12, "p1 {p1}");
    }

    #[test]
    fn single_leaf_routes_everything_to_root() {
        let schema = two_predictor_schema();
        let tree = Tree::single_leaf(schema, CrossTab::new(1, 0, 0, 0), TreeForm::Standard);
        for x1 in 0..2u16 {
            for x2 in 0..3u16 {
                let stats = tree.traverse(&[x1, x2], Mailing::Mailed).unwrap();
                assert_eq!(stats.counts().s1m1, 1);
            }
        }
        // posterior mean over pooled counts (1, 0) -> 2/3
        let p = tree.predict(&[0, 0], Mailing::NotMailed).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_leaf_predicts_half() {
        let schema = two_predictor_schema();
        let tree = Tree::single_leaf(schema, CrossTab::default(), TreeForm::Standard);
        assert_eq!(tree.predict(&[0, 0], Mailing::Mailed).unwrap(), 0.5);
    }

    #[test]
    fn max_likelihood_estimator_reads_raw_fractions() {
        let schema = two_predictor_schema();
        let tree = Tree::single_leaf(schema, CrossTab::new(3, 0, 0, 1), TreeForm::Forced);
        let p1 = tree
            .predict_with(&[0, 0], Mailing::Mailed, Estimator::MaxLikelihood)
            .unwrap();
        let p0 = tree
            .predict_with(&[0, 0], Mailing::NotMailed, Estimator::MaxLikelihood)
            .unwrap();
        assert_eq!(p1, 1.0);
        assert_eq!(p0, 0.0);
        // Smoothed default stays strictly inside (0, 1).
        let smoothed = tree.predict(&[0, 0], Mailing::Mailed).unwrap();
        assert_eq!(smoothed, 4.0 / 5.0);
        // Empty counts fall back to one half under either rule.
        assert_eq!(Estimator::MaxLikelihood.prob_s1(LeafCounts::new(0, 0)), 0.5);
    }

    #[test]
    fn out_of_range_value_rejected() {
        let tree = worked_example_tree();
        let err = tree.predict(&[0, 9], Mailing::Mailed).unwrap_err();
        assert!(matches!(err, Error::ValueOutOfRange { .. }));
        let err = tree.predict(&[0], Mailing::Mailed).unwrap_err();
        assert!(matches!(err, Error::AssignmentLength { .. }));
    }

    #[test]
    fn materialize_single_leaf() {
        let schema = two_predictor_schema();
        let forced = Tree::single_leaf(schema, CrossTab::new(3, 5, 1, 7), TreeForm::Forced);
        let standard = forced.materialize_treatment_splits().unwrap();
        assert_eq!(standard.form(), TreeForm::Standard);
        assert_eq!(standard.leaf_count(), 2);
        match standard.root() {
            Node::Internal { rule, .. } => {
                assert_eq!(rule.variable, SplitVariable::Treatment);
                assert_eq!(rule.kind, SplitKind::Complete);
            }
            _ => panic!("expected a treatment split at the root"),
        }
    }

    #[test]
    fn materialize_preserves_predictions() {
        let schema = two_predictor_schema();
        let root = Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Predictor(1),
                kind: SplitKind::Complete,
            },
            children: vec![
                Node::leaf(CrossTab::new(5, 2, 1, 4)),
                Node::leaf(CrossTab::new(0, 3, 2, 2)),
                Node::leaf(CrossTab::new(7, 0, 0, 1)),
            ],
        };
        let forced = Tree::new(schema, root, TreeForm::Forced).unwrap();
        let standard = forced.materialize_treatment_splits().unwrap();
        assert_eq!(standard.leaf_count(), 6);
        for x1 in 0..2u16 {
            for x2 in 0..3u16 {
                for m in [Mailing::NotMailed, Mailing::Mailed] {
                    let a = forced.predict(&[x1, x2], m).unwrap();
                    let b = standard.predict(&[x1, x2], m).unwrap();
                    assert_eq!(a, b, "x=({x1},{x2}) m={m:?}");
                }
            }
        }
    }

    #[test]
    fn materialize_standard_tree_rejected() {
        let tree = worked_example_tree();
        assert!(matches!(
            tree.materialize_treatment_splits(),
            Err(Error::AlreadyStandardForm)
        ));
    }

    #[test]
    fn forced_form_must_not_split_on_treatment() {
        let schema = two_predictor_schema();
        let root = Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Treatment,
                kind: SplitKind::Complete,
            },
            children: vec![
                Node::leaf(CrossTab::default()),
                Node::leaf(CrossTab::default()),
            ],
        };
        assert!(Tree::new(schema, root, TreeForm::Forced).is_err());
    }

    #[test]
    fn contradictory_resplit_rejected() {
        let schema = two_predictor_schema();
        // Binary split on X1 {1} vs {2}; the in-branch re-splits X1.
        let inner = Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Predictor(0),
                kind: SplitKind::Complete,
            },
            children: vec![
                Node::leaf(CrossTab::default()),
                Node::leaf(CrossTab::default()),
            ],
        };
        let root = Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Predictor(0),
                kind: SplitKind::Binary { value: 0 },
            },
            children: vec![inner, Node::leaf(CrossTab::default())],
        };
        let err = Tree::new(schema, root, TreeForm::Standard).unwrap_err();
        assert!(matches!(err, Error::InvalidTree(msg) if msg.contains("vacuous")));
    }

    #[test]
    fn consistent_resplit_with_remaining_values_allowed() {
        let schema = two_predictor_schema();
        // X2 binary {1} vs rest; rest branch re-splits X2 {2} vs {3}.
        let inner = Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Predictor(1),
                kind: SplitKind::Binary { value: 1 },
            },
            children: vec![
                Node::leaf(CrossTab::default()),
                Node::leaf(CrossTab::default()),
            ],
        };
        let root = Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Predictor(1),
                kind: SplitKind::Binary { value: 0 },
            },
            children: vec![Node::leaf(CrossTab::default()), inner],
        };
        assert!(Tree::new(schema, root, TreeForm::Standard).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let tree = worked_example_tree();
        let json = tree.to_json(Some("feedf00d"));
        let again = Tree::from_json(json.as_bytes(), Arc::clone(tree.schema())).unwrap();
        assert_eq!(tree, again);
    }

    #[test]
    fn json_single_leaf_round_trip() {
        let schema = two_predictor_schema();
        let tree = Tree::single_leaf(schema, CrossTab::new(9, 1, 2, 8), TreeForm::Forced);
        let json = tree.to_json(None);
        let again = Tree::from_json(json.as_bytes(), Arc::clone(tree.schema())).unwrap();
        assert_eq!(tree, again);
    }

    #[test]
    fn unknown_node_shape_rejected() {
        let schema = two_predictor_schema();
        let json = format!(
            r#"{{"format_version":1,"schema_fingerprint":"{}","form":"standard","root":{{"frobnicate":3}}}}"#,
            schema.fingerprint()
        );
        let err = Tree::from_json(json.as_bytes(), schema).unwrap_err();
        assert!(matches!(err, Error::MalformedModel(_)));
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let tree = worked_example_tree();
        let json = tree.to_json(None);
        let other_schema = Arc::new(
            Schema::new(
                vec![crate::data::VariableSpec::new("Z", vec!["0".into(), "1".into()]).unwrap()],
                crate::data::VariableSpec::new("M", vec!["0".into(), "1".into()]).unwrap(),
                crate::data::VariableSpec::new("S", vec!["0".into(), "1".into()]).unwrap(),
            )
            .unwrap(),
        );
        let err = Tree::from_json(json.as_bytes(), other_schema).unwrap_err();
        assert!(matches!(err, Error::SchemaFingerprintMismatch { .. }));
    }

    #[test]
    fn count_conservation() {
        let tree = worked_example_tree();
        let total = tree.root().implied_counts();
        assert_eq!(total.total(), 8 * 6);
    }
}
