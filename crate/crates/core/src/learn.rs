//! Greedy Bayesian tree growth and post-processing.
//!
//! All three learners start from a single leaf and repeatedly apply the
//! best-scoring one-vs-rest binary split anywhere in the tree, stopping at a
//! local maximum (no candidate improves the score). They differ in how the
//! treatment variable enters:
//!
//! * normal — the treatment competes with the predictors as a split
//!   variable;
//! * force — the treatment is never split explicitly, but every leaf is
//!   scored as if a final complete treatment split were present; at
//!   convergence those splits are materialized and then pruned wherever they
//!   do not pay for themselves;
//! * split-first — a complete treatment split at the root, then each arm
//!   grows its own subtree (equivalent to learning two independent trees).
//!
//! Ties between equal-scoring candidates are broken by variable index, then
//! singled-out value index, then leaf pre-order position, making every
//! learner deterministic.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Mailing};
use crate::error::{Error, Result};
use crate::scoring::{
    forced_leaf_log_score, forced_split_delta, leaf_log_score, split_delta, ScoreParams,
};
use crate::tree::{CrossTab, Node, SplitKind, SplitRule, SplitVariable, Tree, TreeForm};

/// Search mode of the greedy learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Normal,
    Force,
    SplitFirst,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Normal => "normal",
            Mode::Force => "force",
            Mode::SplitFirst => "split_first",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "normal" => Ok(Mode::Normal),
            "force" => Ok(Mode::Force),
            "split_first" | "split-first" => Ok(Mode::SplitFirst),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}, expected normal | force | split_first"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnConfig {
    pub mode: Mode,
    pub params: ScoreParams,
}

impl LearnConfig {
    pub fn new(mode: Mode, params: ScoreParams) -> Self {
        LearnConfig { mode, params }
    }
}

/// A one-vs-rest split of one leaf, with its children's counts and the score
/// change it would realize.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSplit {
    pub rule: SplitRule,
    /// Counts of the singled-out child, then the rest child.
    pub children: Vec<CrossTab>,
    pub delta: f64,
}

/// Enumerates the candidate splits of one leaf holding `rows`.
///
/// For every eligible variable and every value observed at the leaf with at
/// least one record on each side, a `{v}` vs rest candidate is produced.
/// Binary variables contribute at most one candidate, since their two
/// one-vs-rest splits coincide. The treatment is eligible only in normal
/// mode; force mode scores cross-tabs with the implicit treatment split.
pub fn enumerate_candidate_splits(
    data: &Dataset,
    rows: &[u32],
    mode: Mode,
    params: &ScoreParams,
) -> Vec<CandidateSplit> {
    let schema = data.schema();
    let parent = crosstab_of(data, rows);
    let total = parent.total();
    let mut out = Vec::new();

    let mut variables: Vec<SplitVariable> = (0..schema.predictor_count())
        .map(SplitVariable::Predictor)
        .collect();
    if mode == Mode::Normal {
        variables.push(SplitVariable::Treatment);
    }

    for variable in variables {
        let arity = variable.arity(schema);
        let mut tabs = vec![CrossTab::default(); arity];
        for &r in rows {
            let rec = data.record(r as usize);
            let v = match variable {
                SplitVariable::Predictor(i) => rec.predictor(i),
                SplitVariable::Treatment => rec.mailing().index() as u16,
            };
            tabs[v as usize].add(rec.mailing(), rec.subscribed());
        }
        let observed: Vec<u16> = (0..arity as u16)
            .filter(|&v| tabs[v as usize].total() > 0)
            .collect();
        let values: &[u16] = if arity == 2 && observed.len() == 2 {
            &observed[..1]
        } else {
            &observed
        };
        for &v in values {
            let in_tab = tabs[v as usize];
            if in_tab.total() == total {
                continue;
            }
            let rest = CrossTab::new(
                parent.s1m1 - in_tab.s1m1,
                parent.s0m1 - in_tab.s0m1,
                parent.s1m0 - in_tab.s1m0,
                parent.s0m0 - in_tab.s0m0,
            );
            let children = vec![in_tab, rest];
            let delta = candidate_delta(&parent, &children, mode, params);
            out.push(CandidateSplit {
                rule: SplitRule {
                    variable,
                    kind: SplitKind::Binary { value: v },
                },
                children,
                delta,
            });
        }
    }
    out
}

fn candidate_delta(
    parent: &CrossTab,
    children: &[CrossTab],
    mode: Mode,
    params: &ScoreParams,
) -> f64 {
    match mode {
        Mode::Force => forced_split_delta(parent, children, params).expect("counts partition"),
        Mode::Normal | Mode::SplitFirst => {
            let pooled: Vec<_> = children.iter().map(CrossTab::pooled).collect();
            split_delta(parent.pooled(), &pooled, params).expect("counts partition")
        }
    }
}

fn crosstab_of(data: &Dataset, rows: &[u32]) -> CrossTab {
    let mut tab = CrossTab::default();
    for &r in rows {
        let rec = data.record(r as usize);
        tab.add(rec.mailing(), rec.subscribed());
    }
    tab
}

/// Grows a tree according to `config.mode`.
pub fn grow(train: &Dataset, config: &LearnConfig) -> Result<Tree> {
    match config.mode {
        Mode::Normal => grow_normal(train, config),
        Mode::Force => grow_force(train, config),
        Mode::SplitFirst => grow_split_first(train, config),
    }
}

/// Unconstrained greedy growth over predictors and the treatment.
pub fn grow_normal(train: &Dataset, config: &LearnConfig) -> Result<Tree> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<u32> = (0..train.len() as u32).collect();
    let root = grow_subtree(train, rows, Mode::Normal, &config.params);
    Tree::new(Arc::clone(train.schema()), root, TreeForm::Standard)
}

/// Growth with the implicit last treatment split, followed by
/// materialization and post-processing. Returns a standard-form tree.
pub fn grow_force(train: &Dataset, config: &LearnConfig) -> Result<Tree> {
    let forced = grow_forced(train, config)?;
    let materialized = forced.materialize_treatment_splits()?;
    postprocess(&materialized, &config.params)
}

/// The raw force search result: a forced-form tree at growth convergence,
/// before materialization and post-processing.
pub fn grow_forced(train: &Dataset, config: &LearnConfig) -> Result<Tree> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<u32> = (0..train.len() as u32).collect();
    let root = grow_subtree(train, rows, Mode::Force, &config.params);
    Tree::new(Arc::clone(train.schema()), root, TreeForm::Forced)
}

/// Complete treatment split at the root, then two independently grown
/// subtrees, one per arm.
pub fn grow_split_first(train: &Dataset, config: &LearnConfig) -> Result<Tree> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut arm_rows: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for (i, rec) in train.records().enumerate() {
        arm_rows[rec.mailing().index()].push(i as u32);
    }
    for (i, rows) in arm_rows.iter().enumerate() {
        if rows.is_empty() {
            return Err(Error::EmptyTreatmentArm(
                train.schema().treatment.values[i].clone(),
            ));
        }
    }
    let [m0_rows, m1_rows] = arm_rows;
    let children = vec![
        grow_subtree(train, m0_rows, Mode::SplitFirst, &config.params),
        grow_subtree(train, m1_rows, Mode::SplitFirst, &config.params),
    ];
    let root = Node::Internal {
        rule: SplitRule {
            variable: SplitVariable::Treatment,
            kind: SplitKind::Complete,
        },
        children,
    };
    Tree::new(Arc::clone(train.schema()), root, TreeForm::Standard)
}

// ---------------------------------------------------------------------------
// Greedy growth engine
// ---------------------------------------------------------------------------

enum WorkNode {
    Leaf {
        rows: Vec<u32>,
        best: Option<CandidateSplit>,
    },
    Internal {
        rule: SplitRule,
        children: Vec<usize>,
    },
}

/// Grows a subtree over `rows` by repeatedly applying the globally best
/// positive-delta candidate, then freezes it into immutable nodes.
fn grow_subtree(data: &Dataset, rows: Vec<u32>, mode: Mode, params: &ScoreParams) -> Node {
    let mut nodes = Vec::new();
    let best = best_candidate(data, &rows, mode, params);
    nodes.push(WorkNode::Leaf { rows, best });

    loop {
        let leaves = preorder_leaves(&nodes);
        let mut chosen: Option<(usize, usize)> = None; // (node id, preorder pos)
        for (pos, &id) in leaves.iter().enumerate() {
            let WorkNode::Leaf {
                best: Some(cand), ..
            } = &nodes[id]
            else {
                continue;
            };
            if cand.delta <= 0.0 {
                continue;
            }
            let better = match chosen {
                None => true,
                Some((cur_id, cur_pos)) => {
                    let WorkNode::Leaf {
                        best: Some(cur), ..
                    } = &nodes[cur_id]
                    else {
                        unreachable!()
                    };
                    candidate_order(data, cand, pos, cur, cur_pos) == std::cmp::Ordering::Less
                }
            };
            if better {
                chosen = Some((id, pos));
            }
        }
        let Some((id, _)) = chosen else { break };
        apply_split(data, &mut nodes, id, mode, params);
    }

    freeze(&nodes, 0, data)
}

/// Tie-break order: higher delta first, then variable index, singled-out
/// value, and leaf pre-order position, all ascending.
fn candidate_order(
    data: &Dataset,
    a: &CandidateSplit,
    a_pos: usize,
    b: &CandidateSplit,
    b_pos: usize,
) -> std::cmp::Ordering {
    let schema = data.schema();
    let key = |c: &CandidateSplit, pos: usize| {
        let value = match c.rule.kind {
            SplitKind::Binary { value } => value,
            SplitKind::Complete => 0,
        };
        (c.rule.variable.order_index(schema), value, pos)
    };
    b.delta
        .partial_cmp(&a.delta)
        .expect("scores are never NaN")
        .then_with(|| key(a, a_pos).cmp(&key(b, b_pos)))
}

fn preorder_leaves(nodes: &[WorkNode]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        match &nodes[id] {
            WorkNode::Leaf { .. } => out.push(id),
            WorkNode::Internal { children, .. } => {
                for &c in children.iter().rev() {
                    stack.push(c);
                }
            }
        }
    }
    out
}

fn apply_split(
    data: &Dataset,
    nodes: &mut Vec<WorkNode>,
    id: usize,
    mode: Mode,
    params: &ScoreParams,
) {
    let WorkNode::Leaf { rows, best } = &mut nodes[id] else {
        unreachable!("split applied to an internal node");
    };
    let cand = best.take().expect("leaf chosen without a candidate");
    let rows = std::mem::take(rows);

    // A treatment split partitions its two values exactly like the binary
    // one-vs-rest on the not-mailed arm; store it in canonical complete form.
    let rule = match (cand.rule.variable, cand.rule.kind) {
        (SplitVariable::Treatment, SplitKind::Binary { value: 0 }) => SplitRule {
            variable: SplitVariable::Treatment,
            kind: SplitKind::Complete,
        },
        _ => cand.rule,
    };

    let mut child_rows: Vec<Vec<u32>> = vec![Vec::new(); 2];
    for r in rows {
        let rec = data.record(r as usize);
        let v = match cand.rule.variable {
            SplitVariable::Predictor(i) => rec.predictor(i),
            SplitVariable::Treatment => rec.mailing().index() as u16,
        };
        child_rows[cand.rule.route(v)].push(r);
    }

    let mut children = Vec::with_capacity(child_rows.len());
    for rows in child_rows {
        let best = best_candidate(data, &rows, mode, params);
        nodes.push(WorkNode::Leaf { rows, best });
        children.push(nodes.len() - 1);
    }
    nodes[id] = WorkNode::Internal { rule, children };
}

fn best_candidate(
    data: &Dataset,
    rows: &[u32],
    mode: Mode,
    params: &ScoreParams,
) -> Option<CandidateSplit> {
    enumerate_candidate_splits(data, rows, mode, params)
        .into_iter()
        .min_by(|a, b| candidate_order(data, a, 0, b, 0))
}

fn freeze(nodes: &[WorkNode], id: usize, data: &Dataset) -> Node {
    match &nodes[id] {
        WorkNode::Leaf { rows, .. } => Node::leaf(crosstab_of(data, rows)),
        WorkNode::Internal { rule, children } => Node::Internal {
            rule: *rule,
            children: children.iter().map(|&c| freeze(nodes, c, data)).collect(),
        },
    }
}

// ---------------------------------------------------------------------------
// Post-processing of materialized trees
// ---------------------------------------------------------------------------

/// Prunes a materialized tree for statistical significance.
///
/// First, every last treatment split is merged away when doing so increases
/// the score. Then two steps repeat until neither changes the tree: (a) every
/// last non-treatment split is deleted when deletion increases the score;
/// (b) every leaf without a treatment-split parent gains a complete
/// treatment split when that increases the score. Every applied edit
/// strictly increases the total score, so the procedure terminates at a tree
/// where no single such edit helps.
///
/// The input must be standard-form with every leaf directly under a
/// treatment split (the shape produced by materialization).
pub fn postprocess(tree: &Tree, params: &ScoreParams) -> Result<Tree> {
    if tree.form() != TreeForm::Standard {
        return Err(Error::WrongTreeForm {
            expected: "standard",
        });
    }
    if !leaf_parents_are_treatment_splits(tree.root()) {
        return Err(Error::PostprocessPrecondition);
    }
    let mut root = tree.root().clone();

    remove_unhelpful_treatment_splits(&mut root, params);
    loop {
        let mut changed = false;
        changed |= delete_unhelpful_last_splits(&mut root, params);
        changed |= add_helpful_treatment_splits(&mut root, params, false);
        if !changed {
            break;
        }
    }
    Tree::new(Arc::clone(tree.schema()), root, TreeForm::Standard)
}

fn children_are_leaves(children: &[Node]) -> bool {
    children.iter().all(Node::is_leaf)
}

fn leaf_parents_are_treatment_splits(node: &Node) -> bool {
    match node {
        Node::Leaf { .. } => false, // a bare root leaf has no treatment parent
        Node::Internal { rule, children } => {
            if rule.variable == SplitVariable::Treatment && children_are_leaves(children) {
                true
            } else {
                children.iter().all(|c| match c {
                    Node::Leaf { .. } => false,
                    internal => leaf_parents_are_treatment_splits(internal),
                })
            }
        }
    }
}

/// Score change from merging an internal node's leaf children into one leaf.
fn merge_delta(children: &[Node], params: &ScoreParams) -> (f64, CrossTab) {
    let merged = children.iter().fold(CrossTab::default(), |acc, c| {
        acc.merged(&c.implied_counts())
    });
    let child_total: f64 = children
        .iter()
        .map(|c| leaf_log_score(c.implied_counts().pooled(), params))
        .sum();
    (
        leaf_log_score(merged.pooled(), params) - child_total,
        merged,
    )
}

fn remove_unhelpful_treatment_splits(node: &mut Node, params: &ScoreParams) {
    if let Node::Internal { rule, children } = node {
        if rule.variable == SplitVariable::Treatment && children_are_leaves(children) {
            let (delta, merged) = merge_delta(children, params);
            if delta > 0.0 {
                *node = Node::leaf(merged);
            }
            return;
        }
        for c in children.iter_mut() {
            remove_unhelpful_treatment_splits(c, params);
        }
    }
}

fn delete_unhelpful_last_splits(node: &mut Node, params: &ScoreParams) -> bool {
    let Node::Internal { children, .. } = node else {
        return false;
    };
    let mut changed = false;
    for c in children.iter_mut() {
        changed |= delete_unhelpful_last_splits(c, params);
    }
    let Node::Internal { rule, children } = node else {
        unreachable!()
    };
    if rule.variable != SplitVariable::Treatment && children_are_leaves(children) {
        let (delta, merged) = merge_delta(children, params);
        if delta > 0.0 {
            *node = Node::leaf(merged);
            return true;
        }
    }
    changed
}

fn add_helpful_treatment_splits(
    node: &mut Node,
    params: &ScoreParams,
    parent_is_treatment: bool,
) -> bool {
    match node {
        Node::Leaf { stats } => {
            if parent_is_treatment {
                return false;
            }
            let tab = *stats.counts();
            let split_score = forced_leaf_log_score(&tab, params);
            let delta = split_score - leaf_log_score(tab.pooled(), params);
            if delta > 0.0 {
                *node = Node::Internal {
                    rule: SplitRule {
                        variable: SplitVariable::Treatment,
                        kind: SplitKind::Complete,
                    },
                    children: vec![
                        Node::leaf(tab.restricted_to(Mailing::NotMailed)),
                        Node::leaf(tab.restricted_to(Mailing::Mailed)),
                    ],
                };
                true
            } else {
                false
            }
        }
        Node::Internal { rule, children } => {
            let is_treatment = rule.variable == SplitVariable::Treatment;
            let mut changed = false;
            for c in children.iter_mut() {
                changed |= add_helpful_treatment_splits(c, params, is_treatment);
            }
            changed
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        generate, load_csv, BehaviorMixture, GeneratorConfig, SchemaConfig, SegmentSpec,
        VariableSpec,
    };
    use crate::scoring::tree_log_score;
    use std::io::Cursor;

    fn config(mode: Mode) -> LearnConfig {
        LearnConfig::new(mode, ScoreParams::default())
    }

    fn is_treatment_split(node: &Node) -> bool {
        matches!(
            node,
            Node::Internal { rule, .. } if rule.variable == SplitVariable::Treatment
        )
    }

    fn dataset_from_cells(cells: &[(&str, &str, u64, u64)]) -> Dataset {
        // (x value, m value, s1 count, s0 count)
        let mut csv = String::from("x,M,S\n");
        for (x, m, s1, s0) in cells {
            for _ in 0..*s1 {
                csv.push_str(&format!("{x},{m},1\n"));
            }
            for _ in 0..*s0 {
                csv.push_str(&format!("{x},{m},0\n"));
            }
        }
        load_csv(Cursor::new(csv), &SchemaConfig::default()).unwrap()
    }

    #[test]
    fn enumerate_three_values_three_candidates() {
        let csv = "x,M,S\na,1,1\nb,0,0\nc,1,1\na,0,0\nb,1,1\nc,0,0\n";
        let d = load_csv(Cursor::new(csv), &SchemaConfig::default()).unwrap();
        let rows: Vec<u32> = (0..d.len() as u32).collect();
        let cands = enumerate_candidate_splits(&d, &rows, Mode::Force, &ScoreParams::default());
        assert_eq!(cands.len(), 3);
    }

    #[test]
    fn enumerate_binary_variable_once() {
        let d = dataset_from_cells(&[("a", "1", 3, 3), ("b", "0", 3, 3)]);
        let rows: Vec<u32> = (0..d.len() as u32).collect();
        let cands = enumerate_candidate_splits(&d, &rows, Mode::Normal, &ScoreParams::default());
        // one for x, one for M
        assert_eq!(cands.len(), 2);
        assert!(cands
            .iter()
            .all(|c| matches!(c.rule.kind, SplitKind::Binary { value: 0 })));
    }

    #[test]
    fn force_mode_never_offers_treatment() {
        let d = dataset_from_cells(&[("a", "1", 5, 5), ("a", "0", 5, 5), ("b", "1", 5, 5)]);
        let rows: Vec<u32> = (0..d.len() as u32).collect();
        let cands = enumerate_candidate_splits(&d, &rows, Mode::Force, &ScoreParams::default());
        assert!(!cands.is_empty());
        assert!(cands
            .iter()
            .all(|c| c.rule.variable != SplitVariable::Treatment));
    }

    #[test]
    fn balanced_cells_grow_single_leaf() {
        let d = dataset_from_cells(&[
            ("a", "1", 25, 25),
            ("a", "0", 25, 25),
            ("b", "1", 25, 25),
            ("b", "0", 25, 25),
        ]);
        let tree = grow_normal(&d, &config(Mode::Normal)).unwrap();
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn deterministic_outcome_splits_on_its_predictor() {
        // S == x exactly, 200 records per side.
        let d = dataset_from_cells(&[
            ("a", "1", 100, 0),
            ("a", "0", 100, 0),
            ("b", "1", 0, 100),
            ("b", "0", 0, 100),
        ]);
        let tree = grow_normal(&d, &config(Mode::Normal)).unwrap();
        match tree.root() {
            Node::Internal { rule, .. } => {
                assert_eq!(rule.variable, SplitVariable::Predictor(0));
            }
            _ => panic!("expected a split"),
        }
    }

    #[test]
    fn persuadable_data_earns_treatment_split() {
        let cfg = GeneratorConfig {
            predictors: vec![VariableSpec::new("x", vec!["a".into(), "b".into()]).unwrap()],
            segments: vec![SegmentSpec {
                predicate: vec![],
                weight: 1.0,
                mixture: BehaviorMixture::new(0.0, 1.0, 0.0, 0.0).unwrap(),
            }],
            mail_probability: 0.5,
            population_size: 400,
            seed: 3,
            treatment_name: "M".into(),
            outcome_name: "S".into(),
        };
        let (d, _) = generate(&cfg).unwrap();
        let tree = grow_normal(&d, &config(Mode::Normal)).unwrap();
        let mut saw_treatment = false;
        fn walk(n: &Node, saw: &mut bool) {
            if let Node::Internal { rule, children } = n {
                if rule.variable == SplitVariable::Treatment {
                    *saw = true;
                }
                children.iter().for_each(|c| walk(c, saw));
            }
        }
        walk(tree.root(), &mut saw_treatment);
        assert!(saw_treatment);
    }

    #[test]
    fn growth_is_deterministic() {
        let d = dataset_from_cells(&[
            ("a", "1", 40, 10),
            ("a", "0", 10, 40),
            ("b", "1", 25, 25),
            ("b", "0", 25, 25),
        ]);
        for mode in [Mode::Normal, Mode::Force, Mode::SplitFirst] {
            let a = grow(&d, &config(mode)).unwrap();
            let b = grow(&d, &config(mode)).unwrap();
            assert_eq!(a, b, "{mode:?}");
        }
    }

    #[test]
    fn grown_leaves_hold_every_training_record() {
        let d = dataset_from_cells(&[
            ("a", "1", 40, 10),
            ("a", "0", 10, 40),
            ("b", "1", 5, 45),
            ("b", "0", 45, 5),
        ]);
        for mode in [Mode::Normal, Mode::Force, Mode::SplitFirst] {
            let tree = grow(&d, &config(mode)).unwrap();
            let mut total = CrossTab::default();
            let mut min_leaf = u64::MAX;
            tree.for_each_leaf(&mut |stats| {
                total = total.merged(stats.counts());
                min_leaf = min_leaf.min(stats.counts().total());
            });
            assert_eq!(total.total() as usize, d.len(), "{mode:?}");
            assert!(min_leaf >= 1, "{mode:?} produced an empty leaf");

            // Routing agreement: every record lands on a populated leaf and
            // the routed totals match the stored totals.
            let mut routed = CrossTab::default();
            for rec in d.records() {
                let stats = tree.traverse(rec.predictors(), rec.mailing()).unwrap();
                assert!(stats.counts().total() >= 1);
                routed.add(rec.mailing(), rec.subscribed());
            }
            assert_eq!(routed, total);
        }
    }

    #[test]
    fn split_first_roots_on_treatment_and_matches_per_arm_growth() {
        let d = dataset_from_cells(&[
            ("a", "1", 40, 10),
            ("a", "0", 10, 40),
            ("b", "1", 25, 25),
            ("b", "0", 30, 20),
        ]);
        let tree = grow_split_first(&d, &config(Mode::SplitFirst)).unwrap();
        let Node::Internal { rule, children } = tree.root() else {
            panic!("expected internal root");
        };
        assert_eq!(rule.variable, SplitVariable::Treatment);
        assert_eq!(rule.kind, SplitKind::Complete);

        // The mailed arm's subtree equals a tree grown on the mailed subset.
        let m1_rows: Vec<Vec<u16>> = d
            .records()
            .filter(|r| r.mailing() == Mailing::Mailed)
            .map(|r| {
                let mut v = r.predictors().to_vec();
                v.push(1);
                v.push(u16::from(r.subscribed()));
                v
            })
            .collect();
        let subset = Dataset::from_rows(Arc::clone(d.schema()), m1_rows).unwrap();
        let sub_rows: Vec<u32> = (0..subset.len() as u32).collect();
        let arm_root = grow_subtree(&subset, sub_rows, Mode::SplitFirst, &ScoreParams::default());
        assert_eq!(&children[1], &arm_root);
    }

    #[test]
    fn split_first_balanced_noise_keeps_single_leaf_arms() {
        let d = dataset_from_cells(&[
            ("a", "1", 25, 25),
            ("a", "0", 25, 25),
            ("b", "1", 25, 25),
            ("b", "0", 25, 25),
        ]);
        let tree = grow_split_first(&d, &config(Mode::SplitFirst)).unwrap();
        assert_eq!(tree.leaf_count(), 2);
    }

    #[test]
    fn split_first_requires_both_arms() {
        let good = load_csv(
            Cursor::new("x,M,S\na,1,1\nb,0,0\n"),
            &SchemaConfig::default(),
        )
        .unwrap();
        // load_csv rejects one-sided treatment columns, so build one directly.
        let rows: Vec<Vec<u16>> = vec![vec![0, 1, 1], vec![1, 1, 0]];
        let one_armed = Dataset::from_rows(Arc::clone(good.schema()), rows).unwrap();
        let err = grow_split_first(&one_armed, &config(Mode::SplitFirst)).unwrap_err();
        assert!(matches!(err, Error::EmptyTreatmentArm(_)));
    }

    #[test]
    fn force_keeps_informative_treatment_split_and_drops_noise() {
        // Segment a: strong persuadable signal. Segment b: never-buy.
        let d = dataset_from_cells(&[
            ("a", "1", 40, 10),
            ("a", "0", 10, 40),
            ("b", "1", 0, 50),
            ("b", "0", 0, 50),
        ]);
        let tree = grow_force(&d, &config(Mode::Force)).unwrap();
        // Segment a must distinguish the arms; segment b must not.
        let pa1 = tree.predict(&[0], Mailing::Mailed).unwrap();
        let pa0 = tree.predict(&[0], Mailing::NotMailed).unwrap();
        assert!(pa1 > pa0 + 0.3, "pa1 {pa1} pa0 {pa0}");
        let pb1 = tree.predict(&[1], Mailing::Mailed).unwrap();
        let pb0 = tree.predict(&[1], Mailing::NotMailed).unwrap();
        assert_eq!(pb1, pb0, "segment b treatment split should be pruned");
    }

    #[test]
    fn force_on_treatment_free_noise_collapses() {
        let d = dataset_from_cells(&[
            ("a", "1", 25, 25),
            ("a", "0", 25, 25),
            ("b", "1", 25, 25),
            ("b", "0", 25, 25),
        ]);
        let tree = grow_force(&d, &config(Mode::Force)).unwrap();
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn postprocess_removes_balanced_treatment_split() {
        let schema = crate::tree::fixtures::two_predictor_schema();
        let forced = Tree::single_leaf(schema, CrossTab::new(25, 25, 25, 25), TreeForm::Forced);
        let materialized = forced.materialize_treatment_splits().unwrap();
        let params = ScoreParams::default();
        let out = postprocess(&materialized, &params).unwrap();
        assert_eq!(out.leaf_count(), 1);
        assert!(tree_log_score(&out, &params) > tree_log_score(&materialized, &params));
    }

    #[test]
    fn postprocess_keeps_separating_treatment_split() {
        let schema = crate::tree::fixtures::two_predictor_schema();
        let forced = Tree::single_leaf(schema, CrossTab::new(40, 10, 10, 40), TreeForm::Forced);
        let materialized = forced.materialize_treatment_splits().unwrap();
        let out = postprocess(&materialized, &ScoreParams::default()).unwrap();
        assert_eq!(out.leaf_count(), 2);
        assert!(is_treatment_split(out.root()));
    }

    #[test]
    fn postprocess_rejects_wrong_shape() {
        let schema = crate::tree::fixtures::two_predictor_schema();
        let plain = Tree::single_leaf(schema, CrossTab::new(2, 2, 2, 2), TreeForm::Standard);
        assert!(matches!(
            postprocess(&plain, &ScoreParams::default()),
            Err(Error::PostprocessPrecondition)
        ));
    }

    #[test]
    fn postprocess_merges_redundant_predictor_split() {
        // Materialized shape: x split whose both arms carry identical,
        // treatment-balanced counts. Phase 1 removes both treatment splits;
        // the loop then merges the x split.
        let d = dataset_from_cells(&[
            ("a", "1", 25, 25),
            ("a", "0", 25, 25),
            ("b", "1", 25, 25),
            ("b", "0", 25, 25),
        ]);
        let schema = Arc::clone(d.schema());
        let select = |value: u16| -> Vec<u32> {
            d.records()
                .enumerate()
                .filter(|(_, r)| r.predictor(0) == value)
                .map(|(i, _)| i as u32)
                .collect()
        };
        let root = Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Predictor(0),
                kind: SplitKind::Binary { value: 0 },
            },
            children: vec![
                Node::leaf(crosstab_of(&d, &select(0))),
                Node::leaf(crosstab_of(&d, &select(1))),
            ],
        };
        let forced = Tree::new(schema, root, TreeForm::Forced).unwrap();
        let materialized = forced.materialize_treatment_splits().unwrap();
        let out = postprocess(&materialized, &ScoreParams::default()).unwrap();
        assert_eq!(out.leaf_count(), 1);
    }

    #[test]
    fn postprocess_reaches_a_fixed_point() {
        let d = dataset_from_cells(&[
            ("a", "1", 40, 10),
            ("a", "0", 10, 40),
            ("b", "1", 20, 30),
            ("b", "0", 22, 28),
        ]);
        let tree = grow_force(&d, &config(Mode::Force)).unwrap();
        let params = ScoreParams::default();
        assert_fixed_point(tree.root(), &params, false);
    }

    fn assert_fixed_point(node: &Node, params: &ScoreParams, parent_is_treatment: bool) {
        match node {
            Node::Leaf { stats } => {
                if !parent_is_treatment {
                    let tab = *stats.counts();
                    let delta =
                        forced_leaf_log_score(&tab, params) - leaf_log_score(tab.pooled(), params);
                    assert!(delta <= 0.0, "adding a treatment split would gain {delta}");
                }
            }
            Node::Internal { rule, children } => {
                let is_t = rule.variable == SplitVariable::Treatment;
                if is_t && children_are_leaves(children) {
                    let (delta, _) = merge_delta(children, params);
                    assert!(
                        delta <= 0.0,
                        "removing a treatment split would gain {delta}"
                    );
                }
                for c in children {
                    assert_fixed_point(c, params, is_t);
                }
            }
        }
    }
}
