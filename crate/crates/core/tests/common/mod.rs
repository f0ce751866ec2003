//! Helpers shared by the integration test targets.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use liftree::data::{Dataset, Schema, VariableSpec};
use liftree::tree::{CrossTab, Node, SplitKind, SplitRule, SplitVariable, Tree, TreeForm};

/// Random dataset over 1..=3 binary predictors with a random response table
/// keyed by the first predictor and the arm.
pub fn random_binary_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let p = rng.random_range(1..=3usize);
    let n = rng.random_range(20..=200usize);
    let predictors: Vec<VariableSpec> = (0..p)
        .map(|i| VariableSpec::new(format!("x{i}"), vec!["0".into(), "1".into()]).unwrap())
        .collect();
    let schema = Arc::new(
        Schema::new(
            predictors,
            VariableSpec::new("M", vec!["0".into(), "1".into()]).unwrap(),
            VariableSpec::new("S", vec!["0".into(), "1".into()]).unwrap(),
        )
        .unwrap(),
    );
    let theta: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
    let rows: Vec<Vec<u16>> = (0..n)
        .map(|_| {
            let mut row: Vec<u16> = (0..p).map(|_| rng.random_range(0..2u16)).collect();
            let m = rng.random_range(0..2u16);
            let s = u16::from(rng.random::<f64>() < theta[(row[0] * 2 + m) as usize]);
            row.push(m);
            row.push(s);
            row
        })
        .collect();
    Dataset::from_rows(schema, rows).unwrap()
}

/// Random forced-form tree: recursive one-vs-rest splits over values
/// observed in the covered rows, leaves holding the rows' cross-tabs.
pub fn random_forced_tree(rng: &mut ChaCha8Rng, data: &Dataset) -> Tree {
    fn crosstab(data: &Dataset, rows: &[u32]) -> CrossTab {
        let mut t = CrossTab::default();
        for &r in rows {
            let rec = data.record(r as usize);
            t.add(rec.mailing(), rec.subscribed());
        }
        t
    }
    fn build(rng: &mut ChaCha8Rng, data: &Dataset, rows: Vec<u32>, depth: usize) -> Node {
        if depth >= 3 || rows.len() < 4 || rng.random::<f64>() < 0.35 {
            return Node::leaf(crosstab(data, &rows));
        }
        let schema = data.schema();
        let var = rng.random_range(0..schema.predictor_count());
        let mut observed: Vec<u16> = rows
            .iter()
            .map(|&r| data.record(r as usize).predictor(var))
            .collect();
        observed.sort_unstable();
        observed.dedup();
        if observed.len() < 2 {
            return Node::leaf(crosstab(data, &rows));
        }
        let v = observed[rng.random_range(0..observed.len())];
        let (in_rows, rest_rows): (Vec<u32>, Vec<u32>) = rows
            .into_iter()
            .partition(|&r| data.record(r as usize).predictor(var) == v);
        Node::Internal {
            rule: SplitRule {
                variable: SplitVariable::Predictor(var),
                kind: SplitKind::Binary { value: v },
            },
            children: vec![
                build(rng, data, in_rows, depth + 1),
                build(rng, data, rest_rows, depth + 1),
            ],
        }
    }
    let rows: Vec<u32> = (0..data.len() as u32).collect();
    let root = build(rng, data, rows, 0);
    Tree::new(Arc::clone(data.schema()), root, TreeForm::Forced).unwrap()
}

/// Every predictor assignment of the dataset's schema.
pub fn full_domain(schema: &Schema) -> Vec<Vec<u16>> {
    let mut out: Vec<Vec<u16>> = vec![vec![]];
    for p in &schema.predictors {
        let mut next = Vec::new();
        for prefix in &out {
            for v in 0..p.arity() as u16 {
                let mut row = prefix.clone();
                row.push(v);
                next.push(row);
            }
        }
        out = next;
    }
    out
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
