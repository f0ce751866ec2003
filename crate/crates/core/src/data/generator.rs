//! Synthetic mailing-experiment populations with known ground truth.
//!
//! A person's latent response behavior fully determines the outcome under
//! either treatment arm:
//!
//! * always-buy — subscribes whether or not the offer is mailed;
//! * persuadable — subscribes exactly when the offer is mailed;
//! * anti-persuadable — subscribes exactly when the offer is *not* mailed;
//! * never-buy — never subscribes.
//!
//! Only mixtures of these behaviors are identifiable from experimental data:
//! among mailed people the subscription rate is `always + persuadable`, and
//! among unmailed people it is `always + anti`. The generator draws each
//! person's segment, covariates, behavior, and mailing assignment from a
//! per-record seeded stream, so output is reproducible regardless of
//! execution order, and keeps the latent labels in a sidecar that the learner
//! never sees.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::dataset::Dataset;
use super::schema::{Mailing, Schema, VariableSpec};

pub const DEFAULT_MAIL_PROBABILITY: f64 = 0.9;

/// Latent response behavior of one person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    AlwaysBuy,
    Persuadable,
    AntiPersuadable,
    NeverBuy,
}

impl Behavior {
    pub const ALL: [Behavior; 4] = [
        Behavior::AlwaysBuy,
        Behavior::Persuadable,
        Behavior::AntiPersuadable,
        Behavior::NeverBuy,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Behavior::AlwaysBuy => "always_buy",
            Behavior::Persuadable => "persuadable",
            Behavior::AntiPersuadable => "anti_persuadable",
            Behavior::NeverBuy => "never_buy",
        }
    }
}

/// Whether a person with the given behavior subscribes under the given arm.
pub fn behavior_response(behavior: Behavior, mailing: Mailing) -> bool {
    match behavior {
        Behavior::AlwaysBuy => true,
        Behavior::Persuadable => mailing == Mailing::Mailed,
        Behavior::AntiPersuadable => mailing == Mailing::NotMailed,
        Behavior::NeverBuy => false,
    }
}

/// Proportions of the four behaviors within a population segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BehaviorMixture {
    pub always_buy: f64,
    pub persuadable: f64,
    pub anti_persuadable: f64,
    pub never_buy: f64,
}

impl BehaviorMixture {
    pub fn new(
        always_buy: f64,
        persuadable: f64,
        anti_persuadable: f64,
        never_buy: f64,
    ) -> Result<Self> {
        let m = BehaviorMixture {
            always_buy,
            persuadable,
            anti_persuadable,
            never_buy,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [
            self.always_buy,
            self.persuadable,
            self.anti_persuadable,
            self.never_buy,
        ];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidGeneratorConfig(
                "mixture proportions must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGeneratorConfig(format!(
                "mixture proportions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn proportion(&self, behavior: Behavior) -> f64 {
        match behavior {
            Behavior::AlwaysBuy => self.always_buy,
            Behavior::Persuadable => self.persuadable,
            Behavior::AntiPersuadable => self.anti_persuadable,
            Behavior::NeverBuy => self.never_buy,
        }
    }
}

/// Subscription probabilities implied by a mixture: among mailed people and
/// among unmailed people respectively.
pub fn true_probabilities(mixture: &BehaviorMixture) -> (f64, f64) {
    (
        mixture.always_buy + mixture.persuadable,
        mixture.always_buy + mixture.anti_persuadable,
    )
}

/// One population segment: a conjunction of predictor constraints, its share
/// of the population, and its behavior mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    /// `(variable name, value label)` pairs; unconstrained predictors are
    /// drawn uniformly.
    pub predicate: Vec<(String, String)>,
    pub weight: f64,
    pub mixture: BehaviorMixture,
}

/// Configuration of the synthetic population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub predictors: Vec<VariableSpec>,
    pub segments: Vec<SegmentSpec>,
    #[serde(default = "default_mail_probability")]
    pub mail_probability: f64,
    pub population_size: usize,
    pub seed: u64,
    #[serde(default = "default_treatment_name")]
    pub treatment_name: String,
    #[serde(default = "default_outcome_name")]
    pub outcome_name: String,
}

fn default_mail_probability() -> f64 {
    DEFAULT_MAIL_PROBABILITY
}

fn default_treatment_name() -> String {
    "M".into()
}

fn default_outcome_name() -> String {
    "S".into()
}

/// Latent labels for one generated record, kept out of the dataset proper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruth {
    pub segment: usize,
    pub behavior: Behavior,
}

/// Writes the ground-truth sidecar: `row_index,segment_id,behavior`.
pub fn write_ground_truth(
    truths: &[GroundTruth],
    out: &mut dyn Write,
    fingerprint: Option<&str>,
) -> std::io::Result<()> {
    if let Some(fp) = fingerprint {
        writeln!(out, "# config={fp}")?;
    }
    writeln!(out, "row_index,segment_id,behavior")?;
    for (i, t) in truths.iter().enumerate() {
        writeln!(out, "{},{},{}", i, t.segment, t.behavior.label())?;
    }
    Ok(())
}

struct ResolvedSegment {
    /// Fixed value per predictor, `None` when drawn uniformly.
    fixed: Vec<Option<u16>>,
    weight: f64,
    mixture: BehaviorMixture,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    fn resolve(&self) -> Result<Vec<ResolvedSegment>> {
        if self.population_size == 0 {
            return Err(Error::InvalidGeneratorConfig(
                "population_size must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mail_probability) {
            return Err(Error::InvalidGeneratorConfig(format!(
                "mail_probability {} not in [0, 1]",
                self.mail_probability
            )));
        }
        if self.segments.is_empty() {
            return Err(Error::InvalidGeneratorConfig("no segments".into()));
        }
        for p in &self.predictors {
            VariableSpec::new(p.name.clone(), p.values.clone())?;
        }

        let mut resolved = Vec::with_capacity(self.segments.len());
        for (si, seg) in self.segments.iter().enumerate() {
            seg.mixture.validate()?;
            if !(0.0..=1.0).contains(&seg.weight) {
                return Err(Error::InvalidGeneratorConfig(format!(
                    "segment {si} weight {} not in [0, 1]",
                    seg.weight
                )));
            }
            let mut fixed: Vec<Option<u16>> = vec![None; self.predictors.len()];
            for (name, label) in &seg.predicate {
                let vi = self
                    .predictors
                    .iter()
                    .position(|p| &p.name == name)
                    .ok_or_else(|| {
                        Error::InvalidGeneratorConfig(format!(
                            "segment {si} constrains unknown predictor {name:?}"
                        ))
                    })?;
                let value = self.predictors[vi].value_index(label).ok_or_else(|| {
                    Error::InvalidGeneratorConfig(format!(
                        "segment {si}: predictor {name:?} has no value {label:?}"
                    ))
                })? as u16;
                if let Some(prev) = fixed[vi] {
                    if prev != value {
                        return Err(Error::InvalidGeneratorConfig(format!(
                            "segment {si} constrains {name:?} to two different values"
                        )));
                    }
                }
                fixed[vi] = Some(value);
            }
            resolved.push(ResolvedSegment {
                fixed,
                weight: seg.weight,
                mixture: seg.mixture,
            });
        }

        let weight_sum: f64 = resolved.iter().map(|s| s.weight).sum();
        if (weight_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGeneratorConfig(format!(
                "segment weights sum to {weight_sum}, expected 1"
            )));
        }

        // Predicates must tile the predictor space: pairwise disjoint, and
        // their cell counts must add up to the size of the full space.
        for i in 0..resolved.len() {
            for j in (i + 1)..resolved.len() {
                let disjoint = resolved[i]
                    .fixed
                    .iter()
                    .zip(&resolved[j].fixed)
                    .any(|(a, b)| matches!((a, b), (Some(x), Some(y)) if x != y));
                if !disjoint {
                    return Err(Error::InvalidGeneratorConfig(format!(
                        "segments {i} and {j} overlap"
                    )));
                }
            }
        }
        let space: f64 = self.predictors.iter().map(|p| p.arity() as f64).product();
        let covered: f64 = resolved
            .iter()
            .map(|s| {
                s.fixed
                    .iter()
                    .zip(&self.predictors)
                    .map(|(f, p)| if f.is_some() { 1.0 } else { p.arity() as f64 })
                    .product::<f64>()
            })
            .sum();
        if (covered - space).abs() > 0.5 {
            return Err(Error::InvalidGeneratorConfig(format!(
                "segment predicates cover {covered} of {space} predictor cells"
            )));
        }

        Ok(resolved)
    }

    fn schema(&self) -> Result<Arc<Schema>> {
        let treatment =
            VariableSpec::new(self.treatment_name.clone(), vec!["0".into(), "1".into()])?;
        let outcome = VariableSpec::new(self.outcome_name.clone(), vec!["0".into(), "1".into()])?;
        Ok(Arc::new(Schema::new(
            self.predictors.clone(),
            treatment,
            outcome,
        )?))
    }
}

/// Draws the synthetic population. Each record uses its own ChaCha stream
/// keyed by `(seed, record index)`, so the output is a pure function of the
/// config.
pub fn generate(config: &GeneratorConfig) -> Result<(Dataset, Vec<GroundTruth>)> {
    let segments = config.resolve()?;
    let schema = config.schema()?;
    let width = schema.column_count();
    let mut values: Vec<u16> = Vec::with_capacity(config.population_size * width);
    let mut truths = Vec::with_capacity(config.population_size);

    for row in 0..config.population_size {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(row as u64);

        let segment = draw_index(&mut rng, segments.iter().map(|s| s.weight));
        let seg = &segments[segment];
        for (vi, p) in config.predictors.iter().enumerate() {
            let v = match seg.fixed[vi] {
                Some(v) => v,
                None => rng.random_range(0..p.arity() as u16),
            };
            values.push(v);
        }
        let behavior = Behavior::ALL[draw_index(
            &mut rng,
            Behavior::ALL.iter().map(|b| seg.mixture.proportion(*b)),
        )];
        let mailing = if rng.random::<f64>() < config.mail_probability {
            Mailing::Mailed
        } else {
            Mailing::NotMailed
        };
        values.push(mailing.index() as u16);
        values.push(u16::from(behavior_response(behavior, mailing)));
        truths.push(GroundTruth { segment, behavior });
    }

    let rows: Vec<Vec<u16>> = values.chunks(width).map(|c| c.to_vec()).collect();
    Ok((Dataset::from_rows(schema, rows)?, truths))
}

fn draw_index(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64>) -> usize {
    let weights: Vec<f64> = weights.collect();
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.len() - 1
}
