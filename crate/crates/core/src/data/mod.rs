//! Schemas, record tables, CSV ingestion, and the synthetic population
//! generator.

mod dataset;
mod generator;
mod schema;

pub use dataset::{load_csv, Dataset, Record, SchemaConfig};
pub use generator::{
    behavior_response, generate, true_probabilities, write_ground_truth, Behavior, BehaviorMixture,
    GeneratorConfig, GroundTruth, SegmentSpec, DEFAULT_MAIL_PROBABILITY,
};
pub use schema::{Mailing, Schema, VariableSpec};

pub(crate) use schema::Fnv1a;
