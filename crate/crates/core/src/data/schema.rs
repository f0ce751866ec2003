//! Variable and schema definitions for mailing-experiment tables.
//!
//! Every variable is categorical. A schema fixes the predictor variables plus
//! two designated binary variables: the treatment (was the offer mailed) and
//! the outcome (did the person subscribe). Value order is significant: index
//! 0 of the treatment is the not-mailed arm, index 1 the mailed arm, and the
//! outcome is ordered (no, yes) the same way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment assignment for one person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mailing {
    NotMailed,
    Mailed,
}

impl Mailing {
    pub fn index(self) -> usize {
        match self {
            Mailing::NotMailed => 0,
            Mailing::Mailed => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Mailing> {
        match index {
            0 => Some(Mailing::NotMailed),
            1 => Some(Mailing::Mailed),
            _ => None,
        }
    }
}

/// One categorical variable: a name and its ordered value labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub values: Vec<String>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, values: Vec<String>) -> Result<Self> {
        let spec = VariableSpec {
            name: name.into(),
            values,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn arity(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }

    fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::InvalidSchema(format!(
                "variable {:?} needs at least 2 values",
                self.name
            )));
        }
        for (i, v) in self.values.iter().enumerate() {
            if self.values[..i].contains(v) {
                return Err(Error::InvalidSchema(format!(
                    "variable {:?} has duplicate value {v:?}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Full table layout: predictors plus the designated treatment and outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub predictors: Vec<VariableSpec>,
    /// Binary; values ordered (not mailed, mailed).
    pub treatment: VariableSpec,
    /// Binary; values ordered (did not subscribe, subscribed).
    pub outcome: VariableSpec,
}

impl Schema {
    pub fn new(
        predictors: Vec<VariableSpec>,
        treatment: VariableSpec,
        outcome: VariableSpec,
    ) -> Result<Self> {
        let schema = Schema {
            predictors,
            treatment,
            outcome,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.predictors {
            p.validate()?;
        }
        self.treatment.validate()?;
        self.outcome.validate()?;
        if self.treatment.arity() != 2 {
            return Err(Error::InvalidSchema(format!(
                "treatment {:?} must be binary",
                self.treatment.name
            )));
        }
        if self.outcome.arity() != 2 {
            return Err(Error::InvalidSchema(format!(
                "outcome {:?} must be binary",
                self.outcome.name
            )));
        }
        let mut names: Vec<&str> = self.predictors.iter().map(|p| p.name.as_str()).collect();
        names.push(&self.treatment.name);
        names.push(&self.outcome.name);
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate variable name {n:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn predictor_count(&self) -> usize {
        self.predictors.len()
    }

    /// Columns per record: predictors, then treatment, then outcome.
    pub fn column_count(&self) -> usize {
        self.predictors.len() + 2
    }

    pub fn treatment_column(&self) -> usize {
        self.predictors.len()
    }

    pub fn outcome_column(&self) -> usize {
        self.predictors.len() + 1
    }

    pub fn predictor(&self, index: usize) -> &VariableSpec {
        &self.predictors[index]
    }

    pub fn predictor_index(&self, name: &str) -> Option<usize> {
        self.predictors.iter().position(|p| p.name == name)
    }

    /// Stable 64-bit fingerprint of the full schema (names, labels, order),
    /// used to pair saved models with compatible datasets.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Fnv1a::new();
        let mut feed_var = |var: &VariableSpec| {
            hasher.write(var.name.as_bytes());
            hasher.write(&[0xff]);
            for v in &var.values {
                hasher.write(v.as_bytes());
                hasher.write(&[0xfe]);
            }
            hasher.write(&[0xfd]);
        };
        for p in &self.predictors {
            feed_var(p);
        }
        feed_var(&self.treatment);
        feed_var(&self.outcome);
        format!("{:016x}", hasher.finish())
    }
}

/// FNV-1a, 64-bit. Stable across platforms and builds, unlike `DefaultHasher`.
pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}
