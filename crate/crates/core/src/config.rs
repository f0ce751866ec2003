//! Run configuration: a flat key-value file plus command-line overrides.
//!
//! The file format is one `key = value` pair per line; blank lines and lines
//! starting with `#` are ignored. Command-line flags take precedence over
//! file values, which take precedence over the defaults. Recognized keys:
//!
//! ```text
//! treatment_column    name of the mailed/not-mailed column       (M)
//! outcome_column      name of the subscribed/not column          (S)
//! treatment_m0        label meaning "not mailed"                 (0)
//! treatment_m1        label meaning "mailed"                     (1)
//! outcome_s0          label meaning "did not subscribe"          (0)
//! outcome_s1          label meaning "subscribed"                 (1)
//! mode                normal | force | split_first               (force)
//! kappa               structure-prior base in (0, 1]             (0.001)
//! estimator           posterior_mean | max_likelihood            (posterior_mean)
//! cost                mailing cost                               (0.42)
//! solicited_revenue   revenue from a solicited subscription      (10)
//! unsolicited_revenue revenue from an unsolicited subscription   (10)
//! sweep_r             revenue range lo:hi[:step]                 (1:15)
//! seed                RNG seed for train/test splitting          (0)
//! train_fraction      held-out split fraction in (0, 1)          (none)
//! models              comma-separated model paths for sweep      (none)
//! ```

use std::collections::BTreeMap;

use crate::data::{Fnv1a, SchemaConfig};
use crate::error::{Error, Result};
use crate::learn::Mode;
use crate::policy::CostBenefit;
use crate::scoring::{ScoreParams, DEFAULT_KAPPA};
use crate::tree::Estimator;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schema: SchemaConfig,
    pub mode: Mode,
    pub kappa: f64,
    pub estimator: Estimator,
    pub cost_benefit: CostBenefit,
    pub sweep_r: String,
    pub seed: u64,
    pub train_fraction: Option<f64>,
    pub models: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: SchemaConfig::default(),
            mode: Mode::Force,
            kappa: DEFAULT_KAPPA,
            estimator: Estimator::PosteriorMean,
            cost_benefit: CostBenefit {
                mail_cost: 0.42,
                solicited_revenue: 10.0,
                unsolicited_revenue: 10.0,
            },
            sweep_r: "1:15".into(),
            seed: 0,
            train_fraction: None,
            models: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Parses a config file and layers it over the defaults.
    pub fn from_file_text(text: &str) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        config.apply_file_text(text)?;
        Ok(config)
    }

    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "treatment_column" => self.schema.treatment_column = value.into(),
            "outcome_column" => self.schema.outcome_column = value.into(),
            "treatment_m0" => self.schema.treatment_labels.0 = value.into(),
            "treatment_m1" => self.schema.treatment_labels.1 = value.into(),
            "outcome_s0" => self.schema.outcome_labels.0 = value.into(),
            "outcome_s1" => self.schema.outcome_labels.1 = value.into(),
            "mode" => self.mode = value.parse()?,
            "kappa" => {
                let kappa: f64 = parse_num(key, value)?;
                ScoreParams::new(kappa)?;
                self.kappa = kappa;
            }
            "estimator" => {
                self.estimator = match value {
                    "posterior_mean" => Estimator::PosteriorMean,
                    "max_likelihood" | "mle" => Estimator::MaxLikelihood,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown estimator {other:?}, expected posterior_mean | max_likelihood"
                        )))
                    }
                }
            }
            "cost" => self.cost_benefit.mail_cost = parse_num(key, value)?,
            "solicited_revenue" => self.cost_benefit.solicited_revenue = parse_num(key, value)?,
            "unsolicited_revenue" => self.cost_benefit.unsolicited_revenue = parse_num(key, value)?,
            "sweep_r" => self.sweep_r = value.into(),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed {value:?}")))?
            }
            "train_fraction" => self.train_fraction = Some(parse_num(key, value)?),
            "models" => {
                self.models = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn score_params(&self) -> ScoreParams {
        ScoreParams { kappa: self.kappa }
    }

    /// Stable hash of the effective configuration, stamped into every output
    /// file for provenance.
    pub fn fingerprint(&self) -> String {
        let entries: BTreeMap<&str, String> = BTreeMap::from([
            ("treatment_column", self.schema.treatment_column.clone()),
            ("outcome_column", self.schema.outcome_column.clone()),
            ("treatment_m0", self.schema.treatment_labels.0.clone()),
            ("treatment_m1", self.schema.treatment_labels.1.clone()),
            ("outcome_s0", self.schema.outcome_labels.0.clone()),
            ("outcome_s1", self.schema.outcome_labels.1.clone()),
            ("mode", self.mode.label().to_string()),
            ("kappa", format!("{:e}", self.kappa)),
            (
                "estimator",
                match self.estimator {
                    Estimator::PosteriorMean => "posterior_mean".to_string(),
                    Estimator::MaxLikelihood => "max_likelihood".to_string(),
                },
            ),
            ("cost", format!("{:e}", self.cost_benefit.mail_cost)),
            (
                "solicited_revenue",
                format!("{:e}", self.cost_benefit.solicited_revenue),
            ),
            (
                "unsolicited_revenue",
                format!("{:e}", self.cost_benefit.unsolicited_revenue),
            ),
            ("sweep_r", self.sweep_r.clone()),
            ("seed", self.seed.to_string()),
            (
                "train_fraction",
                self.train_fraction
                    .map(|f| format!("{f:e}"))
                    .unwrap_or_default(),
            ),
            ("models", self.models.join(",")),
        ]);
        let mut hasher = Fnv1a::new();
        for (k, v) in entries {
            hasher.write(k.as_bytes());
            hasher.write(b"=");
            hasher.write(v.as_bytes());
            hasher.write(b"\n");
        }
        format!("{:016x}", hasher.finish())
    }
}

fn parse_num(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("bad number {value:?} for {key}")))
}
