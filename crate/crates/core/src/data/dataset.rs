//! Immutable record tables, CSV ingestion, and train/test partitioning.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::schema::{Mailing, Schema, VariableSpec};

/// Names the designated columns of a CSV table and maps their raw labels to
/// the (not mailed, mailed) and (did not subscribe, subscribed) value order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaConfig {
    pub treatment_column: String,
    pub outcome_column: String,
    /// Raw labels for (not mailed, mailed).
    pub treatment_labels: (String, String),
    /// Raw labels for (did not subscribe, subscribed).
    pub outcome_labels: (String, String),
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            treatment_column: "M".into(),
            outcome_column: "S".into(),
            treatment_labels: ("0".into(), "1".into()),
            outcome_labels: ("0".into(), "1".into()),
        }
    }
}

/// One row of a dataset, viewed against its schema.
#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    values: &'a [u16],
    schema: &'a Schema,
}

impl<'a> Record<'a> {
    pub fn predictor(&self, index: usize) -> u16 {
        self.values[index]
    }

    pub fn predictors(&self) -> &'a [u16] {
        &self.values[..self.schema.predictor_count()]
    }

    pub fn mailing(&self) -> Mailing {
        match self.values[self.schema.treatment_column()] {
            0 => Mailing::NotMailed,
            _ => Mailing::Mailed,
        }
    }

    pub fn subscribed(&self) -> bool {
        self.values[self.schema.outcome_column()] == 1
    }
}

/// An immutable table of records conforming to one schema.
#[derive(Debug, Clone)]
pub struct Dataset {
    schema: Arc<Schema>,
    /// Row-major values, `schema.column_count()` per record.
    values: Vec<u16>,
    rows: usize,
}

impl Dataset {
    /// Builds a dataset from row-major value indexes, validating every value
    /// against the schema.
    pub fn from_rows(schema: Arc<Schema>, rows: Vec<Vec<u16>>) -> Result<Self> {
        let width = schema.column_count();
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in &rows {
            if row.len() != width {
                return Err(Error::RaggedRow {
                    row: values.len() / width,
                    expected: width,
                    found: row.len(),
                });
            }
            for (col, &v) in row.iter().enumerate() {
                let arity = if col < schema.predictor_count() {
                    schema.predictor(col).arity()
                } else {
                    2
                };
                if v as usize >= arity {
                    let name = if col < schema.predictor_count() {
                        schema.predictor(col).name.clone()
                    } else if col == schema.treatment_column() {
                        schema.treatment.name.clone()
                    } else {
                        schema.outcome.name.clone()
                    };
                    return Err(Error::ValueOutOfRange {
                        variable: name,
                        value: v as usize,
                        arity,
                    });
                }
            }
            values.extend_from_slice(row);
        }
        let rows = rows.len();
        Ok(Dataset {
            schema,
            values,
            rows,
        })
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn record(&self, index: usize) -> Record<'_> {
        let width = self.schema.column_count();
        Record {
            values: &self.values[index * width..(index + 1) * width],
            schema: &self.schema,
        }
    }

    pub fn records(&self) -> impl Iterator<Item = Record<'_>> {
        (0..self.rows).map(move |i| self.record(i))
    }

    /// Deterministically partitions the records into a training set of size
    /// `round(train_fraction * N)` and the remaining test set. Row order is
    /// preserved within each part.
    pub fn split_train_test(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if self.rows == 0 {
            return Err(Error::EmptyDataset);
        }
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidTrainFraction(train_fraction));
        }
        let train_size = ((train_fraction * self.rows as f64).round() as usize).min(self.rows);
        let mut order: Vec<usize> = (0..self.rows).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut in_train = vec![false; self.rows];
        for &i in &order[..train_size] {
            in_train[i] = true;
        }
        let width = self.schema.column_count();
        let mut train = Vec::with_capacity(train_size * width);
        let mut test = Vec::with_capacity((self.rows - train_size) * width);
        for (i, &keep) in in_train.iter().enumerate() {
            let row = &self.values[i * width..(i + 1) * width];
            if keep {
                train.extend_from_slice(row);
            } else {
                test.extend_from_slice(row);
            }
        }
        Ok((
            Dataset {
                schema: Arc::clone(&self.schema),
                values: train,
                rows: train_size,
            },
            Dataset {
                schema: Arc::clone(&self.schema),
                values: test,
                rows: self.rows - train_size,
            },
        ))
    }

    /// Writes the dataset as a header-first CSV using the schema's labels.
    /// An optional fingerprint is recorded as a leading `#` comment.
    pub fn write_csv(&self, out: &mut dyn Write, fingerprint: Option<&str>) -> std::io::Result<()> {
        if let Some(fp) = fingerprint {
            writeln!(out, "# config={fp}")?;
        }
        let mut header: Vec<&str> = self
            .schema
            .predictors
            .iter()
            .map(|p| p.name.as_str())
            .collect();
        header.push(&self.schema.treatment.name);
        header.push(&self.schema.outcome.name);
        writeln!(out, "{}", header.join(","))?;
        for r in self.records() {
            let mut fields: Vec<&str> = Vec::with_capacity(self.schema.column_count());
            for (i, p) in self.schema.predictors.iter().enumerate() {
                fields.push(&p.values[r.predictor(i) as usize]);
            }
            fields.push(&self.schema.treatment.values[r.mailing().index()]);
            fields.push(&self.schema.outcome.values[usize::from(r.subscribed())]);
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

/// Loads a header-first CSV, inferring predictor value sets from the data.
///
/// The treatment and outcome columns are designated by `config`; every other
/// column becomes a categorical predictor whose values are the distinct
/// strings observed, ordered lexicographically. Lines starting with `#`
/// before the header are skipped. No quoting support: fields must not
/// contain commas.
pub fn load_csv(source: impl BufRead, config: &SchemaConfig) -> Result<Dataset> {
    let mut lines = source.lines();
    let header = loop {
        match lines.next() {
            Some(line) => {
                let line = line.map_err(|e| Error::io("<csv>", e))?;
                if line.starts_with('#') {
                    continue;
                }
                break line;
            }
            None => return Err(Error::MissingHeader),
        }
    };
    let header: Vec<String> = split_fields(&header);
    let treatment_col = header
        .iter()
        .position(|h| *h == config.treatment_column)
        .ok_or_else(|| Error::TreatmentColumnNotFound(config.treatment_column.clone()))?;
    let outcome_col = header
        .iter()
        .position(|h| *h == config.outcome_column)
        .ok_or_else(|| Error::OutcomeColumnNotFound(config.outcome_column.clone()))?;

    let predictor_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != treatment_col && i != outcome_col)
        .collect();

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io("<csv>", e))?;
        if line.is_empty() {
            continue;
        }
        let fields = split_fields(&line);
        if fields.len() != header.len() {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: header.len(),
                found: fields.len(),
            });
        }
        raw_rows.push(fields);
    }

    // Predictor value sets: distinct observed strings, sorted.
    let mut predictors = Vec::with_capacity(predictor_cols.len());
    for &col in &predictor_cols {
        let mut values: Vec<String> = raw_rows.iter().map(|r| r[col].clone()).collect();
        values.sort();
        values.dedup();
        if values.len() < 2 {
            return Err(Error::ConstantPredictor(header[col].clone()));
        }
        predictors.push(VariableSpec::new(header[col].clone(), values)?);
    }

    let treatment = VariableSpec::new(
        header[treatment_col].clone(),
        vec![
            config.treatment_labels.0.clone(),
            config.treatment_labels.1.clone(),
        ],
    )?;
    let outcome = VariableSpec::new(
        header[outcome_col].clone(),
        vec![
            config.outcome_labels.0.clone(),
            config.outcome_labels.1.clone(),
        ],
    )?;
    let schema = Arc::new(Schema::new(predictors, treatment, outcome)?);

    let map_designated = |raw: &str, var: &VariableSpec, is_treatment: bool| -> Result<u16> {
        match var.value_index(raw) {
            Some(i) => Ok(i as u16),
            None if is_treatment => Err(Error::UnmappedTreatmentValue {
                column: var.name.clone(),
                value: raw.to_string(),
            }),
            None => Err(Error::UnmappedOutcomeValue {
                column: var.name.clone(),
                value: raw.to_string(),
            }),
        }
    };

    let width = schema.column_count();
    let mut values = Vec::with_capacity(raw_rows.len() * width);
    let mut seen_treatment = [false; 2];
    let mut seen_outcome = [false; 2];
    for row in &raw_rows {
        for (p, &col) in predictor_cols.iter().enumerate() {
            // Observed values were collected above, so the lookup succeeds.
            let idx = schema.predictor(p).value_index(&row[col]).unwrap();
            values.push(idx as u16);
        }
        let m = map_designated(&row[treatment_col], &schema.treatment, true)?;
        seen_treatment[m as usize] = true;
        values.push(m);
        let s = map_designated(&row[outcome_col], &schema.outcome, false)?;
        seen_outcome[s as usize] = true;
        values.push(s);
    }

    if !raw_rows.is_empty() {
        if seen_treatment.iter().filter(|&&b| b).count() != 2 {
            let seen = if seen_treatment[0] {
                &schema.treatment.values[0]
            } else {
                &schema.treatment.values[1]
            };
            return Err(Error::DegenerateBinaryColumn {
                column: schema.treatment.name.clone(),
                seen: seen.clone(),
            });
        }
        if seen_outcome.iter().filter(|&&b| b).count() != 2 {
            let seen = if seen_outcome[0] {
                &schema.outcome.values[0]
            } else {
                &schema.outcome.values[1]
            };
            return Err(Error::DegenerateBinaryColumn {
                column: schema.outcome.name.clone(),
                seen: seen.clone(),
            });
        }
    }

    let rows = raw_rows.len();
    Ok(Dataset {
        schema,
        values,
        rows,
    })
}

fn split_fields(line: &str) -> Vec<String> {
    line.trim_end_matches('\r')
        .split(',')
        .map(|f| f.to_string())
        .collect()
}
