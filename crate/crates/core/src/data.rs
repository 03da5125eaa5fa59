//! Panel-data ingestion: CSV loading, temporal tagging of columns, and
//! temporally balanced subset sampling.
//!
//! ## Column naming convention
//!
//! Temporal tags are extracted from column names:
//!
//! - `delta` prefix with two trailing 4-digit years `delta_*_<Y1>_<Y2>`
//!   (Y1 < Y2) → a year-over-year change anchored to the later year:
//!   `Delta(Y1, Y2)`, effective time `Y2`.
//! - exactly one 4-digit year anywhere in the name (`sales2015`, `roe_2016`)
//!   → `Static(year)`.
//! - an adjacent year range `<Y1>_<Y2>` (Y1 < Y2) without the delta prefix
//!   → `Static(Y2)`; the configured *outcome* column is the exception and is
//!   anchored to the first year of its event window (`Static(Y1)`) so every
//!   pre-window regressor precedes it.
//! - anything else → `Atemporal`, which precedes all years.
//!
//! The convention is overridable per column via [`IngestConfig::tag_overrides`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset has no `{name}` column (required as {role})")]
    MissingColumn { name: String, role: &'static str },
    #[error("duplicate column name `{name}`")]
    DuplicateColumn { name: String },
    #[error("treatment and outcome must be distinct columns")]
    TreatmentEqualsOutcome,
    #[error("non-numeric cell at data row {row}, column `{column}`: `{value}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("missing value at data row {row}, column `{column}` (strict mode)")]
    MissingValue { row: usize, column: String },
    #[error("dataset is empty after ingestion")]
    EmptyDataset,
    #[error("subset size must be at least 2 (treatment and outcome)")]
    SubsetTooSmall,
    #[error("subset size {m} exceeds the column count {available}")]
    SubsetTooLarge { m: usize, available: usize },
    #[error("not enough bucket-eligible columns: need {needed}, have {available}")]
    InsufficientColumns { needed: usize, available: usize },
}

/// Temporal placement of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalTag {
    Delta { from_year: i32, to_year: i32 },
    Static { year: i32 },
    Atemporal,
}

impl TemporalTag {
    /// Year a column is anchored to for precedence checks. Deltas anchor to
    /// the later year; atemporal columns precede everything.
    pub fn effective_time(&self) -> i64 {
        match *self {
            TemporalTag::Delta { to_year, .. } => to_year as i64,
            TemporalTag::Static { year } => year as i64,
            TemporalTag::Atemporal => i64::MIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    pub tag: TemporalTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop incomplete rows and record how many were dropped.
    #[default]
    DropRows,
    /// Fail on the first incomplete row.
    Error,
}

/// Ingestion configuration; also loadable from a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestConfig {
    pub treatment: String,
    pub outcome: String,
    #[serde(default)]
    pub tag_overrides: BTreeMap<String, TemporalTag>,
    /// Columns to treat as binary regardless of their observed values.
    #[serde(default)]
    pub binary_columns: BTreeSet<String>,
    #[serde(default)]
    pub missing_policy: MissingPolicy,
}

impl IngestConfig {
    pub fn new(treatment: impl Into<String>, outcome: impl Into<String>) -> Self {
        IngestConfig {
            treatment: treatment.into(),
            outcome: outcome.into(),
            tag_overrides: BTreeMap::new(),
            binary_columns: BTreeSet::new(),
            missing_policy: MissingPolicy::default(),
        }
    }
}

/// A complete-case numeric panel. Read-only after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelDataset<F> {
    columns: Vec<ColumnMeta>,
    /// Column-major `n_rows * columns.len()`.
    values: Vec<F>,
    n_rows: usize,
    pub treatment: String,
    pub outcome: String,
    /// Incomplete rows dropped during ingestion.
    pub rows_dropped: usize,
}

impl<F: Scalar> PanelDataset<F> {
    /// Assembles a dataset from in-memory parts (synthetic generators, tests).
    pub fn from_parts(
        columns: Vec<ColumnMeta>,
        values: Vec<F>,
        n_rows: usize,
        treatment: impl Into<String>,
        outcome: impl Into<String>,
    ) -> Self {
        assert_eq!(values.len(), n_rows * columns.len());
        let ds = PanelDataset {
            columns,
            values,
            n_rows,
            treatment: treatment.into(),
            outcome: outcome.into(),
            rows_dropped: 0,
        };
        assert!(
            ds.column(&ds.treatment).is_some(),
            "treatment column present"
        );
        assert!(ds.column(&ds.outcome).is_some(), "outcome column present");
        ds
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn metas(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn meta(&self, name: &str) -> Option<&ColumnMeta> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&[F]> {
        let idx = self.columns.iter().position(|c| c.name == name)?;
        Some(&self.values[idx * self.n_rows..(idx + 1) * self.n_rows])
    }

    pub fn is_binary(&self, name: &str) -> bool {
        self.meta(name)
            .is_some_and(|m| m.kind == ColumnKind::Binary)
    }

    pub fn tags(&self) -> HashMap<String, TemporalTag> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), c.tag))
            .collect()
    }

    /// Restriction to a subset of columns (order taken from `names`).
    pub fn project(&self, names: &[String]) -> PanelDataset<F> {
        let mut columns = Vec::with_capacity(names.len());
        let mut values = Vec::with_capacity(names.len() * self.n_rows);
        for name in names {
            let col = self
                .column(name)
                .unwrap_or_else(|| panic!("unknown column `{name}`"));
            values.extend_from_slice(col);
            columns.push(self.meta(name).unwrap().clone());
        }
        PanelDataset {
            columns,
            values,
            n_rows: self.n_rows,
            treatment: self.treatment.clone(),
            outcome: self.outcome.clone(),
            rows_dropped: self.rows_dropped,
        }
    }
}

/// Maximal 4-digit digit runs in a name, as `(value, byte_start)`.
fn year_tokens(name: &str) -> Vec<(i32, usize)> {
    let bytes = name.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i - start == 4 {
                out.push((name[start..i].parse().unwrap(), start));
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Deterministic temporal tag from a column name. Total function: names that
/// match no rule are `Atemporal`.
pub fn tag_column(name: &str) -> TemporalTag {
    let tokens = year_tokens(name);
    if name.starts_with("delta") && tokens.len() >= 2 {
        let (y2, _) = tokens[tokens.len() - 1];
        let (y1, _) = tokens[tokens.len() - 2];
        if y1 < y2 {
            return TemporalTag::Delta {
                from_year: y1,
                to_year: y2,
            };
        }
        return TemporalTag::Atemporal;
    }
    match tokens.as_slice() {
        [(year, _)] => TemporalTag::Static { year: *year },
        [(y1, s1), (y2, s2)] if y1 < y2 && s1 + 5 == *s2 && name.as_bytes()[s1 + 4] == b'_' => {
            TemporalTag::Static { year: *y2 }
        }
        _ => TemporalTag::Atemporal,
    }
}

/// Tag for the configured outcome column: an event-window range is anchored
/// to its first year so all pre-window regressors precede it.
fn tag_outcome(name: &str) -> TemporalTag {
    let tokens = year_tokens(name);
    if !name.starts_with("delta") {
        if let [(y1, s1), (y2, s2)] = tokens.as_slice() {
            if y1 < y2 && s1 + 5 == *s2 && name.as_bytes()[s1 + 4] == b'_' {
                return TemporalTag::Static { year: *y1 };
            }
        }
    }
    tag_column(name)
}

fn parse_cell(raw: &str) -> Result<Option<f64>, ()> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(()),
    }
}

/// Loads a UTF-8, comma-delimited, headered CSV of numeric cells.
pub fn load_csv<F: Scalar>(
    path: &Path,
    config: &IngestConfig,
) -> Result<PanelDataset<F>, IngestError> {
    if config.treatment == config.outcome {
        return Err(IngestError::TreatmentEqualsOutcome);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => IngestError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => IngestError::Csv(e),
        })?;

    let names: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    {
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(IngestError::DuplicateColumn { name: n.clone() });
            }
        }
    }
    for (col, role) in [
        (&config.treatment, "treatment"),
        (&config.outcome, "outcome"),
    ] {
        if !names.contains(col) {
            return Err(IngestError::MissingColumn {
                name: col.clone(),
                role,
            });
        }
    }

    let n_cols = names.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rows_dropped = 0usize;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(n_cols);
        let mut missing_at: Option<usize> = None;
        for (col_idx, raw) in record.iter().enumerate() {
            match parse_cell(raw) {
                Ok(Some(v)) => row.push(v),
                Ok(None) => {
                    missing_at = Some(col_idx);
                    break;
                }
                Err(()) => {
                    return Err(IngestError::NonNumericCell {
                        row: row_idx + 1,
                        column: names.get(col_idx).cloned().unwrap_or_default(),
                        value: raw.to_string(),
                    })
                }
            }
        }
        match missing_at {
            Some(col_idx) => match config.missing_policy {
                MissingPolicy::DropRows => rows_dropped += 1,
                MissingPolicy::Error => {
                    return Err(IngestError::MissingValue {
                        row: row_idx + 1,
                        column: names[col_idx].clone(),
                    })
                }
            },
            None => rows.push(row),
        }
    }
    let n_rows = rows.len();
    if n_rows == 0 {
        return Err(IngestError::EmptyDataset);
    }

    let mut columns = Vec::with_capacity(n_cols);
    let mut values: Vec<F> = Vec::with_capacity(n_rows * n_cols);
    for (col_idx, name) in names.iter().enumerate() {
        let mut has_zero = false;
        let mut has_one = false;
        let mut only_01 = true;
        for row in &rows {
            let v = row[col_idx];
            if v == 0.0 {
                has_zero = true;
            } else if v == 1.0 {
                has_one = true;
            } else {
                only_01 = false;
            }
            values.push(F::cast(v));
        }
        let kind = if config.binary_columns.contains(name) || (only_01 && has_zero && has_one) {
            ColumnKind::Binary
        } else {
            ColumnKind::Continuous
        };
        let tag = config.tag_overrides.get(name).copied().unwrap_or_else(|| {
            if *name == config.outcome {
                tag_outcome(name)
            } else {
                tag_column(name)
            }
        });
        columns.push(ColumnMeta {
            name: name.clone(),
            kind,
            tag,
        });
    }

    Ok(PanelDataset {
        columns,
        values,
        n_rows,
        treatment: config.treatment.clone(),
        outcome: config.outcome.clone(),
        rows_dropped,
    })
}

/// The five sampling buckets, in quota-redistribution order after the
/// remainder bucket.
const BUCKETS: [TemporalTag; 5] = [
    TemporalTag::Delta {
        from_year: 2015,
        to_year: 2016,
    },
    TemporalTag::Delta {
        from_year: 2016,
        to_year: 2017,
    },
    TemporalTag::Static { year: 2015 },
    TemporalTag::Static { year: 2016 },
    TemporalTag::Static { year: 2017 },
];
/// Index of the bucket that receives the remainder and absorbs deficits first.
const REMAINDER_BUCKET: usize = 4;

/// Draws a temporally balanced subset of `m` column names: treatment and
/// outcome always included, the other `m - 2` split across the five buckets
/// with `floor((m-2)/5)` each and the remainder (plus any deficit) pushed to
/// the 2017 bucket, then to the remaining buckets in declaration order.
/// Deterministic for a fixed seed.
pub fn sample_balanced_subset<F: Scalar>(
    ds: &PanelDataset<F>,
    m: usize,
    rng_seed: u64,
) -> Result<Vec<String>, IngestError> {
    if m < 2 {
        return Err(IngestError::SubsetTooSmall);
    }
    if m > ds.n_cols() {
        return Err(IngestError::SubsetTooLarge {
            m,
            available: ds.n_cols(),
        });
    }

    let eligible: Vec<Vec<&str>> = BUCKETS
        .iter()
        .map(|bucket| {
            ds.columns
                .iter()
                .filter(|c| c.tag == *bucket && c.name != ds.treatment && c.name != ds.outcome)
                .map(|c| c.name.as_str())
                .collect()
        })
        .collect();

    let needed = m - 2;
    let available: usize = eligible.iter().map(Vec::len).sum();
    if available < needed {
        return Err(IngestError::InsufficientColumns { needed, available });
    }

    let base = needed / 5;
    let mut quotas = [base; 5];
    quotas[REMAINDER_BUCKET] += needed % 5;

    let mut take = [0usize; 5];
    let mut deficit = 0usize;
    for b in 0..5 {
        take[b] = quotas[b].min(eligible[b].len());
        deficit += quotas[b] - take[b];
    }
    let redistribution_order = [REMAINDER_BUCKET, 0, 1, 2, 3];
    for b in redistribution_order {
        if deficit == 0 {
            break;
        }
        let extra = deficit.min(eligible[b].len() - take[b]);
        take[b] += extra;
        deficit -= extra;
    }
    debug_assert_eq!(deficit, 0);

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(m);
    out.push(ds.treatment.clone());
    out.push(ds.outcome.clone());
    for b in 0..5 {
        let mut pool: Vec<&str> = eligible[b].clone();
        // Partial Fisher-Yates: the first take[b] slots are the draw.
        for i in 0..take[b] {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        out.extend(pool[..take[b]].iter().map(|s| s.to_string()));
    }
    Ok(out)
}
