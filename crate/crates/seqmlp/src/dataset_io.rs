// SPDX-License-Identifier: Apache-2.0

//! CSV ingestion.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use seqmlp_core::dataset::{Dataset, SplitConfig};

use crate::error::{Error, Result};

/// Label column, by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("label".into())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub label: LabelColumn,
    /// Columns (by name) excluded from the features, e.g. categorical ones.
    #[serde(default)]
    pub drop: Vec<String>,
}

/// Loaded dataset plus the original label strings, indexed by class.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub class_names: Vec<String>,
}

/// Read a headed CSV. Labels are mapped to classes in sorted order
/// (numerically when every label parses as a number).
pub fn load_dataset(path: &Path, schema: &DatasetSchema, split: SplitConfig) -> Result<LoadedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let label_col = match &schema.label {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Name(n) => headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::parse(path, format!("unknown label column `{n}`")))?,
        LabelColumn::Index(i) => {
            return Err(Error::parse(path, format!("label column {i} out of range ({} columns)", headers.len())))
        }
    };
    for d in &schema.drop {
        if !headers.contains(d) {
            return Err(Error::parse(path, format!("unknown column `{d}` in drop list")));
        }
    }
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != label_col && !schema.drop.contains(&headers[c]))
        .collect();

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::parse(
                path,
                format!("line {line}: {} fields, header has {}", record.len(), headers.len()),
            ));
        }
        let values = feature_cols
            .iter()
            .map(|&c| {
                record[c].parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::parse(path, format!("line {line}: non-numeric value `{}` in `{}`", &record[c], headers[c]))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        features.push(values);
        raw_labels.push(record[label_col].to_string());
    }

    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    let mut class_names: Vec<String> = distinct.into_iter().map(str::to_string).collect();
    if class_names.iter().all(|s| s.parse::<f64>().is_ok()) {
        class_names.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
    }
    let labels = raw_labels
        .iter()
        .map(|l| class_names.iter().position(|c| c == l).unwrap())
        .collect();
    let names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let dataset = Dataset::new(names, features, labels, split).map_err(|e| Error::parse(path, e))?;
    Ok(LoadedDataset { dataset, class_names })
}
