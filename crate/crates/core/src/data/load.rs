use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;

use super::hashing::hash_feature;
use super::schema::{ColumnKind, Schema};
use super::Dataset;
use crate::error::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_csv_str(&text, schema)
}

/// Parses CSV text (one header row, comma-separated) against `schema`.
pub fn load_csv_str(text: &str, schema: &Schema) -> Result<Dataset> {
    schema.validate()?;
    if text.trim().is_empty() {
        return Err(Error::Csv("empty file".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let position = header_positions(&header, schema)?;

    let m = schema.input_dim();
    let slots = schema.feature_slots();
    let label_pos = position[schema.label_column()];
    let sensitive_pos = position[schema.sensitive_column()];

    let mut values: Vec<f64> = Vec::new();
    let mut missing: Vec<(usize, usize)> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut groups: Vec<u32> = Vec::new();
    let mut group_names: Vec<String> = Vec::new();
    let mut group_ids: HashMap<String, u32> = HashMap::new();

    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let line = row + 2;
        let cell = |col: usize| record.get(position[col]).unwrap_or("");
        let mut encoded = vec![0.0; m];
        for slot in &slots {
            let name = &schema.columns[slot.column].name;
            let raw = cell(slot.column);
            match slot.kind {
                ColumnKind::Numeric => {
                    if raw.is_empty() {
                        if !schema.impute_missing {
                            return Err(Error::Csv(format!("line {line}: missing value in '{name}'")));
                        }
                        missing.push((row, slot.offset));
                        continue;
                    }
                    let v: f64 = raw.parse().map_err(|_| {
                        Error::Csv(format!("line {line}: cannot parse '{raw}' in '{name}' as a number"))
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Csv(format!("line {line}: non-finite value in '{name}'")));
                    }
                    encoded[slot.offset] = v;
                }
                ColumnKind::Categorical => {
                    if raw.is_empty() && !schema.impute_missing {
                        return Err(Error::Csv(format!("line {line}: missing value in '{name}'")));
                    }
                    let (index, sign) = hash_feature(raw, name, schema.hash_buckets)?;
                    encoded[slot.offset + index] += sign;
                }
                ColumnKind::Label | ColumnKind::Sensitive => unreachable!(),
            }
        }
        values.extend_from_slice(&encoded);

        let label = record.get(label_pos).unwrap_or("");
        let group = record.get(sensitive_pos).unwrap_or("");
        if label.is_empty() || group.is_empty() {
            return Err(Error::Csv(format!("line {line}: missing label or sensitive value")));
        }
        raw_labels.push(label.to_string());
        let next = group_names.len() as u32;
        let id = *group_ids.entry(group.to_string()).or_insert_with(|| {
            group_names.push(group.to_string());
            next
        });
        groups.push(id);
    }

    let n = raw_labels.len();
    if n == 0 {
        return Err(Error::Csv("no data rows".into()));
    }
    let mut x = Array2::from_shape_vec((n, m), values).expect("row width is m");
    impute_means(&mut x, &missing);
    let label_name = &schema.columns[schema.label_column()].name;
    let y = map_labels(&raw_labels, label_name, schema.positive_label.as_deref())?;
    Dataset::new(x, y, groups, group_names, schema.clone())
}

fn header_positions(header: &[String], schema: &Schema) -> Result<Vec<usize>> {
    if header.len() != schema.columns.len() {
        return Err(Error::Csv(format!(
            "header has {} columns, schema has {}",
            header.len(),
            schema.columns.len()
        )));
    }
    schema
        .columns
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| *h == c.name)
                .ok_or_else(|| Error::Csv(format!("header is missing column '{}'", c.name)))
        })
        .collect()
}

fn impute_means(x: &mut Array2<f64>, missing: &[(usize, usize)]) {
    if missing.is_empty() {
        return;
    }
    let mut cols: Vec<usize> = missing.iter().map(|&(_, c)| c).collect();
    cols.sort_unstable();
    cols.dedup();
    for c in cols {
        let holes: Vec<usize> = missing.iter().filter(|m| m.1 == c).map(|m| m.0).collect();
        let present = x.nrows() - holes.len();
        let sum: f64 = x.column(c).sum();
        let mean = if present == 0 { 0.0 } else { sum / present as f64 };
        for r in holes {
            x[[r, c]] = mean;
        }
    }
}

fn map_labels(raw: &[String], column: &str, positive: Option<&str>) -> Result<Vec<u8>> {
    let mut distinct: Vec<&str> = Vec::new();
    for r in raw {
        if !distinct.contains(&r.as_str()) {
            distinct.push(r);
        }
    }
    if distinct.len() > 2 {
        return Err(Error::NonBinaryLabel {
            column: column.to_string(),
            count: distinct.len(),
        });
    }
    let positive: String = match positive {
        Some(p) => p.to_string(),
        None if distinct.len() == 2 => {
            let (a, b) = (distinct[0], distinct[1]);
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(fa), Ok(fb)) => if fa > fb { a } else { b }.to_string(),
                _ => a.max(b).to_string(),
            }
        }
        None => match distinct[0].parse::<f64>() {
            Ok(v) if v == 1.0 => distinct[0].to_string(),
            Ok(v) if v == 0.0 => String::new(),
            _ => {
                return Err(Error::Csv(format!(
                    "label column '{column}' has a single non-numeric value; set positive_label"
                )))
            }
        },
    };
    Ok(raw.iter().map(|r| u8::from(*r == positive)).collect())
}
