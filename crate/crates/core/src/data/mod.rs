//! Tabular datasets with a sensitive column that is carried for evaluation
//! but never encoded into the model input.

mod hashing;
mod load;
mod schema;
mod split;
mod standardize;
mod synth;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

pub use hashing::{fnv1a64, hash_feature};
pub use load::{load_csv, load_csv_str};
pub use schema::{Column, ColumnKind, FeatureSlot, Schema};
pub use split::{split_dataset, SplitSpec};
pub use standardize::{standardize, Standardizer};
pub use synth::{synth_biased, FlipMode, SynthConfig, SynthData};

use crate::error::{Error, Result};

/// Immutable encoded dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Vec<u8>,
    s: Vec<u32>,
    group_names: Vec<String>,
    schema: Schema,
}

impl Dataset {
    pub fn new(
        x: Array2<f64>,
        y: Vec<u8>,
        s: Vec<u32>,
        group_names: Vec<String>,
        schema: Schema,
    ) -> Result<Self> {
        let n = x.nrows();
        if y.len() != n || s.len() != n {
            return Err(Error::Length(format!(
                "x has {n} rows, y {} and s {}",
                y.len(),
                s.len()
            )));
        }
        if x.ncols() != schema.input_dim() {
            return Err(Error::Dimension {
                expected: schema.input_dim(),
                got: x.ncols(),
            });
        }
        if y.iter().any(|&v| v > 1) {
            return Err(Error::Invalid("labels must be 0 or 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature value".into()));
        }
        if let Some(&g) = s.iter().find(|&&g| g as usize >= group_names.len()) {
            return Err(Error::Invalid(format!("group id {g} has no name")));
        }
        Ok(Dataset {
            x,
            y,
            s,
            group_names,
            schema,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    pub fn groups(&self) -> &[u32] {
        &self.s
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            s: indices.iter().map(|&i| self.s[i]).collect(),
            group_names: self.group_names.clone(),
            schema: self.schema.clone(),
        }
    }

    pub(crate) fn with_features(&self, x: Array2<f64>) -> Dataset {
        debug_assert_eq!(x.dim(), self.x.dim());
        Dataset {
            x,
            ..self.clone()
        }
    }

    pub fn distinct_groups(&self) -> usize {
        let mut seen = vec![false; self.group_names.len()];
        self.s.iter().for_each(|&g| seen[g as usize] = true);
        seen.into_iter().filter(|&b| b).count()
    }
}
