use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Label,
    Sensitive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column roles of a tabular file and the encoding of its feature columns.
///
/// Numeric columns occupy one input slot each; every categorical column
/// occupies a block of `hash_buckets` slots. Label and sensitive columns never
/// reach the model input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
    pub hash_buckets: usize,
    /// Raw label value mapped to 1. When absent the larger of the two values
    /// (numerically if both parse, else lexicographically) is positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_label: Option<String>,
    /// Replace empty numeric cells with the column mean instead of failing.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub impute_missing: bool,
}

/// Where a feature column lands in the encoded input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSlot {
    pub column: usize,
    pub offset: usize,
    pub width: usize,
    pub kind: ColumnKind,
}

impl Schema {
    pub fn new(columns: Vec<Column>, hash_buckets: usize) -> Result<Self> {
        let schema = Schema {
            columns,
            hash_buckets,
            positive_label: None,
            impute_missing: false,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: Schema =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let count = |k| self.columns.iter().filter(|c| c.kind == k).count();
        if count(ColumnKind::Label) != 1 {
            return Err(Error::Schema("exactly one label column required".into()));
        }
        if count(ColumnKind::Sensitive) != 1 {
            return Err(Error::Schema("exactly one sensitive column required".into()));
        }
        if self.hash_buckets < 2 || !self.hash_buckets.is_power_of_two() {
            return Err(Error::Schema(format!(
                "hash_buckets must be a power of two >= 2, got {}",
                self.hash_buckets
            )));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Schema(format!("duplicate column '{}'", c.name)));
            }
        }
        if self.input_dim() == 0 {
            return Err(Error::Schema("no feature columns".into()));
        }
        Ok(())
    }

    /// Encoded input dimensionality `m`.
    pub fn input_dim(&self) -> usize {
        self.feature_slots().iter().map(|s| s.width).sum()
    }

    pub fn feature_slots(&self) -> Vec<FeatureSlot> {
        let mut offset = 0;
        let mut slots = Vec::new();
        for (column, c) in self.columns.iter().enumerate() {
            let width = match c.kind {
                ColumnKind::Numeric => 1,
                ColumnKind::Categorical => self.hash_buckets,
                ColumnKind::Label | ColumnKind::Sensitive => continue,
            };
            slots.push(FeatureSlot {
                column,
                offset,
                width,
                kind: c.kind,
            });
            offset += width;
        }
        slots
    }

    /// Input offsets of numeric columns.
    pub fn numeric_offsets(&self) -> Vec<usize> {
        self.feature_slots()
            .into_iter()
            .filter(|s| s.kind == ColumnKind::Numeric)
            .map(|s| s.offset)
            .collect()
    }

    /// Input offset of a numeric column looked up by name.
    pub fn numeric_offset(&self, name: &str) -> Result<usize> {
        self.feature_slots()
            .into_iter()
            .find(|s| self.columns[s.column].name == name)
            .filter(|s| s.kind == ColumnKind::Numeric)
            .map(|s| s.offset)
            .ok_or_else(|| Error::Invalid(format!("'{name}' is not a numeric feature column")))
    }

    pub fn label_column(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("validated schema has a label column")
    }

    pub fn sensitive_column(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Sensitive)
            .expect("validated schema has a sensitive column")
    }

    /// Schema with `m` numeric features named `x0..`, then `label`, then `group`.
    pub fn numeric(m: usize) -> Self {
        let mut columns: Vec<Column> = (0..m)
            .map(|i| Column {
                name: format!("x{i}"),
                kind: ColumnKind::Numeric,
            })
            .collect();
        columns.push(Column {
            name: "label".into(),
            kind: ColumnKind::Label,
        });
        columns.push(Column {
            name: "group".into(),
            kind: ColumnKind::Sensitive,
        });
        Schema {
            columns,
            hash_buckets: 2,
            positive_label: None,
            impute_missing: false,
        }
    }
}
