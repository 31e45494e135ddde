use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Per-input z-scoring statistics. Hashed inputs carry mean 0 and stdev 1,
/// so they pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

impl Standardizer {
    /// Population statistics of the numeric columns of `train`. A zero
    /// stdev is replaced by 1 so the column passes through centered.
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptySubset("cannot standardize with an empty training set".into()));
        }
        let m = train.dim();
        let n = train.len() as f64;
        let mut mean = vec![0.0; m];
        let mut stdev = vec![1.0; m];
        for c in train.schema().numeric_offsets() {
            let col = train.x().column(c).to_owned();
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean[c] = mu;
            stdev[c] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        Ok(Standardizer { mean, stdev })
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if d.dim() != self.mean.len() {
            return Err(Error::Dimension {
                expected: self.mean.len(),
                got: d.dim(),
            });
        }
        let mut x = d.x().to_owned();
        for c in d.schema().numeric_offsets() {
            let (mu, sd) = (self.mean[c], self.stdev[c]);
            x.column_mut(c).mapv_inplace(|v| (v - mu) / sd);
        }
        Ok(d.with_features(x))
    }
}

/// Standardizes `train` and every dataset in `others` with statistics from
/// `train` alone. The returned list starts with the transformed `train`.
pub fn standardize(train: &Dataset, others: &[&Dataset]) -> Result<(Vec<Dataset>, Vec<f64>, Vec<f64>)> {
    let st = Standardizer::fit(train)?;
    let mut out = vec![st.apply(train)?];
    for d in others {
        out.push(st.apply(d)?);
    }
    Ok((out, st.mean, st.stdev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_csv_str, Column, ColumnKind, Schema};

    fn schema() -> Schema {
        Schema::new(
            vec![
                Column { name: "a".into(), kind: ColumnKind::Numeric },
                Column { name: "k".into(), kind: ColumnKind::Numeric },
                Column { name: "c".into(), kind: ColumnKind::Categorical },
                Column { name: "y".into(), kind: ColumnKind::Label },
                Column { name: "s".into(), kind: ColumnKind::Sensitive },
            ],
            2,
        )
        .unwrap()
    }

    #[test]
    fn two_point_column_and_constant_column() {
        let train = load_csv_str("a,k,c,y,s\n0,5,u,0,g\n2,5,v,1,h\n", &schema()).unwrap();
        let test = load_csv_str("a,k,c,y,s\n4,7,u,1,g\n", &schema()).unwrap();
        let (out, mean, sd) = standardize(&train, &[&test]).unwrap();
        assert_eq!(mean[0], 1.0);
        assert_eq!(sd[0], 1.0);
        assert_eq!(out[0].x().column(0).to_vec(), vec![-1.0, 1.0]);
        assert_eq!(out[0].x().column(1).to_vec(), vec![0.0, 0.0]);
        // test row uses train statistics: (4 - 1) / 1 and (7 - 5) / 1
        assert_eq!(out[1].x().row(0)[0], 3.0);
        assert_eq!(out[1].x().row(0)[1], 2.0);
        // hashed block untouched
        assert_eq!(out[0].x().slice(ndarray::s![.., 2..]), train.x().slice(ndarray::s![.., 2..]));
    }

    #[test]
    fn population_stdev() {
        let train = load_csv_str("a,k,c,y,s\n1,0,u,0,g\n2,0,u,0,g\n3,0,u,1,g\n4,0,u,1,h\n", &schema()).unwrap();
        let st = Standardizer::fit(&train).unwrap();
        assert!((st.stdev[0] - 1.25f64.sqrt()).abs() < 1e-15);
        let again = st.apply(&train).unwrap();
        assert_eq!(again, st.apply(&train).unwrap());
    }
}
