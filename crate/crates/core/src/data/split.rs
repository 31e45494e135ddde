use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            valid_fraction: 0.1,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train_fraction, self.valid_fraction, self.test_fraction];
        if f.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::Config("split fractions must lie in (0, 1)".into()));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must sum to 1".into()));
        }
        Ok(())
    }

    /// Row index sets (train, valid, test) for a dataset of `n` rows.
    pub fn partition(&self, n: usize) -> Result<[Vec<usize>; 3]> {
        self.validate()?;
        let n_train = (n as f64 * self.train_fraction).round() as usize;
        let n_valid = (n as f64 * self.valid_fraction).round() as usize;
        if n < 3 || n_train == 0 || n_valid == 0 || n_train + n_valid >= n {
            return Err(Error::EmptySubset(format!("split of {n} rows leaves a part empty")));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng::stream(self.seed, rng::STREAM_SPLIT));
        let test = idx.split_off(n_train + n_valid);
        let valid = idx.split_off(n_train);
        Ok([idx, valid, test])
    }
}

pub fn split_dataset(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    let [a, b, c] = spec.partition(d.len())?;
    Ok((d.select(&a), d.select(&b), d.select(&c)))
}
