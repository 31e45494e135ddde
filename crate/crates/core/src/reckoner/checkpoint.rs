use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::train::{predict_high, ReckonerModel};
use crate::data::{Dataset, Schema, Standardizer};
use crate::error::{Error, Result};
use crate::models::{Classifier, FeedForwardClassifier, ModelParams, NoiseWrapper};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to score new data with a trained High-Conf classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub config_hash: String,
    pub seed: u64,
    pub schema: Schema,
    pub standardizer: Option<Standardizer>,
    pub high: ModelParams,
    /// Present when the noise wrapper is part of the prediction path.
    pub noise: Option<NoiseWrapper>,
}

impl Checkpoint {
    pub fn from_model(model: &ReckonerModel, schema: &Schema, standardizer: Option<&Standardizer>) -> Self {
        let config = model.config().clone();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config_hash: config.config_hash(),
            seed: config.seed,
            noise: config.use_noise.then(|| model.noise().clone()),
            config,
            schema: schema.clone(),
            standardizer: standardizer.cloned(),
            high: model.high().params().clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("unsupported checkpoint version {}", c.version)));
        }
        if c.config.config_hash() != c.config_hash {
            return Err(Error::Config("checkpoint config hash does not match its config".into()));
        }
        c.classifier()?;
        if let Some(w) = &c.noise {
            NoiseWrapper::from_parts(w.eta().to_vec(), w.params().clone())?;
        }
        Ok(c)
    }

    pub fn classifier(&self) -> Result<FeedForwardClassifier> {
        FeedForwardClassifier::from_params(self.high.clone()).ok_or(Error::Layout)
    }

    /// Scores already-encoded, already-standardized features.
    pub fn predict(&self, x: ndarray::ArrayView2<'_, f64>) -> Result<(Vec<u8>, Vec<f64>)> {
        predict_high(&self.classifier()?, self.noise.as_ref(), x)
    }

    /// Standardizes `d` with the stored statistics, then scores it.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<(Vec<u8>, Vec<f64>)> {
        match &self.standardizer {
            Some(s) => self.predict(s.apply(d)?.x()),
            None => self.predict(d.x()),
        }
    }
}
