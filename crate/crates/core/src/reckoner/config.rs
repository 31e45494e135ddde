use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::{AdamConfig, LrConfig};

/// Form of the High-Conf pseudo-labels handed to the Low-Conf classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoLabelKind {
    /// 0/1 labels thresholded at 0.5.
    #[default]
    Hard,
    /// Raw High-Conf probabilities.
    Soft,
}

/// How often the Low-Conf classifier runs a pseudo-learning cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoCadence {
    #[default]
    PerBatch,
    /// One cycle on the first batch of each pass; its result is reused for
    /// the rest of the pass.
    PerEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Share of the High-Conf weights kept when blending in the Low-Conf
    /// classifier.
    pub alpha: f64,
    pub learning_rate: f64,
    /// Optimizer steps on the High-Conf classifier, initialization included.
    pub total_iterations: usize,
    /// Fraction of `total_iterations` spent initializing each classifier.
    pub init_fraction: f64,
    pub pseudo_iters: usize,
    pub confidence_threshold: f64,
    pub batch_size: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    /// Hidden width of the noise wrapper; the input width when unset.
    pub noise_hidden: Option<usize>,
    pub seed: u64,
    pub use_noise: bool,
    pub use_pseudo_learning: bool,
    pub low_conf_sees_noise: bool,
    pub pseudo_label_kind: PseudoLabelKind,
    pub pseudo_cadence: PseudoCadence,
    /// Skip the confidence split and initialize both classifiers on the
    /// whole training set.
    pub init_on_full_set: bool,
    pub lr: LrConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.9,
            learning_rate: 1e-3,
            total_iterations: 2000,
            init_fraction: 0.1,
            pseudo_iters: 3,
            confidence_threshold: 0.6,
            batch_size: 128,
            hidden1: 64,
            hidden2: 32,
            noise_hidden: None,
            seed: 0,
            use_noise: true,
            use_pseudo_learning: true,
            low_conf_sees_noise: false,
            pseudo_label_kind: PseudoLabelKind::Hard,
            pseudo_cadence: PseudoCadence::PerBatch,
            init_on_full_set: false,
            lr: LrConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.init_fraction > 0.0 && self.init_fraction < 1.0) {
            return bad("init_fraction must lie in (0, 1)");
        }
        if !(0.5..1.0).contains(&self.confidence_threshold) {
            return bad("confidence_threshold must lie in [0.5, 1)");
        }
        let counts = [
            self.total_iterations,
            self.pseudo_iters,
            self.batch_size,
            self.hidden1,
            self.hidden2,
            self.noise_hidden.unwrap_or(1),
        ];
        if counts.contains(&0) {
            return bad("iteration counts, batch size and hidden sizes must be positive");
        }
        if !(self.lr.learning_rate > 0.0) {
            return bad("lr.learning_rate must be positive");
        }
        Ok(())
    }

    /// Optimizer steps each classifier spends in initialization (at least one).
    pub fn init_steps(&self) -> usize {
        ((self.init_fraction * self.total_iterations as f64).round() as usize)
            .clamp(1, self.total_iterations)
    }

    pub fn refinement_steps(&self) -> usize {
        self.total_iterations - self.init_steps()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.learning_rate)
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
