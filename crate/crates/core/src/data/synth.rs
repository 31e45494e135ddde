use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Schema};
use crate::error::{Error, Result};
use crate::rng;

/// Which clean labels a group-dependent flip may corrupt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipMode {
    /// Any label flips with the group's rate.
    #[default]
    Symmetric,
    /// Only clean negatives flip (to 1).
    ToPositive,
    /// Only clean positives flip (to 0).
    ToNegative,
}

/// Generator settings for labelled data whose observed labels are corrupted
/// at a group-dependent rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub m_numeric: usize,
    /// Probability that a row belongs to group 1.
    pub group_balance: f64,
    pub flip_rate_g0: f64,
    pub flip_rate_g1: f64,
    /// Scale of the latent logit; larger means cleaner separation.
    pub signal_strength: f64,
    pub seed: u64,
    /// Shift added to the first feature for group-1 rows, making it a proxy
    /// for the withheld group.
    #[serde(default = "default_proxy_shift")]
    pub proxy_shift: f64,
    /// Standard deviation of the measurement noise on latent-driven columns.
    #[serde(default = "default_feature_noise")]
    pub feature_noise: f64,
    #[serde(default)]
    pub flip_mode: FlipMode,
}

fn default_proxy_shift() -> f64 {
    1.0
}

fn default_feature_noise() -> f64 {
    0.5
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 1000,
            m_numeric: 6,
            group_balance: 0.5,
            flip_rate_g0: 0.0,
            flip_rate_g1: 0.3,
            signal_strength: 3.0,
            seed: 0,
            proxy_shift: default_proxy_shift(),
            feature_noise: default_feature_noise(),
            flip_mode: FlipMode::Symmetric,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [self.group_balance, self.flip_rate_g0, self.flip_rate_g1];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("synth probabilities must lie in [0, 1]".into()));
        }
        if self.n == 0 || self.m_numeric == 0 {
            return Err(Error::Config("synth needs n >= 1 and m_numeric >= 1".into()));
        }
        if !(self.signal_strength > 0.0) || !self.signal_strength.is_finite() {
            return Err(Error::Config("signal_strength must be positive".into()));
        }
        if !self.proxy_shift.is_finite() || !(self.feature_noise >= 0.0) {
            return Err(Error::Config("proxy_shift must be finite and feature_noise >= 0".into()));
        }
        Ok(())
    }

    /// Number of leading columns driven by the latent variable; the rest are
    /// pure noise.
    pub fn informative(&self) -> usize {
        (self.m_numeric.div_ceil(2)).max(1)
    }
}

/// A generated dataset plus the labels it would have had without flips.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub data: Dataset,
    pub clean_labels: Vec<u8>,
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

pub fn synth_biased(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, rng::STREAM_SYNTH);
    let (n, m) = (cfg.n, cfg.m_numeric);
    let informative = cfg.informative();
    let mut x = Array2::zeros((n, m));
    let mut y = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        // Fixed draw count per row keeps rows independent of earlier outcomes.
        let g = u32::from(rng.random::<f64>() < cfg.group_balance);
        let z: f64 = rng.sample(StandardNormal);
        for j in 0..m {
            let e: f64 = rng.sample(StandardNormal);
            x[[i, j]] = if j < informative {
                z + cfg.feature_noise * e
            } else {
                e
            };
        }
        x[[i, 0]] += cfg.proxy_shift * f64::from(g);
        let u_label: f64 = rng.random();
        let u_flip: f64 = rng.random();
        let c = u8::from(u_label < sigmoid(cfg.signal_strength * z));
        let rate = if g == 1 { cfg.flip_rate_g1 } else { cfg.flip_rate_g0 };
        let eligible = match cfg.flip_mode {
            FlipMode::Symmetric => true,
            FlipMode::ToPositive => c == 0,
            FlipMode::ToNegative => c == 1,
        };
        let observed = if eligible && u_flip < rate { 1 - c } else { c };
        s.push(g);
        clean.push(c);
        y.push(observed);
    }
    let data = Dataset::new(
        x,
        y,
        s,
        vec!["g0".to_string(), "g1".to_string()],
        Schema::numeric(m),
    )?;
    Ok(SynthData {
        data,
        clean_labels: clean,
    })
}
