use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::loss::{bce, sigmoid};
use super::params::{Layout, ModelParams, Segment};
use super::{gradient, ChunkGrad, Classifier};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::parallel::Execution;

/// Logistic regression: `sigmoid(w·x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    params: ModelParams,
}

impl LinearClassifier {
    pub fn layout(m: usize) -> Layout {
        Layout::new(vec![Segment::new("w", 1, m), Segment::new("b", 1, 1)])
    }

    pub fn zeros(m: usize) -> Self {
        LinearClassifier {
            params: ModelParams::zeros(Self::layout(m)),
        }
    }

    pub fn from_weights(weights: &[f64], bias: f64) -> Self {
        let mut values = weights.to_vec();
        values.push(bias);
        LinearClassifier {
            params: ModelParams::from_values(Self::layout(weights.len()), values)
                .expect("layout built from the same length"),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.params.as_slice()[..self.input_dim()]
    }

    pub fn bias(&self) -> f64 {
        self.params.as_slice()[self.input_dim()]
    }
}

impl Classifier for LinearClassifier {
    fn input_dim(&self) -> usize {
        self.params.len() - 1
    }

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let w = self.params.vector(0);
        let b = self.bias();
        x.dot(&w).iter().map(|&z| sigmoid(z + b)).collect()
    }

    fn backward_sum(&self, x: ArrayView2<'_, f64>, targets: &[f64]) -> ChunkGrad {
        let probs = self.forward(x);
        let delta: Array1<f64> = probs.iter().zip(targets).map(|(p, t)| p - t).collect();
        let loss = probs.iter().zip(targets).map(|(&p, &t)| bce(p, t)).sum();
        let gw = x.t().dot(&delta);
        let dsum = delta.sum();
        let mut params = gw.to_vec();
        params.push(dsum);
        let input = self.weights().iter().map(|w| w * dsum).collect();
        ChunkGrad { loss, params, input }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            epochs: 300,
            learning_rate: 0.5,
        }
    }
}

/// Full-batch gradient descent on mean BCE from zero weights. Deterministic;
/// no randomness is involved.
pub fn lr_fit(train: &Dataset, cfg: &LrConfig) -> Result<LinearClassifier> {
    lr_fit_traced(train, cfg, |_, _| {})
}

/// As [`lr_fit`], calling `on_epoch(epoch, loss_before_update)` every epoch.
pub fn lr_fit_traced(
    train: &Dataset,
    cfg: &LrConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<LinearClassifier> {
    if train.is_empty() {
        return Err(Error::EmptySubset("logistic regression on an empty set".into()));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::Config("learning rate must be positive".into()));
    }
    let targets: Vec<f64> = train.labels().iter().map(|&y| f64::from(y)).collect();
    let mut model = LinearClassifier::zeros(train.dim());
    let exec = Execution::default();
    for epoch in 0..cfg.epochs {
        let g = gradient(&model, train.x(), &targets, exec)?;
        on_epoch(epoch, g.loss);
        for (p, d) in model.params.as_mut_slice().iter_mut().zip(&g.params) {
            *p -= cfg.learning_rate * d;
        }
        if !model.params.is_finite() {
            return Err(Error::NonFinite("logistic regression weights (learning rate too large?)".into()));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Schema;
    use crate::models::{label_of, mean_bce, predict_proba, score};
    use ndarray::Array2;

    fn one_d(xs: &[f64], ys: &[u8]) -> Dataset {
        let x = Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).unwrap();
        let g = (0..xs.len()).map(|i| (i % 2) as u32).collect();
        Dataset::new(x, ys.to_vec(), g, vec!["a".into(), "b".into()], Schema::numeric(1)).unwrap()
    }

    fn separable() -> Dataset {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..50 {
            xs.extend([-1.0, 1.0]);
            ys.extend([0, 1]);
        }
        one_d(&xs, &ys)
    }

    #[test]
    fn fits_separable_data() {
        let d = separable();
        let cfg = LrConfig { epochs: 500, learning_rate: 0.5 };
        let model = lr_fit(&d, &cfg).unwrap();
        let p = predict_proba(&model, d.x(), Execution::Sequential).unwrap();
        let hits = p.iter().zip(d.labels()).filter(|(p, y)| label_of(**p) == **y).count();
        assert!(hits as f64 / d.len() as f64 >= 0.99);
    }

    #[test]
    fn zero_epochs_scores_one_half() {
        let model = lr_fit(&separable(), &LrConfig { epochs: 0, learning_rate: 0.1 }).unwrap();
        assert_eq!(score(&model, &[3.0]).unwrap(), 0.5);
        assert_eq!(score(&LinearClassifier::zeros(4), &[1.0, -2.0, 3.0, 0.1]).unwrap(), 0.5);
    }

    #[test]
    fn first_epoch_reduces_loss() {
        let mut losses = Vec::new();
        lr_fit_traced(&separable(), &LrConfig { epochs: 2, learning_rate: 0.5 }, |_, l| losses.push(l)).unwrap();
        assert!(losses[1] < losses[0]);
    }

    #[test]
    fn hand_scored_weight() {
        let m = LinearClassifier::from_weights(&[1.0], 0.0);
        assert!((score(&m, &[0.5]).unwrap() - 0.62246).abs() < 1e-5);
        assert!(score(&m, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn gradient_vanishes_at_minimum() {
        // overlapping classes: a finite minimiser exists
        let d = one_d(&[-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, -0.2, 0.3], &[0, 0, 1, 0, 1, 1, 0, 1]);
        let cfg = LrConfig { epochs: 20_000, learning_rate: 1.0 };
        let model = lr_fit(&d, &cfg).unwrap();
        let t: Vec<f64> = d.labels().iter().map(|&y| y as f64).collect();
        let g = gradient(&model, d.x(), &t, Execution::Sequential).unwrap();
        let norm = g.params.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-6, "gradient norm {norm}");
        let p = predict_proba(&model, d.x(), Execution::Sequential).unwrap();
        assert!((g.loss - mean_bce(&p, &t)).abs() < 1e-15);
    }

    #[test]
    fn divergent_rate_is_reported() {
        let d = one_d(&[1e200, -1e200], &[1, 0]);
        assert!(lr_fit(&d, &LrConfig { epochs: 3, learning_rate: 1e200 }).is_err());
    }
}
