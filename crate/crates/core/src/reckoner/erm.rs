use ndarray::Axis;

use super::config::TrainConfig;
use super::sampler::BatchSampler;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{gradient, AdamState, Classifier, FeedForwardClassifier, ModelParams};
use crate::parallel::Execution;
use crate::rng;

/// Plain supervised training of the High-Conf architecture on raw inputs,
/// with the same weight, batch and step budget as a Reckoner run.
pub fn erm_baseline(train: &Dataset, cfg: &TrainConfig) -> Result<FeedForwardClassifier> {
    erm_observed(train, cfg, &mut |_, _| {})
}

/// As [`erm_baseline`], calling `observer(step, params)` after every step.
pub fn erm_observed(
    train: &Dataset,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(usize, &ModelParams),
) -> Result<FeedForwardClassifier> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::EmptySubset("training set is empty".into()));
    }
    let mut model = FeedForwardClassifier::new(
        train.dim(),
        cfg.hidden1,
        cfg.hidden2,
        &mut rng::stream(cfg.seed, rng::STREAM_WEIGHTS),
    );
    let mut adam = AdamState::new(model.params().len(), cfg.adam());
    let mut sampler = BatchSampler::new(
        (0..train.len()).collect(),
        cfg.batch_size,
        rng::stream(cfg.seed, rng::STREAM_BATCHES),
    );
    for step in 1..=cfg.total_iterations {
        let rows = sampler.next_batch().rows;
        let x = train.x().select(Axis(0), &rows);
        let y: Vec<f64> = rows.iter().map(|&i| f64::from(train.labels()[i])).collect();
        let g = gradient(&model, x.view(), &y, Execution::default())?;
        adam.step(model.params_mut(), &g.params)?;
        observer(step, model.params());
    }
    Ok(model)
}
