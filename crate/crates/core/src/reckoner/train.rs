use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::config::{PseudoCadence, PseudoLabelKind, TrainConfig};
use super::sampler::BatchSampler;
use crate::confidence::{split_by_confidence, ConfidenceSplit};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{accuracy, default_group_pair, demographic_parity, equalized_odds};
use crate::models::{
    blend, gradient, label_of, lr_fit, mean_bce, predict_proba, AdamState, Classifier,
    FeedForwardClassifier, ModelParams, NoiseWrapper,
};
use crate::parallel::Execution;
use crate::rng;
use crate::sigfig;

/// Outcome of one pseudo-learning cycle on a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLearnState {
    pub low_snapshot: ModelParams,
    /// 1-based step with the lowest batch-mean pseudo-label loss; later
    /// steps win ties.
    pub k: usize,
    pub best_low: ModelParams,
    /// Loss after each step.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Mean BCE of the High-Conf classifier on the batch, before its update.
    pub loss: f64,
    pub pseudo: Option<PseudoLearnState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Init,
    Refine,
}

/// State visible after each High-Conf optimizer step.
#[derive(Debug, Clone, Copy)]
pub struct StepEvent<'a> {
    /// 1-based count of High-Conf steps so far.
    pub step: usize,
    pub phase: Phase,
    pub loss: f64,
    pub k: Option<usize>,
    pub model: &'a ReckonerModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    #[serde(serialize_with = "sigfig::serde_f64::serialize")]
    pub train_loss: f64,
    #[serde(serialize_with = "sigfig::serde_opt_f64::serialize")]
    pub valid_accuracy: Option<f64>,
    #[serde(serialize_with = "sigfig::serde_opt_f64::serialize")]
    pub valid_dp: Option<f64>,
    #[serde(serialize_with = "sigfig::serde_opt_f64::serialize")]
    pub valid_eodds: Option<f64>,
    /// Entry `j` counts cycles whose best step was `j + 1`.
    pub k_histogram: Vec<usize>,
}

/// High-Conf and Low-Conf classifiers, the noise wrapper, and their
/// optimizer state.
#[derive(Debug, Clone)]
pub struct ReckonerModel {
    config: TrainConfig,
    high: FeedForwardClassifier,
    low: FeedForwardClassifier,
    low_snapshot: ModelParams,
    noise: NoiseWrapper,
    high_adam: AdamState,
    noise_adam: AdamState,
    low_adam: AdamState,
    high_steps: usize,
    split_sizes: Option<(usize, usize)>,
    history: Vec<EpochLog>,
}

fn batch(d: &Dataset, rows: &[usize]) -> (Array2<f64>, Vec<f64>) {
    let x = d.x().select(Axis(0), rows);
    let y = rows.iter().map(|&i| f64::from(d.labels()[i])).collect();
    (x, y)
}

fn supervised_step(
    model: &mut FeedForwardClassifier,
    adam: &mut AdamState,
    x: ArrayView2<'_, f64>,
    targets: &[f64],
) -> Result<f64> {
    let g = gradient(model, x, targets, Execution::default())?;
    adam.step(model.params_mut(), &g.params)?;
    Ok(g.loss)
}

/// 1-based index of the smallest loss; later steps win ties.
pub fn best_step(losses: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l <= losses[best] {
            best = i;
        }
    }
    best + 1
}

/// Blends the current High-Conf weights with the best Low-Conf weights.
pub fn knowledge_share(high: &ModelParams, best_low: &ModelParams, alpha: f64) -> Result<ModelParams> {
    blend(high, best_low, alpha)
}

/// High-Conf labels and scores, with the noise wrapper applied when given.
pub fn predict_high(
    high: &FeedForwardClassifier,
    noise: Option<&NoiseWrapper>,
    x: ArrayView2<'_, f64>,
) -> Result<(Vec<u8>, Vec<f64>)> {
    let scores = match noise {
        Some(w) => predict_proba(high, w.apply_batch(x)?.view(), Execution::default())?,
        None => predict_proba(high, x, Execution::default())?,
    };
    Ok((scores.iter().map(|&p| label_of(p)).collect(), scores))
}

impl ReckonerModel {
    /// Fresh, untrained models for inputs of width `m`. High-Conf and
    /// Low-Conf start from the same weights.
    pub fn untrained(m: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let high = FeedForwardClassifier::new(
            m,
            config.hidden1,
            config.hidden2,
            &mut rng::stream(config.seed, rng::STREAM_WEIGHTS),
        );
        let noise = NoiseWrapper::new(
            m,
            config.noise_hidden.unwrap_or(m),
            &mut rng::stream(config.seed, rng::STREAM_NOISE),
        );
        let adam = config.adam();
        Ok(ReckonerModel {
            high_adam: AdamState::new(high.params().len(), adam),
            low_adam: AdamState::new(high.params().len(), adam),
            noise_adam: AdamState::new(noise.params().len(), adam),
            low_snapshot: high.params().snapshot(),
            low: high.clone(),
            high,
            noise,
            high_steps: 0,
            split_sizes: None,
            history: Vec::new(),
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn high(&self) -> &FeedForwardClassifier {
        &self.high
    }

    pub fn low(&self) -> &FeedForwardClassifier {
        &self.low
    }

    pub fn low_snapshot(&self) -> &ModelParams {
        &self.low_snapshot
    }

    pub fn noise(&self) -> &NoiseWrapper {
        &self.noise
    }

    pub fn low_optimizer_is_reset(&self) -> bool {
        self.low_adam.is_reset()
    }

    /// Optimizer steps taken on the High-Conf classifier.
    pub fn high_steps(&self) -> usize {
        self.high_steps
    }

    /// Sizes of the (low, high) confidence subsets used for initialization.
    pub fn split_sizes(&self) -> Option<(usize, usize)> {
        self.split_sizes
    }

    pub fn history(&self) -> &[EpochLog] {
        &self.history
    }

    fn active_noise(&self) -> Option<&NoiseWrapper> {
        self.config.use_noise.then_some(&self.noise)
    }

    fn high_input(&self, x: ArrayView2<'_, f64>) -> Result<Option<Array2<f64>>> {
        self.active_noise().map(|w| w.apply_batch(x)).transpose()
    }

    /// Trains Low-Conf from its snapshot on High-Conf pseudo-labels for the
    /// batch. Ground-truth labels are not an input.
    pub fn pseudo_learning_cycle(&mut self, x: ArrayView2<'_, f64>) -> Result<PseudoLearnState> {
        let exec = Execution::default();
        let noised = self.high_input(x)?;
        let high_x = noised.as_ref().map_or(x, |a| a.view());
        let probs = predict_proba(&self.high, high_x, exec)?;
        let targets: Vec<f64> = match self.config.pseudo_label_kind {
            PseudoLabelKind::Hard => probs.iter().map(|&p| f64::from(label_of(p))).collect(),
            PseudoLabelKind::Soft => probs,
        };
        let low_x = if self.config.low_conf_sees_noise { high_x } else { x };
        self.low.params_mut().restore(&self.low_snapshot)?;
        self.low_adam.reset();
        let mut losses = Vec::with_capacity(self.config.pseudo_iters);
        let mut steps = Vec::with_capacity(self.config.pseudo_iters);
        for _ in 0..self.config.pseudo_iters {
            supervised_step(&mut self.low, &mut self.low_adam, low_x, &targets)?;
            let loss = mean_bce(&predict_proba(&self.low, low_x, exec)?, &targets);
            if !loss.is_finite() {
                return Err(Error::NonFinite("pseudo-learning loss".into()));
            }
            losses.push(loss);
            steps.push(self.low.params().snapshot());
        }
        let k = best_step(&losses);
        Ok(PseudoLearnState {
            low_snapshot: self.low_snapshot.clone(),
            k,
            best_low: steps.swap_remove(k - 1),
            losses,
        })
    }

    /// One refinement update: pseudo-learning and blending (when enabled),
    /// a joint Adam step on the High-Conf weights and the noise wrapper,
    /// then rollback of the Low-Conf classifier.
    pub fn refinement_step(&mut self, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<StepOutcome> {
        self.refine(x, y, None)
    }

    fn refine(&mut self, x: ArrayView2<'_, f64>, y: &[u8], reuse: Option<&ModelParams>) -> Result<StepOutcome> {
        if y.len() != x.nrows() {
            return Err(Error::Length(format!("{} rows but {} labels", x.nrows(), y.len())));
        }
        let mut pseudo = None;
        if self.config.use_pseudo_learning {
            let shared = match reuse {
                Some(p) => knowledge_share(self.high.params(), p, self.config.alpha)?,
                None => {
                    let state = self.pseudo_learning_cycle(x)?;
                    let shared = knowledge_share(self.high.params(), &state.best_low, self.config.alpha)?;
                    pseudo = Some(state);
                    shared
                }
            };
            self.high.params_mut().restore(&shared)?;
        }
        let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let noised = self.high_input(x)?;
        let high_x = noised.as_ref().map_or(x, |a| a.view());
        let g = gradient(&self.high, high_x, &targets, Execution::default())?;
        if self.config.use_noise {
            let g_noise = self.noise.backward(&g.input)?;
            self.noise_adam.step(self.noise.params_mut(), &g_noise)?;
        }
        self.high_adam.step(self.high.params_mut(), &g.params)?;
        self.high_steps += 1;
        self.low.params_mut().restore(&self.low_snapshot)?;
        self.low_adam.reset();
        Ok(StepOutcome { loss: g.loss, pseudo })
    }

    /// Labels and scores from the High-Conf classifier alone.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<(Vec<u8>, Vec<f64>)> {
        predict_high(&self.high, self.active_noise(), x)
    }
}

/// A run in progress: the models plus the refinement batch stream.
pub struct Trainer<'a> {
    train: &'a Dataset,
    model: ReckonerModel,
    sampler: BatchSampler,
    cached_low: Option<ModelParams>,
    split: Option<ConfidenceSplit>,
}

impl<'a> Trainer<'a> {
    pub fn initialize(train: &'a Dataset, cfg: &TrainConfig) -> Result<Self> {
        Self::initialize_observed(train, cfg, &mut |_| {})
    }

    /// Identification stage plus initialization of both classifiers on
    /// their confidence subsets (or on the whole set when configured).
    pub fn initialize_observed(
        train: &'a Dataset,
        cfg: &TrainConfig,
        observer: &mut dyn FnMut(&StepEvent<'_>),
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptySubset("training set is empty".into()));
        }
        let mut model = ReckonerModel::untrained(train.dim(), cfg)?;
        let all: Vec<usize> = (0..train.len()).collect();
        let mut refine = BatchSampler::new(all.clone(), cfg.batch_size, rng::stream(cfg.seed, rng::STREAM_BATCHES));
        let (split, high_pool, low_pool) = if cfg.init_on_full_set {
            (None, None, all)
        } else {
            let lr = lr_fit(train, &cfg.lr)?;
            let split = split_by_confidence(train, &lr, cfg.confidence_threshold)?;
            if split.low_is_empty() || split.high_is_empty() {
                return Err(Error::EmptySubset(format!(
                    "confidence threshold {} leaves {} low- and {} high-confidence rows; \
                     pick a threshold that yields both subsets",
                    cfg.confidence_threshold,
                    split.low.len(),
                    split.high.len()
                )));
            }
            model.split_sizes = Some((split.low.len(), split.high.len()));
            log::info!(
                "confidence split: {} low, {} high at threshold {}",
                split.low.len(),
                split.high.len(),
                cfg.confidence_threshold
            );
            let (high, low) = (split.high.clone(), split.low.clone());
            (Some(split), Some(high), low)
        };
        let init = cfg.init_steps();
        let mut high_sampler = high_pool
            .map(|p| BatchSampler::new(p, cfg.batch_size, rng::stream(cfg.seed, rng::STREAM_HIGH_INIT)));
        for _ in 0..init {
            let b = match high_sampler.as_mut() {
                Some(s) => s.next_batch(),
                None => refine.next_batch(),
            };
            let (x, y) = batch(train, &b.rows);
            let loss = supervised_step(&mut model.high, &mut model.high_adam, x.view(), &y)?;
            model.high_steps += 1;
            observer(&StepEvent {
                step: model.high_steps,
                phase: Phase::Init,
                loss,
                k: None,
                model: &model,
            });
        }
        let mut low_sampler = BatchSampler::new(low_pool, cfg.batch_size, rng::stream(cfg.seed, rng::STREAM_LOW_INIT));
        for _ in 0..init {
            let (x, y) = batch(train, &low_sampler.next_batch().rows);
            supervised_step(&mut model.low, &mut model.low_adam, x.view(), &y)?;
        }
        model.low_snapshot = model.low.params().snapshot();
        model.low_adam.reset();
        Ok(Trainer {
            train,
            model,
            sampler: refine,
            cached_low: None,
            split,
        })
    }

    pub fn model(&self) -> &ReckonerModel {
        &self.model
    }

    pub fn split(&self) -> Option<&ConfidenceSplit> {
        self.split.as_ref()
    }

    pub fn into_model(self) -> ReckonerModel {
        self.model
    }

    /// Draws the next batch and runs one refinement step on it. Returns the
    /// outcome and whether the batch closed a pass over the training set.
    pub fn step(&mut self) -> Result<(StepOutcome, bool)> {
        let cfg = &self.model.config;
        let per_epoch = cfg.use_pseudo_learning && cfg.pseudo_cadence == PseudoCadence::PerEpoch;
        if per_epoch && self.sampler.at_epoch_start() {
            self.cached_low = None;
        }
        let b = self.sampler.next_batch();
        let (x, y) = batch(self.train, &b.rows);
        let labels: Vec<u8> = y.iter().map(|&v| v as u8).collect();
        let out = self.model.refine(x.view(), &labels, self.cached_low.as_ref())?;
        if per_epoch {
            if let Some(p) = &out.pseudo {
                self.cached_low = Some(p.best_low.clone());
            }
        }
        Ok((out, b.epoch_end))
    }

    /// Runs every remaining refinement step, logging validation metrics at
    /// the end of each pass and after the final step.
    pub fn run(mut self, valid: &Dataset, observer: &mut dyn FnMut(&StepEvent<'_>)) -> Result<ReckonerModel> {
        let pseudo_iters = self.model.config.pseudo_iters;
        let steps = self.model.config.refinement_steps();
        let mut losses = Vec::new();
        let mut hist = vec![0usize; pseudo_iters];
        for s in 0..steps {
            let (out, epoch_end) = self.step()?;
            let k = out.pseudo.as_ref().map(|p| p.k);
            if let Some(k) = k {
                hist[k - 1] += 1;
            }
            losses.push(out.loss);
            observer(&StepEvent {
                step: self.model.high_steps,
                phase: Phase::Refine,
                loss: out.loss,
                k,
                model: &self.model,
            });
            if epoch_end || s + 1 == steps {
                let epoch = self.sampler.epochs() + usize::from(!epoch_end);
                let entry = evaluate(&self.model, valid, epoch, &losses, std::mem::replace(&mut hist, vec![0; pseudo_iters]))?;
                log::debug!("epoch {epoch}: train loss {:.6}", entry.train_loss);
                self.model.history.push(entry);
                losses.clear();
            }
        }
        Ok(self.model)
    }
}

fn evaluate(model: &ReckonerModel, valid: &Dataset, epoch: usize, losses: &[f64], k_histogram: Vec<usize>) -> Result<EpochLog> {
    let train_loss = losses.iter().sum::<f64>() / losses.len() as f64;
    let (mut valid_accuracy, mut valid_dp, mut valid_eodds) = (None, None, None);
    if !valid.is_empty() {
        let (preds, _) = model.predict(valid.x())?;
        valid_accuracy = Some(accuracy(&preds, valid.labels())?);
        if let Ok((a, b)) = default_group_pair(valid.groups()) {
            valid_dp = demographic_parity(&preds, valid.groups(), a, b).ok();
            valid_eodds = equalized_odds(&preds, valid.labels(), valid.groups(), a, b).ok();
        }
    }
    Ok(EpochLog {
        epoch,
        train_loss,
        valid_accuracy,
        valid_dp,
        valid_eodds,
        k_histogram,
    })
}

/// Identification and initialization only.
pub fn initialize(train: &Dataset, cfg: &TrainConfig) -> Result<ReckonerModel> {
    Trainer::initialize(train, cfg).map(Trainer::into_model)
}

pub fn train(train: &Dataset, valid: &Dataset, cfg: &TrainConfig) -> Result<ReckonerModel> {
    train_observed(train, valid, cfg, &mut |_| {})
}

/// As [`train`], calling `observer` after every High-Conf optimizer step.
pub fn train_observed(
    train: &Dataset,
    valid: &Dataset,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<ReckonerModel> {
    Trainer::initialize_observed(train, cfg, observer)?.run(valid, observer)
}
