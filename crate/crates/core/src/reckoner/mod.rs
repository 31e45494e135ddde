//! The refinement stage: pseudo-learning of a Low-Conf classifier on
//! High-Conf pseudo-labels, weight blending, the supervised High-Conf update
//! through learnable input noise, and rollback, plus an ERM baseline.

mod checkpoint;
mod config;
mod erm;
mod sampler;
mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use config::{PseudoCadence, PseudoLabelKind, TrainConfig};
pub use erm::{erm_baseline, erm_observed};
pub use sampler::{Batch, BatchSampler};
pub use train::{
    best_step, initialize, knowledge_share, predict_high, train, train_observed, EpochLog, Phase,
    PseudoLearnState, ReckonerModel, StepEvent, StepOutcome, Trainer,
};
