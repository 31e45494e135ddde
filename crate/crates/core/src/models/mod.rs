//! Trainable components with hand-derived gradients: logistic regression,
//! a three-layer feedforward classifier, and the two-layer input-noise
//! wrapper, plus binary cross-entropy and Adam.

mod adam;
mod linear;
pub mod loss;
mod mlp;
mod noise;
mod params;

use ndarray::{Array2, ArrayView2};

pub use adam::{AdamConfig, AdamState};
pub use linear::{lr_fit, LinearClassifier, LrConfig};
pub use loss::{bce, mean_bce, sigmoid};
pub use mlp::FeedForwardClassifier;
pub use noise::{NoiseWrapper, NOISE_LIMIT};
pub use params::{blend, Layout, ModelParams, Segment};

use crate::error::{Error, Result};
use crate::parallel::{map_chunks, Execution, CHUNK_ROWS};

/// Summed (not averaged) loss and gradients over a block of rows.
#[derive(Debug, Clone)]
pub struct ChunkGrad {
    pub loss: f64,
    pub params: Vec<f64>,
    /// Sum over rows of dLoss/dInput.
    pub input: Vec<f64>,
}

/// Mean BCE over a batch with its gradient.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub loss: f64,
    pub params: Vec<f64>,
    /// Batch-mean gradient with respect to a perturbation shared by every row.
    pub input: Vec<f64>,
}

/// A binary classifier whose output is a sigmoid probability.
pub trait Classifier: Sync {
    fn input_dim(&self) -> usize;
    fn params(&self) -> &ModelParams;
    fn params_mut(&mut self) -> &mut ModelParams;
    /// Probabilities for each row of `x`.
    fn forward(&self, x: ArrayView2<'_, f64>) -> Vec<f64>;
    /// BCE summed over the rows of `x` and its exact gradient.
    fn backward_sum(&self, x: ArrayView2<'_, f64>, targets: &[f64]) -> ChunkGrad;
}

fn check_input(dim: usize, x: &ArrayView2<'_, f64>) -> Result<()> {
    if x.ncols() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x.ncols(),
        });
    }
    Ok(())
}

pub fn predict_proba<C: Classifier + ?Sized>(
    model: &C,
    x: ArrayView2<'_, f64>,
    exec: Execution,
) -> Result<Vec<f64>> {
    check_input(model.input_dim(), &x)?;
    let parts = map_chunks(x.nrows(), CHUNK_ROWS, exec, |r| {
        model.forward(x.slice(ndarray::s![r, ..]))
    });
    Ok(parts.concat())
}

/// Probability for a single input vector.
pub fn score<C: Classifier + ?Sized>(model: &C, x: &[f64]) -> Result<f64> {
    let row = ArrayView2::from_shape((1, x.len()), x).expect("one row");
    check_input(model.input_dim(), &row)?;
    Ok(model.forward(row)[0])
}

/// Label 1 iff the probability is at least one half.
pub fn label_of(p: f64) -> u8 {
    u8::from(p >= 0.5)
}

/// Mean BCE of `model` on `(x, targets)` and its exact gradient.
pub fn gradient<C: Classifier + ?Sized>(
    model: &C,
    x: ArrayView2<'_, f64>,
    targets: &[f64],
    exec: Execution,
) -> Result<Gradient> {
    check_input(model.input_dim(), &x)?;
    if targets.len() != x.nrows() {
        return Err(Error::Length(format!(
            "{} rows but {} targets",
            x.nrows(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::Invalid("gradient of an empty batch".into()));
    }
    let parts = map_chunks(x.nrows(), CHUNK_ROWS, exec, |r| {
        model.backward_sum(x.slice(ndarray::s![r.clone(), ..]), &targets[r])
    });
    let mut it = parts.into_iter();
    let mut acc = it.next().expect("non-empty batch has a chunk");
    for part in it {
        acc.loss += part.loss;
        acc.params.iter_mut().zip(&part.params).for_each(|(a, b)| *a += b);
        acc.input.iter_mut().zip(&part.input).for_each(|(a, b)| *a += b);
    }
    let n = targets.len() as f64;
    let g = Gradient {
        loss: acc.loss / n,
        params: acc.params.into_iter().map(|v| v / n).collect(),
        input: acc.input.into_iter().map(|v| v / n).collect(),
    };
    if !g.loss.is_finite() || g.params.iter().chain(&g.input).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("loss or gradient".into()));
    }
    Ok(g)
}

/// `x` with `shift` added to every row.
pub fn shifted(x: ArrayView2<'_, f64>, shift: &[f64]) -> Array2<f64> {
    let s = ndarray::ArrayView1::from(shift);
    let mut out = x.to_owned();
    out.rows_mut().into_iter().for_each(|mut r| r += &s);
    out
}
