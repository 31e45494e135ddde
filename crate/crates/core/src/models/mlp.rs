use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{bce, sigmoid};
use super::params::{Layout, ModelParams, Segment};
use super::{ChunkGrad, Classifier};

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;
const W3: usize = 4;
const B3: usize = 5;

/// Three affine layers `m → h1 → h2 → 1` with ReLU hidden activations and
/// a sigmoid output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedForwardClassifier {
    params: ModelParams,
}

struct Activations {
    z1: Array2<f64>,
    a1: Array2<f64>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    probs: Vec<f64>,
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

impl FeedForwardClassifier {
    pub fn layout(m: usize, h1: usize, h2: usize) -> Layout {
        Layout::new(vec![
            Segment::new("w1", h1, m),
            Segment::new("b1", 1, h1),
            Segment::new("w2", h2, h1),
            Segment::new("b2", 1, h2),
            Segment::new("w3", 1, h2),
            Segment::new("b3", 1, 1),
        ])
    }

    pub fn param_count(m: usize, h1: usize, h2: usize) -> usize {
        (m + 1) * h1 + (h1 + 1) * h2 + (h2 + 1)
    }

    pub fn new(m: usize, h1: usize, h2: usize, rng: &mut impl Rng) -> Self {
        FeedForwardClassifier {
            params: ModelParams::xavier(Self::layout(m, h1, h2), rng),
        }
    }

    pub fn zeros(m: usize, h1: usize, h2: usize) -> Self {
        FeedForwardClassifier {
            params: ModelParams::zeros(Self::layout(m, h1, h2)),
        }
    }

    pub fn from_params(params: ModelParams) -> Option<Self> {
        let segs = &params.layout().segments;
        let names = ["w1", "b1", "w2", "b2", "w3", "b3"];
        let shaped = segs.len() == 6 && segs.iter().zip(names).all(|(s, n)| s.name == n);
        (shaped && params.layout() == &Self::layout(segs[0].cols, segs[0].rows, segs[2].rows))
            .then_some(FeedForwardClassifier { params })
    }

    /// `(m, h1, h2)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        let s = &self.params.layout().segments;
        (s[W1].cols, s[W1].rows, s[W2].rows)
    }

    fn activations(&self, x: ArrayView2<'_, f64>) -> Activations {
        let p = &self.params;
        let z1 = x.dot(&p.matrix(W1).t()) + &p.vector(B1);
        let a1 = z1.mapv(relu);
        let z2 = a1.dot(&p.matrix(W2).t()) + &p.vector(B2);
        let a2 = z2.mapv(relu);
        let b3 = p.vector(B3)[0];
        let probs = a2.dot(&p.matrix(W3).row(0)).iter().map(|&z| sigmoid(z + b3)).collect();
        Activations { z1, a1, z2, a2, probs }
    }
}

impl Classifier for FeedForwardClassifier {
    fn input_dim(&self) -> usize {
        self.dims().0
    }

    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.activations(x).probs
    }

    fn backward_sum(&self, x: ArrayView2<'_, f64>, targets: &[f64]) -> ChunkGrad {
        let p = &self.params;
        let act = self.activations(x);
        let loss = act.probs.iter().zip(targets).map(|(&q, &t)| bce(q, t)).sum();

        // d(sum BCE)/d(output logit) = p - t
        let d3: Array1<f64> = act.probs.iter().zip(targets).map(|(q, t)| q - t).collect();
        let g_w3 = act.a2.t().dot(&d3);
        let g_b3 = d3.sum();

        let w3 = p.matrix(W3);
        let mut d2 = d3.view().insert_axis(Axis(1)).dot(&w3);
        d2.zip_mut_with(&act.z2, |d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let g_w2 = d2.t().dot(&act.a1);
        let g_b2 = d2.sum_axis(Axis(0));

        let mut d1 = d2.dot(&p.matrix(W2));
        d1.zip_mut_with(&act.z1, |d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let g_w1 = d1.t().dot(&x);
        let g_b1 = d1.sum_axis(Axis(0));
        let input = g_b1.dot(&p.matrix(W1)).to_vec();

        let mut params = Vec::with_capacity(p.len());
        params.extend(g_w1.iter());
        params.extend(g_b1.iter());
        params.extend(g_w2.iter());
        params.extend(g_b2.iter());
        params.extend(g_w3.iter());
        params.push(g_b3);
        ChunkGrad { loss, params, input }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{gradient, score};
    use crate::parallel::Execution;

    #[test]
    fn parameter_count_formula() {
        for (m, h1, h2) in [(5, 4, 3), (8, 64, 32), (1, 1, 1)] {
            let net = FeedForwardClassifier::zeros(m, h1, h2);
            assert_eq!(net.params().len(), FeedForwardClassifier::param_count(m, h1, h2));
            assert_eq!(net.dims(), (m, h1, h2));
        }
    }

    #[test]
    fn zero_params_score_one_half() {
        let net = FeedForwardClassifier::zeros(3, 4, 2);
        assert_eq!(score(&net, &[1.0, -5.0, 2.0]).unwrap(), 0.5);
        assert!(score(&net, &[1.0]).is_err());
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let mut rng = crate::rng::stream(9, 0);
        let net = FeedForwardClassifier::new(4, 8, 4, &mut rng);
        for k in 0..50 {
            let v = k as f64 - 25.0;
            let s = score(&net, &[v, -v, 0.5 * v, 1.0]).unwrap();
            assert!(s >= 0.0 && s <= 1.0);
            if v.abs() < 5.0 {
                assert!(s > 0.0 && s < 1.0);
            }
        }
    }

    #[test]
    fn duplicated_batch_same_mean_gradient() {
        let mut rng = crate::rng::stream(4, 0);
        let net = FeedForwardClassifier::new(3, 5, 4, &mut rng);
        let x = Array2::from_shape_fn((6, 3), |(i, j)| ((i * 3 + j) as f64 * 0.71).sin());
        let t = vec![1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let g1 = gradient(&net, x.view(), &t, Execution::Sequential).unwrap();
        let x2 = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let t2 = [t.clone(), t].concat();
        let g2 = gradient(&net, x2.view(), &t2, Execution::Sequential).unwrap();
        for (a, b) in g1.params.iter().zip(&g2.params) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-3));
        }
        assert!((g1.loss - g2.loss).abs() < 1e-14);
    }

    #[test]
    fn from_params_checks_layout() {
        let net = FeedForwardClassifier::zeros(3, 4, 2);
        assert!(FeedForwardClassifier::from_params(net.params().clone()).is_some());
        let lin = crate::models::LinearClassifier::zeros(3);
        assert!(FeedForwardClassifier::from_params(lin.params().clone()).is_none());
    }
}
