use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::params::{Layout, ModelParams, Segment};
use crate::error::{Error, Result};

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;

/// Magnitude cap on each perturbation component. `tanh` rounds to exactly
/// ±1 for large arguments; the cap keeps `|x̃ − x| < 1` for inputs up to
/// about 1e3 in magnitude.
pub const NOISE_LIMIT: f64 = 1.0 - 1e-12;

fn bounded_tanh(v: f64) -> f64 {
    v.tanh().clamp(-NOISE_LIMIT, NOISE_LIMIT)
}

/// Learnable bounded input perturbation `tanh(g(eta))`, where `g` is a
/// two-layer ReLU network and `eta` is a frozen standard-normal vector. The
/// perturbation is the same for every row under a given parameter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseWrapper {
    eta: Vec<f64>,
    params: ModelParams,
}

struct Hidden {
    z1: Array1<f64>,
    h: Array1<f64>,
    noise: Array1<f64>,
}

impl NoiseWrapper {
    pub fn layout(m: usize, hidden: usize) -> Layout {
        Layout::new(vec![
            Segment::new("w1", hidden, m),
            Segment::new("b1", 1, hidden),
            Segment::new("w2", m, hidden),
            Segment::new("b2", 1, m),
        ])
    }

    /// Draws `eta` from the standard normal, then Xavier weights.
    pub fn new(m: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let eta = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        NoiseWrapper {
            eta,
            params: ModelParams::xavier(Self::layout(m, hidden), rng),
        }
    }

    pub fn from_parts(eta: Vec<f64>, params: ModelParams) -> Result<Self> {
        let segs = &params.layout().segments;
        let ok = segs.len() == 4
            && params.layout() == &Self::layout(eta.len(), segs[0].rows);
        if !ok {
            return Err(Error::Layout);
        }
        Ok(NoiseWrapper { eta, params })
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParams {
        &mut self.params
    }

    fn hidden(&self) -> Hidden {
        let p = &self.params;
        let eta = Array1::from(self.eta.clone());
        let z1 = p.matrix(W1).dot(&eta) + &p.vector(B1);
        let h = z1.mapv(|v| v.max(0.0));
        let noise = (p.matrix(W2).dot(&h) + &p.vector(B2)).mapv(bounded_tanh);
        Hidden { z1, h, noise }
    }

    /// The shared perturbation vector; every entry lies in (−1, 1).
    pub fn perturbation(&self) -> Vec<f64> {
        self.hidden().noise.to_vec()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter().zip(self.perturbation()).map(|(a, b)| a + b).collect())
    }

    pub fn apply_batch(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(super::shifted(x, &self.perturbation()))
    }

    /// Parameter gradient given `upstream = dLoss/dPerturbation`.
    pub fn backward(&self, upstream: &[f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: upstream.len(),
            });
        }
        let hid = self.hidden();
        let d_pre: Array1<f64> = upstream
            .iter()
            .zip(hid.noise.iter())
            .map(|(u, t)| u * (1.0 - t * t))
            .collect();
        let g_w2 = d_pre
            .view()
            .insert_axis(ndarray::Axis(1))
            .dot(&hid.h.view().insert_axis(ndarray::Axis(0)));
        let mut d_h = self.params.matrix(W2).t().dot(&d_pre);
        d_h.zip_mut_with(&hid.z1, |d, &z| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let eta = Array1::from(self.eta.clone());
        let g_w1 = d_h
            .view()
            .insert_axis(ndarray::Axis(1))
            .dot(&eta.view().insert_axis(ndarray::Axis(0)));
        let mut out = Vec::with_capacity(self.params.len());
        out.extend(g_w1.iter());
        out.extend(d_h.iter());
        out.extend(g_w2.iter());
        out.extend(d_pre.iter());
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_are_identity() {
        let mut rng = crate::rng::stream(1, 0);
        let mut w = NoiseWrapper::new(4, 4, &mut rng);
        w.params_mut().as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        let x = [0.3, -1.2, 5.0, 0.0];
        assert_eq!(w.apply(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn contrived_half_pre_activation() {
        // m = 1, hidden = 1: g(eta) = w2 * relu(w1 * eta + b1) + b2 = 0.5
        let params =
            ModelParams::from_values(NoiseWrapper::layout(1, 1), vec![1.0, 0.0, 0.5, 0.0]).unwrap();
        let w = NoiseWrapper::from_parts(vec![1.0], params).unwrap();
        let out = w.apply(&[2.0]).unwrap();
        assert!((out[0] - (2.0 + 0.462117)).abs() < 1e-6);
    }

    #[test]
    fn bounded_for_scaled_weights() {
        let mut rng = crate::rng::stream(2, 0);
        let mut w = NoiseWrapper::new(6, 6, &mut rng);
        w.params_mut().as_mut_slice().iter_mut().for_each(|v| *v *= 3.0);
        assert!(w.perturbation().iter().all(|v| v.abs() < 1.0));
        assert!(w.apply(&[0.0; 5]).is_err());
    }

    #[test]
    fn saturated_state_stays_inside_the_bound() {
        let mut rng = crate::rng::stream(3, 0);
        let mut w = NoiseWrapper::new(4, 4, &mut rng);
        w.params_mut().as_mut_slice().iter_mut().for_each(|v| *v = 50.0);
        let x = [3.0, -700.0, 0.5, 12.0];
        let out = w.apply(&x).unwrap();
        assert!(w.perturbation().iter().any(|v| v.abs() == NOISE_LIMIT));
        assert!(out.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1.0));
    }

    #[test]
    fn eta_is_standard_normal_draw() {
        let mut rng = crate::rng::stream(8, 0);
        let w = NoiseWrapper::new(3, 2, &mut rng);
        assert_eq!(w.eta().len(), 3);
        assert_eq!(w.params().len(), 3 * 2 + 2 + 2 * 3 + 3);
    }
}
