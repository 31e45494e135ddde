#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use reckoner::data::{standardize, Dataset, SplitSpec, SynthConfig, synth_biased};
use reckoner::models::{
    gradient, mean_bce, Classifier, FeedForwardClassifier, LinearClassifier, ModelParams, NoiseWrapper,
};
use reckoner::parallel::Execution;
use reckoner::rng;

pub const FD_STEP: f64 = 1e-5;
/// Denominator floor for relative errors of near-zero gradient entries.
pub const REL_FLOOR: f64 = 1e-6;

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR))
        .fold(0.0, f64::max)
}

fn random_batch(seed: u64, rows: usize, m: usize) -> (Array2<f64>, Vec<f64>) {
    let mut r = rng::stream(seed, 100);
    let x = Array2::from_shape_fn((rows, m), |_| r.sample::<f64, _>(StandardNormal));
    let y = (0..rows).map(|_| f64::from(u8::from(r.random::<bool>()))).collect();
    (x, y)
}

/// Central differences of `loss` around `params`, one coordinate at a time.
fn central_differences(params: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + FD_STEP;
            let up = loss(&p);
            p[i] = orig - FD_STEP;
            let down = loss(&p);
            p[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn check_classifier<C: Classifier + Clone>(model: &C, x: &Array2<f64>, y: &[f64]) -> f64 {
    let g = gradient(model, x.view(), y, Execution::Sequential).unwrap();
    let numeric = central_differences(model.params().as_slice(), |p| {
        let mut m = model.clone();
        m.params_mut().as_mut_slice().copy_from_slice(p);
        mean_bce(&m.forward(x.view()), y)
    });
    max_rel_err(&g.params, &numeric)
}

pub fn fd_linear(seed: u64) -> f64 {
    let (x, y) = random_batch(seed, 8, 5);
    let mut r = rng::stream(seed, 101);
    let w: Vec<f64> = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
    let model = LinearClassifier::from_weights(&w, r.random_range(-0.5..0.5));
    check_classifier(&model, &x, &y)
}

/// Every weight and bias drawn uniformly, so no pre-activation sits exactly
/// on a ReLU kink where central differences see half a slope.
fn random_feedforward(seed: u64) -> FeedForwardClassifier {
    let layout = FeedForwardClassifier::layout(5, 4, 3);
    let mut r = rng::stream(seed, 102);
    let values = (0..layout.len()).map(|_| r.random_range(-1.0..1.0)).collect();
    FeedForwardClassifier::from_params(ModelParams::from_values(layout, values).unwrap()).unwrap()
}

fn random_noise(seed: u64) -> NoiseWrapper {
    let layout = NoiseWrapper::layout(5, 5);
    let mut r = rng::stream(seed, 104);
    let eta = (0..5).map(|_| r.random_range(-1.0..1.0)).collect();
    let values = (0..layout.len()).map(|_| r.random_range(-1.0..1.0)).collect();
    NoiseWrapper::from_parts(eta, ModelParams::from_values(layout, values).unwrap()).unwrap()
}

pub fn fd_feedforward(seed: u64) -> f64 {
    let (x, y) = random_batch(seed, 8, 5);
    check_classifier(&random_feedforward(seed), &x, &y)
}

/// Classifier applied to `x + noise`, differentiated jointly in the
/// classifier and wrapper parameters.
pub fn fd_noise_composed(seed: u64) -> f64 {
    let (x, y) = random_batch(seed, 8, 5);
    let model = random_feedforward(seed);
    let noise = random_noise(seed);
    let g = gradient(&model, noise.apply_batch(x.view()).unwrap().view(), &y, Execution::Sequential).unwrap();
    let mut analytic = g.params.clone();
    analytic.extend(noise.backward(&g.input).unwrap());
    let split = model.params().len();
    let mut joint = model.params().as_slice().to_vec();
    joint.extend_from_slice(noise.params().as_slice());
    let numeric = central_differences(&joint, |p| {
        let mut m = model.clone();
        m.params_mut().as_mut_slice().copy_from_slice(&p[..split]);
        let mut w = noise.clone();
        w.params_mut().as_mut_slice().copy_from_slice(&p[split..]);
        mean_bce(&m.forward(w.apply_batch(x.view()).unwrap().view()), &y)
    });
    max_rel_err(&analytic, &numeric)
}

/// An exact non-negative rational `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// True when the reduced denominator is a power of two.
    pub fn is_dyadic(self) -> bool {
        let g = gcd(self.num, self.den);
        let d = self.den / g.max(1);
        d > 0 && d & (d - 1) == 0
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    size: i64,
    predicted_pos: i64,
    pos: i64,
    neg: i64,
    tp: i64,
    fp: i64,
}

fn tally(preds: &[u8], labels: &[u8], groups: &[u32], g: u32) -> Tally {
    let mut t = Tally::default();
    for i in 0..preds.len() {
        if groups[i] != g {
            continue;
        }
        t.size += 1;
        if preds[i] == 1 {
            t.predicted_pos += 1;
        }
        if labels[i] == 1 {
            t.pos += 1;
            if preds[i] == 1 {
                t.tp += 1;
            }
        } else {
            t.neg += 1;
            if preds[i] == 1 {
                t.fp += 1;
            }
        }
    }
    t
}

/// |P(ŷ=1 | g_i) − P(ŷ=1 | g_j)| by counting.
pub fn oracle_dp(preds: &[u8], groups: &[u32], gi: u32, gj: u32) -> Ratio {
    let (a, b) = (tally(preds, preds, groups, gi), tally(preds, preds, groups, gj));
    Ratio {
        num: (a.predicted_pos * b.size - b.predicted_pos * a.size).abs(),
        den: a.size * b.size,
    }
}

/// Half the absolute tpr gap plus half the absolute fpr gap, by counting.
pub fn oracle_eodds(preds: &[u8], labels: &[u8], groups: &[u32], gi: u32, gj: u32) -> Ratio {
    let (a, b) = (tally(preds, labels, groups, gi), tally(preds, labels, groups, gj));
    let tpr_gap = (a.tp * b.pos - b.tp * a.pos).abs();
    let fpr_gap = (a.fp * b.neg - b.fp * a.neg).abs();
    Ratio {
        num: tpr_gap * a.neg * b.neg + fpr_gap * a.pos * b.pos,
        den: 2 * a.pos * b.pos * a.neg * b.neg,
    }
}

/// Whether every rate feeding the metrics has a power-of-two denominator.
pub fn rates_dyadic(labels: &[u8], groups: &[u32], gi: u32, gj: u32) -> bool {
    [gi, gj].iter().all(|&g| {
        let t = tally(labels, labels, groups, g);
        [t.size, t.pos, t.neg].iter().all(|&d| d > 0 && d & (d - 1) == 0)
    })
}

pub struct Splits {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
    pub clean_test: Vec<u8>,
}

/// Generates, splits with the same seed, and standardizes on train.
pub fn synth_splits(cfg: &SynthConfig) -> Splits {
    let sd = synth_biased(cfg).unwrap();
    let spec = SplitSpec {
        seed: cfg.seed,
        ..SplitSpec::default()
    };
    let [tr, va, te] = spec.partition(cfg.n).unwrap();
    let (sets, _, _) = standardize(
        &sd.data.select(&tr),
        &[&sd.data.select(&va), &sd.data.select(&te)],
    )
    .unwrap();
    let [train, valid, test]: [Dataset; 3] = sets.try_into().unwrap();
    Splits {
        train,
        valid,
        test,
        clean_test: te.iter().map(|&i| sd.clean_labels[i]).collect(),
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
