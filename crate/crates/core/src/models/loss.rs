/// Probability clamp applied before taking logarithms.
pub const PROB_CLAMP: f64 = 1e-7;

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of probability `p` against a target in `[0, 1]`
/// (hard labels or soft pseudo-labels).
pub fn bce(p: f64, target: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

pub fn mean_bce(probs: &[f64], targets: &[f64]) -> f64 {
    debug_assert_eq!(probs.len(), targets.len());
    probs.iter().zip(targets).map(|(&p, &t)| bce(p, t)).sum::<f64>() / probs.len() as f64
}
