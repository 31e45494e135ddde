//! Confusion counts, per-group rates, signed bias gaps, demographic parity,
//! and equalised odds.
//!
//! Rates whose denominator is zero are `None`. Aggregates that need such a
//! rate fail with [`Error::UndefinedRate`] rather than substituting zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sigfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, pred: u8, label: u8) {
        match (pred, label) {
            (1, 1) => self.tp += 1,
            (1, _) => self.fp += 1,
            (_, 1) => self.fn_ += 1,
            _ => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn rates(&self) -> GroupRates {
        let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        let pos = self.tp + self.fn_;
        let neg = self.tn + self.fp;
        GroupRates {
            tpr: ratio(self.tp, pos),
            tnr: ratio(self.tn, neg),
            fpr: ratio(self.fp, neg),
            fnr: ratio(self.fn_, pos),
            positive_rate: ratio(self.tp + self.fp, self.total()),
        }
    }
}

/// Per-group confusion counts keyed by group id.
pub type GroupConfusion = BTreeMap<u32, Counts>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub positive_rate: Option<f64>,
}

impl GroupRates {
    pub fn get(&self, rate: RateName) -> Option<f64> {
        match rate {
            RateName::Tpr => self.tpr,
            RateName::Tnr => self.tnr,
            RateName::Fpr => self.fpr,
            RateName::Fnr => self.fnr,
            RateName::PositiveRate => self.positive_rate,
        }
    }
}

pub type RateTable = BTreeMap<u32, GroupRates>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateName {
    Tpr,
    Tnr,
    Fpr,
    Fnr,
    PositiveRate,
}

impl RateName {
    pub const CONFUSION: [RateName; 4] = [RateName::Tpr, RateName::Tnr, RateName::Fpr, RateName::Fnr];

    pub fn as_str(self) -> &'static str {
        match self {
            RateName::Tpr => "tpr",
            RateName::Tnr => "tnr",
            RateName::Fpr => "fpr",
            RateName::Fnr => "fnr",
            RateName::PositiveRate => "positive_rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [RateName::Tpr, RateName::Tnr, RateName::Fpr, RateName::Fnr, RateName::PositiveRate]
            .into_iter()
            .find(|r| r.as_str() == s)
    }
}

fn check_binary(v: &[u8], what: &str) -> Result<()> {
    match v.iter().find(|&&b| b > 1) {
        Some(b) => Err(Error::Invalid(format!("{what} must be 0/1, found {b}"))),
        None => Ok(()),
    }
}

fn check_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::Length(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

pub fn confusion(preds: &[u8], labels: &[u8], groups: &[u32]) -> Result<GroupConfusion> {
    check_len(preds.len(), labels.len(), "predictions vs labels")?;
    check_len(preds.len(), groups.len(), "predictions vs groups")?;
    check_binary(preds, "predictions")?;
    check_binary(labels, "labels")?;
    let mut out = GroupConfusion::new();
    for ((&p, &y), &g) in preds.iter().zip(labels).zip(groups) {
        out.entry(g).or_default().add(p, y);
    }
    Ok(out)
}

pub fn rates(c: &GroupConfusion) -> RateTable {
    c.iter().map(|(&g, counts)| (g, counts.rates())).collect()
}

/// Signed gap `rate(g_i) − rate(g_j)`.
pub fn bias_gap(r: &RateTable, rate: RateName, g_i: u32, g_j: u32) -> Result<f64> {
    let get = |g: u32| {
        r.get(&g)
            .and_then(|gr| gr.get(rate))
            .ok_or(Error::UndefinedRate { rate: rate.as_str(), group: g })
    };
    Ok(get(g_i)? - get(g_j)?)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `num / den` with a single rounding once both are reduced.
fn round_ratio(num: u128, den: u128) -> f64 {
    let g = gcd(num, den).max(1);
    (num / g) as f64 / (den / g) as f64
}

/// `(a/b − c/d)` as an exact rational: sign, magnitude numerator, denominator.
fn rational_gap(a: u64, b: u64, c: u64, d: u64) -> (bool, u128, u128) {
    let (l, r) = (u128::from(a) * u128::from(d), u128::from(c) * u128::from(b));
    let den = u128::from(b) * u128::from(d);
    let g = gcd(l.abs_diff(r), den).max(1);
    (l < r, l.abs_diff(r) / g, den / g)
}

fn positive_count(preds: &[u8], groups: &[u32], g: u32) -> Result<(u64, u64)> {
    let (mut n, mut pos) = (0u64, 0u64);
    for (&p, _) in preds.iter().zip(groups).filter(|(_, &s)| s == g) {
        n += 1;
        pos += u64::from(p);
    }
    if n == 0 {
        return Err(Error::EmptyGroup(g));
    }
    Ok((pos, n))
}

/// `p(ŷ=1 | g_i) − p(ŷ=1 | g_j)`, sign preserved.
pub fn demographic_parity_signed(preds: &[u8], groups: &[u32], g_i: u32, g_j: u32) -> Result<f64> {
    check_len(preds.len(), groups.len(), "predictions vs groups")?;
    check_binary(preds, "predictions")?;
    let (a, b) = positive_count(preds, groups, g_i)?;
    let (c, d) = positive_count(preds, groups, g_j)?;
    let (negative, num, den) = rational_gap(a, b, c, d);
    let v = round_ratio(num, den);
    Ok(if negative { -v } else { v })
}

pub fn demographic_parity(preds: &[u8], groups: &[u32], g_i: u32, g_j: u32) -> Result<f64> {
    demographic_parity_signed(preds, groups, g_i, g_j).map(f64::abs)
}

/// `½|Δtpr| + ½|Δfpr|` between `g_i` and `g_j`.
pub fn equalized_odds(preds: &[u8], labels: &[u8], groups: &[u32], g_i: u32, g_j: u32) -> Result<f64> {
    equalized_odds_from_counts(&confusion(preds, labels, groups)?, g_i, g_j)
}

/// Equalised odds evaluated exactly on the counts and rounded once.
pub fn equalized_odds_from_counts(c: &GroupConfusion, g_i: u32, g_j: u32) -> Result<f64> {
    let get = |g: u32| c.get(&g).ok_or(Error::EmptyGroup(g));
    let (ci, cj) = (get(g_i)?, get(g_j)?);
    for (g, k) in [(g_i, ci), (g_j, cj)] {
        if k.tp + k.fn_ == 0 {
            return Err(Error::UndefinedRate { rate: "tpr", group: g });
        }
        if k.fp + k.tn == 0 {
            return Err(Error::UndefinedRate { rate: "fpr", group: g });
        }
    }
    let (_, tn, td) = rational_gap(ci.tp, ci.tp + ci.fn_, cj.tp, cj.tp + cj.fn_);
    let (_, fnum, fd) = rational_gap(ci.fp, ci.fp + ci.tn, cj.fp, cj.fp + cj.tn);
    let exact = tn
        .checked_mul(fd)
        .zip(fnum.checked_mul(td))
        .and_then(|(x, y)| x.checked_add(y))
        .zip(td.checked_mul(fd).and_then(|d| d.checked_mul(2)));
    Ok(match exact {
        Some((num, den)) => round_ratio(num, den),
        None => 0.5 * round_ratio(tn, td) + 0.5 * round_ratio(fnum, fd),
    })
}

pub fn accuracy(preds: &[u8], labels: &[u8]) -> Result<f64> {
    check_len(preds.len(), labels.len(), "predictions vs labels")?;
    if preds.is_empty() {
        return Err(Error::Invalid("accuracy of an empty set".into()));
    }
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// The two largest groups (ties to the smaller id), smaller id first.
pub fn default_group_pair(groups: &[u32]) -> Result<(u32, u32)> {
    let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for &g in groups {
        *sizes.entry(g).or_default() += 1;
    }
    if sizes.len() < 2 {
        return Err(Error::Invalid("fairness evaluation needs at least two groups".into()));
    }
    let mut by_size: Vec<(u32, usize)> = sizes.into_iter().collect();
    by_size.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let (a, b) = (by_size[0].0, by_size[1].0);
    Ok((a.min(b), a.max(b)))
}

/// Group-fairness audit of one set of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    #[serde(serialize_with = "sigfig::serde_f64::serialize")]
    pub accuracy: f64,
    #[serde(serialize_with = "sigfig::serde_f64::serialize")]
    pub demographic_parity: f64,
    /// `None` when either group lacks positive or negative labels.
    #[serde(serialize_with = "sigfig::serde_opt_f64::serialize")]
    pub equalized_odds: Option<f64>,
    /// Signed `g_i − g_j` gaps keyed by rate name; `null` when undefined.
    pub signed_gaps: BTreeMap<String, Option<f64>>,
    /// Row counts keyed by group id.
    pub group_sizes: BTreeMap<String, usize>,
    pub group_pair: (u32, u32),
}

impl FairnessReport {
    pub fn compute(preds: &[u8], labels: &[u8], groups: &[u32], pair: Option<(u32, u32)>) -> Result<Self> {
        let (g_i, g_j) = match pair {
            Some(p) => p,
            None => default_group_pair(groups)?,
        };
        let conf = confusion(preds, labels, groups)?;
        let table = rates(&conf);
        let dp_signed = demographic_parity_signed(preds, groups, g_i, g_j)?;
        let mut signed_gaps = BTreeMap::new();
        for rate in RateName::CONFUSION {
            signed_gaps.insert(
                rate.as_str().to_string(),
                bias_gap(&table, rate, g_i, g_j).ok().map(sigfig::round),
            );
        }
        signed_gaps.insert(RateName::PositiveRate.as_str().to_string(), Some(sigfig::round(dp_signed)));
        Ok(FairnessReport {
            accuracy: accuracy(preds, labels)?,
            demographic_parity: dp_signed.abs(),
            equalized_odds: equalized_odds_from_counts(&conf, g_i, g_j).ok(),
            signed_gaps,
            group_sizes: conf.iter().map(|(g, c)| (g.to_string(), c.total() as usize)).collect(),
            group_pair: (g_i, g_j),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Group 0 = A, group 1 = B.
    fn hand_fixture() -> (Vec<u8>, Vec<u8>, Vec<u32>) {
        (
            vec![1, 0, 1, 1, 0, 0],
            vec![1, 1, 0, 1, 0, 0],
            vec![0, 0, 0, 1, 1, 1],
        )
    }

    #[test]
    fn hand_confusion() {
        let (p, y, g) = hand_fixture();
        let c = confusion(&p, &y, &g).unwrap();
        assert_eq!(c[&0], Counts { tp: 1, fp: 1, tn: 0, fn_: 1 });
        assert_eq!(c[&1], Counts { tp: 1, fp: 0, tn: 2, fn_: 0 });
        let r = rates(&c);
        assert_eq!(r[&0].tpr, Some(0.5));
        assert_eq!(r[&0].fpr, Some(1.0));
        assert_eq!(r[&1].tpr, Some(1.0));
        assert_eq!(r[&1].fpr, Some(0.0));
        assert_eq!(bias_gap(&r, RateName::Tpr, 0, 1).unwrap(), -0.5);
        assert_eq!(bias_gap(&r, RateName::Tpr, 1, 0).unwrap(), 0.5);
        assert_eq!(equalized_odds(&p, &y, &g, 0, 1).unwrap(), 0.75);
        assert_eq!(equalized_odds(&p, &y, &g, 1, 0).unwrap(), 0.75);
    }

    #[test]
    fn perfect_predictions() {
        let y = vec![1, 0, 1, 0, 1, 0];
        let g = vec![0, 0, 0, 1, 1, 1];
        let c = confusion(&y, &y, &g).unwrap();
        assert!(c.values().all(|k| k.fp == 0 && k.fn_ == 0));
        assert_eq!(equalized_odds(&y, &y, &g, 0, 1).unwrap(), 0.0);
        let r = rates(&c);
        assert_eq!(r[&0].tpr, Some(1.0));
        assert_eq!(r[&0].fpr, Some(0.0));
    }

    #[test]
    fn empty_input_and_errors() {
        assert!(confusion(&[], &[], &[]).unwrap().is_empty());
        assert!(confusion(&[1], &[1, 0], &[0]).is_err());
        assert!(confusion(&[2], &[1], &[0]).is_err());
        assert!(accuracy(&[], &[]).is_err());
        assert!(demographic_parity(&[1, 0], &[0, 0], 0, 1).is_err());
    }

    #[test]
    fn undefined_rates_are_markers_not_zero() {
        let c = confusion(&[0, 1], &[0, 0], &[0, 0]).unwrap();
        let r = rates(&c);
        assert_eq!(r[&0].tpr, None);
        assert_eq!(r[&0].fnr, None);
        assert_eq!(r[&0].fpr, Some(0.5));
        let both = confusion(&[0, 1, 1, 0], &[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        assert!(matches!(
            bias_gap(&rates(&both), RateName::Tpr, 0, 1),
            Err(Error::UndefinedRate { rate: "tpr", group: 0 })
        ));
        assert!(equalized_odds(&[0, 1, 1, 0], &[0, 0, 1, 1], &[0, 0, 1, 1], 0, 1).is_err());
    }

    #[test]
    fn demographic_parity_cases() {
        let g = vec![0, 0, 0, 1, 1, 1];
        assert_eq!(demographic_parity(&[1, 1, 0, 1, 0, 0], &g, 0, 1).unwrap(), 1.0 / 3.0);
        assert_eq!(demographic_parity(&[1; 6], &g, 0, 1).unwrap(), 0.0);
        assert_eq!(demographic_parity(&[1, 0, 0, 0, 1, 0], &g, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn accuracy_cases() {
        let y = vec![1, 0, 1, 1];
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        assert_eq!(accuracy(&flipped, &y).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &y).unwrap(), 0.75);
    }

    #[test]
    fn report_json_keys_and_pair() {
        let (p, y, g) = hand_fixture();
        let r = FairnessReport::compute(&p, &y, &g, None).unwrap();
        assert_eq!(r.group_pair, (0, 1));
        assert_eq!(r.equalized_odds, Some(0.75));
        assert_eq!(r.signed_gaps["tpr"], Some(-0.5));
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for k in ["accuracy", "demographic_parity", "equalized_odds", "signed_gaps", "group_sizes"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
        assert_eq!(v["group_sizes"]["0"], 3);
    }

    #[test]
    fn default_pair_picks_two_largest() {
        assert_eq!(default_group_pair(&[2, 2, 2, 0, 1, 1]).unwrap(), (1, 2));
        assert_eq!(default_group_pair(&[3, 1, 0]).unwrap(), (0, 1));
        assert!(default_group_pair(&[1, 1]).is_err());
    }

    fn fixture() -> impl Strategy<Value = Vec<(u8, u8, u32)>> {
        proptest::collection::vec((0u8..2, 0u8..2, 0u32..2), 1..120)
    }

    proptest! {
        #[test]
        fn complement_identities(rows in fixture()) {
            let (p, y, g): (Vec<u8>, Vec<u8>, Vec<u32>) = split3(&rows);
            for r in rates(&confusion(&p, &y, &g).unwrap()).values() {
                if let (Some(a), Some(b)) = (r.tpr, r.fnr) { prop_assert!((a + b - 1.0).abs() < 1e-15); }
                if let (Some(a), Some(b)) = (r.tnr, r.fpr) { prop_assert!((a + b - 1.0).abs() < 1e-15); }
            }
        }

        #[test]
        fn swap_and_permutation_invariance(rows in fixture(), rot in 0usize..120) {
            let (p, y, g) = split3(&rows);
            let t = rates(&confusion(&p, &y, &g).unwrap());
            for rate in RateName::CONFUSION {
                if let (Ok(a), Ok(b)) = (bias_gap(&t, rate, 0, 1), bias_gap(&t, rate, 1, 0)) {
                    prop_assert_eq!(a, -b);
                    prop_assert!((-1.0..=1.0).contains(&a));
                }
            }
            let mut shuffled = rows.clone();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let (p2, y2, g2) = split3(&shuffled);
            prop_assert_eq!(accuracy(&p, &y).unwrap(), accuracy(&p2, &y2).unwrap());
            if let Ok(e) = equalized_odds(&p, &y, &g, 0, 1) {
                prop_assert_eq!(e, equalized_odds(&p2, &y2, &g2, 0, 1).unwrap());
                prop_assert_eq!(e, equalized_odds(&p, &y, &g, 1, 0).unwrap());
                prop_assert!((0.0..=1.0).contains(&e));
            }
            if let Ok(d) = demographic_parity(&p, &g, 0, 1) {
                prop_assert_eq!(d, demographic_parity(&p2, &g2, 0, 1).unwrap());
                prop_assert_eq!(d, demographic_parity(&p, &g, 1, 0).unwrap());
                prop_assert!((0.0..=1.0).contains(&d));
            }
        }
    }

    fn split3(rows: &[(u8, u8, u32)]) -> (Vec<u8>, Vec<u8>, Vec<u32>) {
        (
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
        )
    }
}
