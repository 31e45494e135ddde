//! Identification-stage splitting and confidence-stratified bias analysis.
//!
//! Confidence of a binary probability `p` is `max(p, 1 − p)`, so it always
//! lies in `[0.5, 1]`. Rows exactly on a threshold go to the upper side.

use std::collections::BTreeMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{Counts, GroupRates, RateName};
use crate::models::{predict_proba, score, Classifier, LinearClassifier};
use crate::parallel::Execution;
use crate::sigfig;

pub const DEFAULT_THRESHOLD: f64 = 0.6;
pub const DEFAULT_BUCKETS: [f64; 4] = [0.5, 0.6, 0.7, 0.8];

pub fn confidence_from_prob(p: f64) -> f64 {
    p.max(1.0 - p)
}

pub fn confidence_of(model: &LinearClassifier, x: &[f64]) -> Result<f64> {
    score(model, x).map(confidence_from_prob)
}

pub fn confidences<C: Classifier + ?Sized>(model: &C, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    Ok(predict_proba(model, x, Execution::default())?
        .into_iter()
        .map(confidence_from_prob)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSplit {
    pub threshold: f64,
    /// Rows with confidence below the threshold.
    pub low: Vec<usize>,
    /// Rows with confidence at or above the threshold.
    pub high: Vec<usize>,
    pub scores: Vec<f64>,
}

impl ConfidenceSplit {
    pub fn low_is_empty(&self) -> bool {
        self.low.is_empty()
    }

    pub fn high_is_empty(&self) -> bool {
        self.high.is_empty()
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(0.5..1.0).contains(&t) {
        return Err(Error::Config(format!("confidence threshold {t} outside [0.5, 1)")));
    }
    Ok(())
}

pub fn split_scores(scores: Vec<f64>, threshold: f64) -> Result<ConfidenceSplit> {
    check_threshold(threshold)?;
    let (high, low): (Vec<usize>, Vec<usize>) = (0..scores.len()).partition(|&i| scores[i] >= threshold);
    Ok(ConfidenceSplit {
        threshold,
        low,
        high,
        scores,
    })
}

pub fn split_by_confidence(d: &Dataset, model: &LinearClassifier, threshold: f64) -> Result<ConfidenceSplit> {
    check_threshold(threshold)?;
    split_scores(confidences(model, d.x())?, threshold)
}

/// Confidence buckets `[t_k, t_{k+1})`, the last one closed at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSpec {
    thresholds: Vec<f64>,
}

impl Default for BucketSpec {
    fn default() -> Self {
        BucketSpec {
            thresholds: DEFAULT_BUCKETS.to_vec(),
        }
    }
}

impl BucketSpec {
    pub fn new(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.first() != Some(&0.5) {
            return Err(Error::Config("bucket thresholds must start at 0.5".into()));
        }
        if thresholds.windows(2).any(|w| !(w[0] < w[1])) || thresholds.iter().any(|&t| t >= 1.0) {
            return Err(Error::Config("bucket thresholds must be strictly increasing and below 1".into()));
        }
        Ok(BucketSpec { thresholds })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn bounds(&self, k: usize) -> (f64, f64) {
        (self.thresholds[k], self.thresholds.get(k + 1).copied().unwrap_or(1.0))
    }

    pub fn bucket_of(&self, score: f64) -> usize {
        self.thresholds.iter().rposition(|&t| score >= t).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lower: f64,
    pub upper: f64,
    pub counts: BTreeMap<u32, Counts>,
    pub rates: BTreeMap<u32, GroupRates>,
    /// Signed `g_i − g_j` gaps for tpr/tnr/fpr/fnr; `None` when undefined.
    pub gaps: BTreeMap<String, Option<f64>>,
}

impl Bucket {
    pub fn size(&self) -> u64 {
        self.counts.values().map(Counts::total).sum()
    }

    pub fn gap(&self, rate: RateName) -> Option<f64> {
        self.gaps.get(rate.as_str()).copied().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub group_pair: (u32, u32),
    pub buckets: Vec<Bucket>,
}

pub fn bucket_analysis(
    d: &Dataset,
    preds: &[u8],
    scores: &[f64],
    spec: &BucketSpec,
    g_i: u32,
    g_j: u32,
) -> Result<BucketReport> {
    bucket_analysis_raw(d.labels(), d.groups(), preds, scores, spec, g_i, g_j)
}

/// As [`bucket_analysis`] on bare label and group columns.
pub fn bucket_analysis_raw(
    labels: &[u8],
    groups: &[u32],
    preds: &[u8],
    scores: &[f64],
    spec: &BucketSpec,
    g_i: u32,
    g_j: u32,
) -> Result<BucketReport> {
    let n = labels.len();
    if groups.len() != n || preds.len() != n || scores.len() != n {
        return Err(Error::Length(format!(
            "labels {n}, groups {}, predictions {}, scores {}",
            groups.len(),
            preds.len(),
            scores.len()
        )));
    }
    if preds.iter().chain(labels).any(|&v| v > 1) {
        return Err(Error::Invalid("predictions and labels must be 0/1".into()));
    }
    let mut counts: Vec<BTreeMap<u32, Counts>> = vec![BTreeMap::new(); spec.len()];
    for i in 0..n {
        counts[spec.bucket_of(scores[i])]
            .entry(groups[i])
            .or_default()
            .add(preds[i], labels[i]);
    }
    let buckets = counts
        .into_iter()
        .enumerate()
        .map(|(k, counts)| {
            let (lower, upper) = spec.bounds(k);
            let rates: BTreeMap<u32, GroupRates> = counts.iter().map(|(&g, c)| (g, c.rates())).collect();
            let gaps = RateName::CONFUSION
                .into_iter()
                .map(|r| {
                    let gap = match (rates.get(&g_i).and_then(|x| x.get(r)), rates.get(&g_j).and_then(|x| x.get(r))) {
                        (Some(a), Some(b)) => Some(a - b),
                        _ => None,
                    };
                    (r.as_str().to_string(), gap)
                })
                .collect();
            Bucket {
                lower,
                upper,
                counts,
                rates,
                gaps,
            }
        })
        .collect();
    Ok(BucketReport {
        group_pair: (g_i, g_j),
        buckets,
    })
}

/// Key of one plotted value: (bucket index, group id or `"gap"`, measure).
pub type CellKey = (usize, String, String);

const BUCKET_CSV_HEADER: &str = "bucket,lower,upper,group,measure,value,n";

impl BucketReport {
    /// Every plotted value keyed by bucket, group and measure.
    pub fn cells(&self) -> BTreeMap<CellKey, Option<f64>> {
        let mut out = BTreeMap::new();
        for (k, b) in self.buckets.iter().enumerate() {
            for (g, r) in &b.rates {
                for m in RateName::CONFUSION.into_iter().chain([RateName::PositiveRate]) {
                    out.insert((k, g.to_string(), m.as_str().to_string()), r.get(m));
                }
            }
            for (m, v) in &b.gaps {
                out.insert((k, "gap".to_string(), m.clone()), *v);
            }
        }
        out
    }

    /// One row per bucket × group × measure. Gap rows use group `gap`.
    /// Undefined values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(BUCKET_CSV_HEADER);
        s.push('\n');
        for ((k, g, m), v) in self.cells() {
            let b = &self.buckets[k];
            let n = match g.parse::<u32>() {
                Ok(id) => b.counts[&id].total(),
                Err(_) => b.size(),
            };
            s.push_str(&format!(
                "{k},{},{},{g},{m},{},{n}\n",
                sigfig::format(b.lower),
                sigfig::format(b.upper),
                sigfig::format_opt(v)
            ));
        }
        s
    }
}

/// Reads the value cells of a bucket CSV written by [`BucketReport::to_csv`].
pub fn read_bucket_csv(text: &str) -> Result<BTreeMap<CellKey, Option<f64>>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != BUCKET_CSV_HEADER {
        return Err(Error::Csv("not a bucket report".into()));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let bucket: usize = rec[0].parse().map_err(|_| Error::Csv("bad bucket index".into()))?;
        let value = match &rec[5] {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|_| Error::Csv(format!("bad value '{v}'")))?),
        };
        out.insert((bucket, rec[3].to_string(), rec[4].to_string()), value);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramCell {
    pub bucket: usize,
    pub group: u32,
    pub counts: Vec<usize>,
}

/// Equal-width histograms of one numeric feature per confidence bucket and
/// group, over the feature's global range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub feature: String,
    pub edges: Vec<f64>,
    pub cells: Vec<HistogramCell>,
}

impl Histograms {
    pub fn total(&self) -> usize {
        self.cells.iter().flat_map(|c| &c.counts).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bucket,group,bin,lower,upper,count\n");
        for c in &self.cells {
            for (b, n) in c.counts.iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{b},{},{},{n}\n",
                    c.bucket,
                    c.group,
                    sigfig::format(self.edges[b]),
                    sigfig::format(self.edges[b + 1])
                ));
            }
        }
        s
    }
}

pub fn feature_histograms(
    d: &Dataset,
    scores: &[f64],
    spec: &BucketSpec,
    feature: &str,
    bins: usize,
) -> Result<Histograms> {
    if d.is_empty() {
        return Err(Error::EmptySubset("histogram of an empty dataset".into()));
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    if scores.len() != d.len() {
        return Err(Error::Length(format!("{} rows but {} scores", d.len(), scores.len())));
    }
    let col = d.schema().numeric_offset(feature)?;
    let values = d.x().column(col).to_vec();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + k as f64 * width })
        .collect();
    let bin_of = |v: f64| {
        if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        }
    };
    let mut groups: Vec<u32> = d.groups().to_vec();
    groups.sort_unstable();
    groups.dedup();
    let mut table: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
    for k in 0..spec.len() {
        for &g in &groups {
            table.insert((k, g), vec![0; bins]);
        }
    }
    for (i, &v) in values.iter().enumerate() {
        let key = (spec.bucket_of(scores[i]), d.groups()[i]);
        table.get_mut(&key).expect("every bucket/group pair exists")[bin_of(v)] += 1;
    }
    Ok(Histograms {
        feature: feature.to_string(),
        edges,
        cells: table
            .into_iter()
            .map(|((bucket, group), counts)| HistogramCell { bucket, group, counts })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Schema;
    use crate::metrics::{confusion, rates};
    use ndarray::Array2;

    #[test]
    fn confidence_is_symmetric() {
        assert_eq!(confidence_from_prob(0.5), 0.5);
        assert_eq!(confidence_from_prob(0.9), 0.9);
        assert!((confidence_from_prob(0.2) - 0.8).abs() < 1e-15);
        for p in [0.01, 0.3, 0.77] {
            assert_eq!(confidence_from_prob(p), confidence_from_prob(1.0 - p));
        }
        let m = LinearClassifier::zeros(2);
        assert_eq!(confidence_of(&m, &[1.0, 2.0]).unwrap(), 0.5);
        assert!(confidence_of(&m, &[1.0]).is_err());
    }

    #[test]
    fn ties_go_high() {
        let s = split_scores(vec![0.55, 0.60, 0.93], 0.6).unwrap();
        assert_eq!(s.low, vec![0]);
        assert_eq!(s.high, vec![1, 2]);
        let all = split_scores(vec![0.5, 0.7, 0.51], 0.5).unwrap();
        assert!(all.low_is_empty());
        assert_eq!(all.high.len(), 3);
        assert!(split_scores(vec![0.7], 1.0).is_err());
        assert!(split_scores(vec![0.7], 0.4).is_err());
        assert_eq!(DEFAULT_THRESHOLD, 0.6);
    }

    #[test]
    fn bucket_spec_rules() {
        let spec = BucketSpec::default();
        assert_eq!(spec.thresholds(), &[0.5, 0.6, 0.7, 0.8]);
        assert_eq!(spec.bucket_of(0.5), 0);
        assert_eq!(spec.bucket_of(0.6), 1);
        assert_eq!(spec.bucket_of(0.7999), 2);
        assert_eq!(spec.bucket_of(0.8), 3);
        assert_eq!(spec.bucket_of(1.0), 3);
        assert_eq!(spec.bounds(3), (0.8, 1.0));
        assert!(BucketSpec::new(vec![0.6, 0.7]).is_err());
        assert!(BucketSpec::new(vec![0.5, 0.7, 0.7]).is_err());
        assert!(BucketSpec::new(vec![0.5, 1.0]).is_err());
    }

    // Rows: (bucket score, group, pred, label)
    const FIXTURE: [(f64, u32, u8, u8); 12] = [
        (0.52, 0, 1, 1),
        (0.55, 1, 0, 1),
        (0.58, 0, 0, 0),
        (0.61, 0, 1, 0),
        (0.65, 1, 1, 1),
        (0.69, 1, 0, 0),
        (0.70, 0, 1, 1),
        (0.75, 1, 0, 1),
        (0.79, 0, 0, 1),
        (0.80, 1, 1, 0),
        (0.90, 0, 1, 1),
        (0.99, 1, 0, 0),
    ];

    fn fixture_cols() -> (Vec<f64>, Vec<u32>, Vec<u8>, Vec<u8>) {
        (
            FIXTURE.iter().map(|r| r.0).collect(),
            FIXTURE.iter().map(|r| r.1).collect(),
            FIXTURE.iter().map(|r| r.2).collect(),
            FIXTURE.iter().map(|r| r.3).collect(),
        )
    }

    #[test]
    fn twelve_row_fixture_matches_hand_counts() {
        let (s, g, p, y) = fixture_cols();
        let rep = bucket_analysis_raw(&y, &g, &p, &s, &BucketSpec::default(), 0, 1).unwrap();
        // bucket 0: g0 rows (1,1),(0,0) -> tpr 1, tnr 1; g1 row (0,1) -> tpr 0, tnr undefined
        let b0 = &rep.buckets[0];
        assert_eq!(b0.gap(RateName::Tpr), Some(1.0));
        assert_eq!(b0.gap(RateName::Fnr), Some(-1.0));
        assert_eq!(b0.gap(RateName::Tnr), None);
        // bucket 1: g0 (1,0) -> fpr 1, tpr undefined; g1 (1,1),(0,0) -> tpr 1, fpr 0
        let b1 = &rep.buckets[1];
        assert_eq!(b1.gap(RateName::Fpr), Some(1.0));
        assert_eq!(b1.gap(RateName::Tnr), Some(-1.0));
        assert_eq!(b1.gap(RateName::Tpr), None);
        // bucket 2: g0 (1,1),(0,1) -> tpr .5; g1 (0,1) -> tpr 0
        let b2 = &rep.buckets[2];
        assert_eq!(b2.gap(RateName::Tpr), Some(0.5));
        assert_eq!(b2.gap(RateName::Fnr), Some(-0.5));
        assert_eq!(b2.gap(RateName::Fpr), None);
        // bucket 3: g0 (1,1) ; g1 (1,0),(0,0) -> fpr .5
        let b3 = &rep.buckets[3];
        assert_eq!(b3.gap(RateName::Tpr), None);
        assert_eq!(b3.rates[&1].fpr, Some(0.5));
        let sizes: Vec<u64> = rep.buckets.iter().map(Bucket::size).collect();
        assert_eq!(sizes, vec![3, 3, 3, 3]);
    }

    #[test]
    fn buckets_merge_back_to_whole_set() {
        let (s, g, p, y) = fixture_cols();
        let rep = bucket_analysis_raw(&y, &g, &p, &s, &BucketSpec::default(), 0, 1).unwrap();
        let mut merged: BTreeMap<u32, Counts> = BTreeMap::new();
        for b in &rep.buckets {
            for (gid, c) in &b.counts {
                merged.entry(*gid).or_default().merge(c);
            }
        }
        assert_eq!(merged, confusion(&p, &y, &g).unwrap());
        let single = BucketSpec::new(vec![0.5]).unwrap();
        let one = bucket_analysis_raw(&y, &g, &p, &s, &single, 0, 1).unwrap();
        assert_eq!(one.buckets[0].rates, rates(&confusion(&p, &y, &g).unwrap()));
    }

    #[test]
    fn perfect_predictions_zero_gaps() {
        let (s, g, _, y) = fixture_cols();
        let rep = bucket_analysis_raw(&y, &g, &y, &s, &BucketSpec::default(), 0, 1).unwrap();
        for b in &rep.buckets {
            for v in b.gaps.values().flatten() {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(bucket_analysis_raw(&y, &g, &y[1..], &s, &BucketSpec::default(), 0, 1).is_err());
    }

    #[test]
    fn csv_roundtrip_to_twelve_digits() {
        let (s, g, p, y) = fixture_cols();
        let mut y = y;
        y[0] = 0;
        let rep = bucket_analysis_raw(&y, &g, &p, &s, &BucketSpec::default(), 0, 1).unwrap();
        let back = read_bucket_csv(&rep.to_csv()).unwrap();
        let cells = rep.cells();
        assert_eq!(back.len(), cells.len());
        for (k, v) in cells {
            assert_eq!(back[&k], v.map(sigfig::round), "{k:?}");
        }
    }

    fn one_feature(values: &[f64], groups: &[u32]) -> Dataset {
        let x = Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap();
        Dataset::new(x, vec![0; values.len()], groups.to_vec(), vec!["a".into(), "b".into()], Schema::numeric(1)).unwrap()
    }

    #[test]
    fn histogram_split_at_midpoint() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        let d = one_feature(&v, &[0; 10]);
        let h = feature_histograms(&d, &[0.55; 10], &BucketSpec::default(), "x0", 2).unwrap();
        assert_eq!(h.edges, vec![1.0, 5.5, 10.0]);
        let cell = h.cells.iter().find(|c| c.bucket == 0).unwrap();
        assert_eq!(cell.counts, vec![5, 5]);
        assert_eq!(h.total(), 10);
    }

    #[test]
    fn histogram_constant_feature_and_partition() {
        let d = one_feature(&[3.0; 6], &[0, 1, 0, 1, 0, 1]);
        let scores = [0.5, 0.62, 0.71, 0.85, 0.99, 0.6];
        let h = feature_histograms(&d, &scores, &BucketSpec::default(), "x0", 4).unwrap();
        assert_eq!(h.total(), 6);
        assert!(h.cells.iter().all(|c| c.counts[1..].iter().all(|&n| n == 0)));
        assert!(feature_histograms(&d, &scores, &BucketSpec::default(), "label", 4).is_err());
        assert!(feature_histograms(&d, &scores, &BucketSpec::default(), "x0", 0).is_err());
    }
}
