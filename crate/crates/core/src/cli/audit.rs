use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use super::{finish, read_text, resolve_pair, sha256_hex, to_json, write_text};
use crate::confidence::{bucket_analysis_raw, confidence_from_prob, feature_histograms, BucketReport, BucketSpec};
use crate::data::load_csv_str;
use crate::error::{Error, Result};
use crate::metrics::FairnessReport;
use crate::reckoner::Checkpoint;

#[derive(Debug, Clone, Default)]
pub struct AuditOpts {
    /// CSV with `label`, `prediction` and `group` columns and an optional
    /// `score` column holding the positive-class probability.
    pub predictions: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub feature: Option<String>,
    pub bins: Option<usize>,
    pub buckets: Option<Vec<f64>>,
    pub groups: Option<[String; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub fairness: FairnessReport,
    pub buckets: Option<BucketReport>,
}

#[derive(Serialize)]
struct AuditReport<'a> {
    /// SHA-256 over the hashes of the audited input files.
    source_hash: String,
    group_names: BTreeMap<String, String>,
    fairness: &'a FairnessReport,
}

struct Columns {
    labels: Vec<u8>,
    preds: Vec<u8>,
    groups: Vec<u32>,
    names: Vec<String>,
    probs: Option<Vec<f64>>,
}

fn parse_bit(v: &str, what: &str) -> Result<u8> {
    match v.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Invalid(format!("{what} '{other}' is not 0 or 1"))),
    }
}

fn read_predictions(text: &str) -> Result<Columns> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |n: &str| header.iter().position(|h| h == n);
    let need = |n: &str| col(n).ok_or_else(|| Error::Csv(format!("predictions file lacks a '{n}' column")));
    let (li, pi, gi, si) = (need("label")?, need("prediction")?, need("group")?, col("score"));
    let mut c = Columns {
        labels: Vec::new(),
        preds: Vec::new(),
        groups: Vec::new(),
        names: Vec::new(),
        probs: si.map(|_| Vec::new()),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        c.labels.push(parse_bit(&rec[li], "label")?);
        c.preds.push(parse_bit(&rec[pi], "prediction")?);
        let g = &rec[gi];
        let id = match c.names.iter().position(|n| n == g) {
            Some(i) => i,
            None => {
                c.names.push(g.to_string());
                c.names.len() - 1
            }
        };
        c.groups.push(id as u32);
        if let (Some(i), Some(p)) = (si, c.probs.as_mut()) {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| Error::Csv(format!("bad score '{}'", &rec[i])))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("score {v} is not a probability")));
            }
            p.push(v);
        }
    }
    if c.labels.is_empty() {
        return Err(Error::Csv("predictions file has no rows".into()));
    }
    Ok(c)
}

pub fn cmd_audit(opts: &AuditOpts) -> i32 {
    finish(run_audit(opts))
}

pub fn run_audit(opts: &AuditOpts) -> Result<AuditSummary> {
    let spec = match &opts.buckets {
        Some(t) => BucketSpec::new(t.clone())?,
        None => BucketSpec::default(),
    };
    let (cols, hashes, histograms) = match (&opts.predictions, &opts.checkpoint, &opts.data) {
        (Some(p), None, None) => {
            if opts.feature.is_some() {
                return Err(Error::Config("feature histograms need --checkpoint and --data".into()));
            }
            let text = read_text(p)?;
            (read_predictions(&text)?, vec![sha256_hex(text.as_bytes())], None)
        }
        (None, Some(c), Some(d)) => {
            let ck_text = read_text(c)?;
            let ckpt = Checkpoint::from_json(&ck_text)?;
            let data_text = read_text(d)?;
            let data = load_csv_str(&data_text, &ckpt.schema)?;
            let (preds, probs) = ckpt.predict_dataset(&data)?;
            let hist = match &opts.feature {
                Some(f) => {
                    let conf: Vec<f64> = probs.iter().map(|&p| confidence_from_prob(p)).collect();
                    Some(feature_histograms(&data, &conf, &spec, f, opts.bins.unwrap_or(10))?)
                }
                None => None,
            };
            let cols = Columns {
                labels: data.labels().to_vec(),
                preds,
                groups: data.groups().to_vec(),
                names: data.group_names().to_vec(),
                probs: Some(probs),
            };
            (cols, vec![sha256_hex(ck_text.as_bytes()), sha256_hex(data_text.as_bytes())], hist)
        }
        _ => {
            return Err(Error::Config(
                "audit needs either --predictions or both --checkpoint and --data".into(),
            ))
        }
    };
    let pair = resolve_pair(opts.groups.as_ref(), &cols.names, &cols.groups)?;
    let fairness = FairnessReport::compute(&cols.preds, &cols.labels, &cols.groups, Some(pair))?;
    let report = AuditReport {
        source_hash: sha256_hex(hashes.concat().as_bytes()),
        group_names: cols.names.iter().enumerate().map(|(i, n)| (i.to_string(), n.clone())).collect(),
        fairness: &fairness,
    };
    write_text(&opts.out.join("audit_report.json"), &to_json(&report))?;
    let buckets = match &cols.probs {
        Some(p) => {
            let conf: Vec<f64> = p.iter().map(|&v| confidence_from_prob(v)).collect();
            let rep = bucket_analysis_raw(&cols.labels, &cols.groups, &cols.preds, &conf, &spec, pair.0, pair.1)?;
            write_text(&opts.out.join("buckets.csv"), &rep.to_csv())?;
            write_text(&opts.out.join("buckets.json"), &to_json(&rep))?;
            Some(rep)
        }
        None => {
            log::warn!("no score column; confidence buckets skipped");
            None
        }
    };
    if let Some(h) = histograms {
        write_text(&opts.out.join("histograms.csv"), &h.to_csv())?;
        write_text(&opts.out.join("histograms.json"), &to_json(&h))?;
    }
    Ok(AuditSummary { fairness, buckets })
}
