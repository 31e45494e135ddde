use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{finish, read_config, read_text, resolve_pair, sha256_hex, to_json, write_text};
use crate::data::{load_csv_str, Dataset, Schema, SplitSpec, Standardizer};
use crate::error::{Error, Result};
use crate::metrics::FairnessReport;
use crate::reckoner::{train, Checkpoint, TrainConfig};
use crate::sigfig;

/// Artifact file names written into a run directory.
pub const ARTIFACTS: [(&str, &str); 5] = [
    ("checkpoint", "checkpoint.json"),
    ("training_log", "train_log.jsonl"),
    ("report", "report.json"),
    ("predictions", "predictions.csv"),
    ("manifest", "manifest.json"),
];

fn artifact(name: &str) -> &'static str {
    ARTIFACTS.iter().find(|(k, _)| *k == name).map(|(_, v)| *v).expect("known artifact")
}

/// Contents of a `train` configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: Schema,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub train: TrainConfig,
    /// Names of the two groups compared in fairness reports.
    #[serde(default)]
    pub fairness_groups: Option<[String; 2]>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let run: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        run.schema.validate()?;
        run.split.validate()?;
        run.train.validate()?;
        Ok(run)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub train: u64,
    pub split: u64,
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: TrainConfig,
    pub config_hash: String,
    pub schema: Schema,
    pub split: SplitSpec,
    /// SHA-256 of the data file bytes.
    pub dataset_fingerprint: String,
    pub seeds: Seeds,
    pub group_pair: [String; 2],
    /// Artifact file names, relative to the run directory.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("serializable").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct TrainReport<'a> {
    manifest_hash: &'a str,
    split: &'static str,
    rows: usize,
    group_names: BTreeMap<String, String>,
    fairness: &'a FairnessReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub manifest_hash: String,
    pub fairness: FairnessReport,
}

#[derive(Debug, Clone, Default)]
pub struct TrainOpts {
    pub config: PathBuf,
    pub data: PathBuf,
    pub out: PathBuf,
    /// Overrides both the training and the split seed.
    pub seed: Option<u64>,
    pub no_noise: bool,
    pub no_pseudo: bool,
    pub alpha: Option<f64>,
}

pub fn cmd_train(opts: &TrainOpts) -> i32 {
    finish(run_train(opts))
}

pub fn run_train(opts: &TrainOpts) -> Result<RunSummary> {
    let mut run = RunConfig::from_json(&read_config(&opts.config)?)?;
    if let Some(seed) = opts.seed {
        run.train.seed = seed;
        run.split.seed = seed;
    }
    if opts.no_noise {
        run.train.use_noise = false;
    }
    if opts.no_pseudo {
        run.train.use_pseudo_learning = false;
    }
    if let Some(a) = opts.alpha {
        run.train.alpha = a;
    }
    run.train.validate()?;
    let text = read_text(&opts.data)?;
    let data = load_csv_str(&text, &run.schema)?;
    train_pipeline(&run, &data, &sha256_hex(text.as_bytes()), &opts.out)
}

/// Splits, standardizes, trains and writes every run artifact into `out`.
pub(crate) fn train_pipeline(run: &RunConfig, data: &Dataset, fingerprint: &str, out: &Path) -> Result<RunSummary> {
    let [tr, va, te] = run.split.partition(data.len())?;
    let train_raw = data.select(&tr);
    let st = Standardizer::fit(&train_raw)?;
    let (train_set, valid, test) = (st.apply(&train_raw)?, st.apply(&data.select(&va))?, st.apply(&data.select(&te))?);
    let pair = resolve_pair(run.fairness_groups.as_ref(), data.group_names(), test.groups())?;
    let names = data.group_names();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: run.train.config_hash(),
        config: run.train.clone(),
        schema: run.schema.clone(),
        split: run.split,
        dataset_fingerprint: fingerprint.to_string(),
        seeds: Seeds {
            train: run.train.seed,
            split: run.split.seed,
        },
        group_pair: [names[pair.0 as usize].clone(), names[pair.1 as usize].clone()],
        artifacts: ARTIFACTS
            .iter()
            .filter(|(k, _)| *k != "manifest")
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
    };
    let manifest_hash = manifest.hash();

    let model = train(&train_set, &valid, &run.train)?;
    let (preds, scores) = model.predict(test.x())?;
    let fairness = FairnessReport::compute(&preds, test.labels(), test.groups(), Some(pair))?;

    let log: String = model
        .history()
        .iter()
        .map(|e| serde_json::to_string(e).expect("serializable") + "\n")
        .collect();
    let mut csv = String::from("row,group,label,prediction,score\n");
    for (i, &row) in te.iter().enumerate() {
        csv.push_str(&format!(
            "{row},{},{},{},{}\n",
            names[test.groups()[i] as usize],
            test.labels()[i],
            preds[i],
            sigfig::format(scores[i])
        ));
    }
    let report = TrainReport {
        manifest_hash: &manifest_hash,
        split: "test",
        rows: test.len(),
        group_names: names.iter().enumerate().map(|(i, n)| (i.to_string(), n.clone())).collect(),
        fairness: &fairness,
    };
    let checkpoint = Checkpoint::from_model(&model, &run.schema, Some(&st));
    write_text(&out.join(artifact("checkpoint")), &(checkpoint.to_json() + "\n"))?;
    write_text(&out.join(artifact("training_log")), &log)?;
    write_text(&out.join(artifact("predictions")), &csv)?;
    write_text(&out.join(artifact("report")), &to_json(&report))?;
    write_text(&out.join(artifact("manifest")), &to_json(&manifest))?;
    log::info!("run {manifest_hash} written to {}", out.display());
    Ok(RunSummary { manifest_hash, fairness })
}
