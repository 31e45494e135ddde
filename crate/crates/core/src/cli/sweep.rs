use std::path::PathBuf;

use serde::Deserialize;

use super::run::train_pipeline;
use super::{error_line, finish, read_config, read_text, sha256_hex, write_text, RunConfig};
use crate::data::load_csv_str;
use crate::error::{Error, Result};
use crate::parallel::{map_items, Execution};
use crate::sigfig;

/// Values to cross for each swept setting; unset keys keep the base value.
/// `seed` sets both the training and the split seed.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub alpha: Option<Vec<f64>>,
    pub confidence_threshold: Option<Vec<f64>>,
    pub seed: Option<Vec<u64>>,
    pub use_noise: Option<Vec<bool>>,
    pub use_pseudo_learning: Option<Vec<bool>>,
    pub init_on_full_set: Option<Vec<bool>>,
}

impl SweepGrid {
    /// Cartesian product over the set keys, in key order with the last key
    /// varying fastest.
    pub fn points(&self, base: &RunConfig) -> Result<Vec<RunConfig>> {
        let axes = [
            self.alpha.as_ref().map(Vec::len),
            self.confidence_threshold.as_ref().map(Vec::len),
            self.seed.as_ref().map(Vec::len),
            self.use_noise.as_ref().map(Vec::len),
            self.use_pseudo_learning.as_ref().map(Vec::len),
            self.init_on_full_set.as_ref().map(Vec::len),
        ];
        if axes.iter().all(Option::is_none) || axes.contains(&Some(0)) {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        let mut points = vec![base.clone()];
        fn cross<T: Copy>(points: Vec<RunConfig>, values: &Option<Vec<T>>, set: impl Fn(&mut RunConfig, T)) -> Vec<RunConfig> {
            let Some(values) = values else { return points };
            points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(|&v| {
                        let mut q = p.clone();
                        set(&mut q, v);
                        q
                    }).collect::<Vec<_>>()
                })
                .collect()
        }
        points = cross(points, &self.alpha, |r, v| r.train.alpha = v);
        points = cross(points, &self.confidence_threshold, |r, v| r.train.confidence_threshold = v);
        points = cross(points, &self.seed, |r, v| {
            r.train.seed = v;
            r.split.seed = v;
        });
        points = cross(points, &self.use_noise, |r, v| r.train.use_noise = v);
        points = cross(points, &self.use_pseudo_learning, |r, v| r.train.use_pseudo_learning = v);
        points = cross(points, &self.init_on_full_set, |r, v| r.train.init_on_full_set = v);
        Ok(points)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOpts {
    pub config: PathBuf,
    pub grid: PathBuf,
    pub data: PathBuf,
    pub out: PathBuf,
}

pub fn cmd_sweep(opts: &SweepOpts) -> i32 {
    finish(run_sweep(opts))
}

/// Runs every grid point into `out/point-NNNN` and writes `out/summary.csv`.
/// Fails only when no point succeeds.
pub fn run_sweep(opts: &SweepOpts) -> Result<usize> {
    let base = RunConfig::from_json(&read_config(&opts.config)?)?;
    let grid: SweepGrid =
        serde_json::from_str(&read_config(&opts.grid)?).map_err(|e| Error::Config(e.to_string()))?;
    let points = grid.points(&base)?;
    let text = read_text(&opts.data)?;
    let data = load_csv_str(&text, &base.schema)?;
    let fingerprint = sha256_hex(text.as_bytes());
    let jobs: Vec<(usize, RunConfig)> = points.into_iter().enumerate().collect();
    let results = map_items(jobs, Execution::default(), |(i, run): (usize, RunConfig)| {
        let r = run
            .train
            .validate()
            .and_then(|_| train_pipeline(&run, &data, &fingerprint, &opts.out.join(format!("point-{i:04}"))));
        (i, run, r)
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record([
        "point",
        "alpha",
        "confidence_threshold",
        "seed",
        "use_noise",
        "use_pseudo_learning",
        "init_on_full_set",
        "status",
        "accuracy",
        "demographic_parity",
        "equalized_odds",
        "manifest_hash",
        "error",
    ])
    .map_err(csv_err)?;
    let mut ok = 0;
    let mut first_err = None;
    for (i, run, r) in results {
        let t = &run.train;
        let mut row = vec![
            i.to_string(),
            sigfig::format(t.alpha),
            sigfig::format(t.confidence_threshold),
            t.seed.to_string(),
            t.use_noise.to_string(),
            t.use_pseudo_learning.to_string(),
            t.init_on_full_set.to_string(),
        ];
        match r {
            Ok(s) => {
                ok += 1;
                row.extend([
                    "ok".to_string(),
                    sigfig::format(s.fairness.accuracy),
                    sigfig::format(s.fairness.demographic_parity),
                    sigfig::format_opt(s.fairness.equalized_odds),
                    s.manifest_hash,
                    String::new(),
                ]);
            }
            Err(e) => {
                log::warn!("sweep point {i}: {}", error_line(&e));
                row.extend(["failed".to_string(), String::new(), String::new(), String::new(), String::new(), e.to_string()]);
                first_err.get_or_insert(e);
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    write_text(&opts.out.join("summary.csv"), &String::from_utf8(bytes).expect("utf-8"))?;
    match (ok, first_err) {
        (0, Some(e)) => Err(e),
        _ => Ok(ok),
    }
}
