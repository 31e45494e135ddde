use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{finish, read_config, to_json, write_text};
use crate::data::{synth_biased, Schema, SynthConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct SynthOpts {
    pub config: PathBuf,
    /// CSV destination; sidecars go next to it.
    pub out: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a SynthConfig,
    clean_labels: &'a [u8],
}

/// Path of a sidecar file next to `csv`, e.g. `data.csv` → `data.meta.json`.
pub fn sidecar_path(csv: &Path, suffix: &str) -> PathBuf {
    csv.with_extension(format!("{suffix}.json"))
}

pub fn cmd_synth(opts: &SynthOpts) -> i32 {
    finish(run_synth(opts))
}

/// Writes the CSV plus `<name>.schema.json` and `<name>.meta.json` (the
/// generator settings and the labels before flipping).
pub fn run_synth(opts: &SynthOpts) -> Result<()> {
    let mut cfg: SynthConfig =
        serde_json::from_str(&read_config(&opts.config)?).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let sd = synth_biased(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let d = &sd.data;
    let schema = Schema::numeric(cfg.m_numeric);
    let mut csv: String = schema.columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(",");
    csv.push('\n');
    for i in 0..d.len() {
        for v in d.row(i) {
            csv.push_str(&format!("{v},"));
        }
        csv.push_str(&format!("{},{}\n", d.labels()[i], d.group_names()[d.groups()[i] as usize]));
    }
    write_text(&opts.out, &csv)?;
    write_text(&sidecar_path(&opts.out, "schema"), &to_json(&schema))?;
    let meta = Sidecar {
        config: &cfg,
        clean_labels: &sd.clean_labels,
    };
    write_text(&sidecar_path(&opts.out, "meta"), &(serde_json::to_string(&meta)? + "\n"))?;
    Ok(())
}
