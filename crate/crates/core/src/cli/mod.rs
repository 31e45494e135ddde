//! Command-line front end: `train`, `audit`, `synth` and `sweep`.
//!
//! Each `cmd_*` function returns a process exit code: 0 on success, 1 for
//! configuration errors, 2 for data errors and 3 for numeric failures. A
//! failure also prints one `error kind=<kind> code=<n> reason="<text>"` line
//! to stderr.

mod args;
mod audit;
mod run;
mod sweep;
mod synth;

use std::path::Path;

use sha2::{Digest, Sha256};

pub use args::{main_from_args, Cli, Command};
pub use audit::{cmd_audit, run_audit, AuditOpts, AuditSummary};
pub use run::{cmd_train, run_train, RunConfig, RunManifest, RunSummary, TrainOpts, ARTIFACTS};
pub use sweep::{cmd_sweep, run_sweep, SweepGrid, SweepOpts};
pub use synth::{cmd_synth, run_synth, SynthOpts};

use crate::error::{Error, ErrorKind, Result};

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numeric => 3,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Config => "config",
        ErrorKind::Data => "data",
        ErrorKind::Numeric => "numeric",
    }
}

/// The one-line stderr diagnostic for `e`.
pub fn error_line(e: &Error) -> String {
    let kind = e.kind();
    format!("error kind={} code={} reason={:?}", kind_name(kind), exit_code(kind), e.to_string())
}

fn finish<T>(r: Result<T>) -> i32 {
    match r {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            exit_code(e.kind())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

/// Reads a configuration file; failures are configuration errors.
fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.into(),
            source: e,
        })?;
    }
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Resolves an optional pair of group names to ids; the two largest groups
/// when unset.
fn resolve_pair(names: Option<&[String; 2]>, known: &[String], groups: &[u32]) -> Result<(u32, u32)> {
    match names {
        None => crate::metrics::default_group_pair(groups),
        Some([a, b]) => {
            let id = |n: &String| {
                known
                    .iter()
                    .position(|k| k == n)
                    .map(|i| i as u32)
                    .ok_or_else(|| Error::Config(format!("unknown group '{n}'")))
            };
            Ok((id(a)?, id(b)?))
        }
    }
}
