//! Reproducible experiment driver for the `quantflow` library.
//!
//! Every run reads a flat config, validates all parameters, writes its
//! plot data as CSV into the output directory and finishes with a
//! `report.json` that echoes the resolved config and lists the threshold
//! checks. Failed runs leave an `error.json` record instead.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

use std::path::Path;
use std::time::Instant;

pub use config::Config;
pub use error::{CliError, ErrorRecord, EXIT_INPUT, EXIT_NUMERICAL, EXIT_PASS, EXIT_THRESHOLD};
pub use report::{Outputs, RunReport, Threshold};

/// Runs `experiment` and writes `report.json` into `out_dir`.
pub fn run(experiment: &str, cfg: &Config, out_dir: &Path) -> Result<RunReport, CliError> {
    let start = Instant::now();
    if !experiments::NAMES.contains(&experiment) {
        return Err(CliError::Input(format!("unknown experiment `{experiment}`")));
    }
    let seed = cfg.u64("seed", 0)?;
    let mut out = Outputs::new(out_dir)?;
    experiments::dispatch(experiment, cfg, seed, &mut out)?;
    let mut report = out.finish(experiment, seed, cfg.resolved(), start.elapsed().as_secs_f64());
    report.files.push("report.json".into());
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(out_dir.join("report.json"), text + "\n")?;
    Ok(report)
}

/// Writes `error.json` next to where the report would have gone. Failure to
/// write it is ignored because the error is also printed.
pub fn write_error(experiment: &str, err: &CliError, out_dir: &Path) {
    if std::fs::create_dir_all(out_dir).is_ok() {
        if let Ok(text) = serde_json::to_string_pretty(&err.record(experiment)) {
            let _ = std::fs::write(out_dir.join("error.json"), text + "\n");
        }
    }
}

pub fn exit_code(report: &RunReport) -> i32 {
    if report.passed {
        EXIT_PASS
    } else {
        EXIT_THRESHOLD
    }
}
