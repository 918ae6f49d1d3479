use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value as Json;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Threshold {
    pub name: String,
    pub observed: f64,
    /// Human-readable condition, e.g. `<= 1e-3`.
    pub condition: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub config: BTreeMap<String, Json>,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub metrics: BTreeMap<String, Json>,
    pub thresholds: Vec<Threshold>,
    pub notes: Vec<String>,
    pub passed: bool,
}

/// Collects metrics, threshold checks and output files for one run.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
    metrics: BTreeMap<String, Json>,
    thresholds: Vec<Threshold>,
    notes: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            metrics: BTreeMap::new(),
            thresholds: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Creates `name` in the output directory and hands a buffered writer to
    /// `body`.
    pub fn file<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes rows with the `csv` writer: a header, then one record per row.
    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        self.file(name, |w| {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(header).map_err(csv_error)?;
            for row in rows {
                out.write_record(&row).map_err(csv_error)?;
            }
            out.flush()?;
            Ok(())
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Json>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn check(&mut self, name: &str, observed: f64, condition: impl Into<String>, pass: bool) {
        self.thresholds.push(Threshold {
            name: name.to_string(),
            observed,
            condition: condition.into(),
            pass,
        });
    }

    pub fn at_most(&mut self, name: &str, observed: f64, bound: f64) {
        self.check(name, observed, format!("<= {bound:e}"), observed <= bound);
    }

    pub fn at_least(&mut self, name: &str, observed: f64, bound: f64) {
        self.check(name, observed, format!(">= {bound:e}"), observed >= bound);
    }

    pub fn within(&mut self, name: &str, observed: f64, target: f64, tolerance: f64) {
        self.check(
            name,
            observed,
            format!("{target} +/- {tolerance}"),
            (observed - target).abs() <= tolerance,
        );
    }

    pub fn flag(&mut self, name: &str, ok: bool) {
        self.check(name, if ok { 1.0 } else { 0.0 }, "true", ok);
    }

    pub fn finish(
        self,
        experiment: &str,
        seed: u64,
        config: BTreeMap<String, Json>,
        wall_time_s: f64,
    ) -> RunReport {
        let passed = self.thresholds.iter().all(|t| t.pass);
        RunReport {
            experiment: experiment.to_string(),
            seed,
            config,
            wall_time_s,
            files: self.files,
            metrics: self.metrics,
            thresholds: self.thresholds,
            notes: self.notes,
            passed,
        }
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Input(format!("output: {e}"))
}
