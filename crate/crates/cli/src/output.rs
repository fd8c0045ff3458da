use std::fs;
use std::io::Write;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{Format, RunConfig};

/// A plot-ready table for `--format csv`.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

/// Render a value for a CSV cell; floats use shortest round-trip form.
#[macro_export]
macro_rules! cells {
    ($($v:expr),* $(,)?) => { vec![$(format!("{}", $v)),*] };
}

pub struct Outcome {
    pub report: serde_json::Value,
    pub table: Table,
    pub passed: bool,
}

impl Outcome {
    pub fn new(report: impl Serialize, table: Table, passed: bool) -> Result<Self> {
        Ok(Outcome {
            report: serde_json::to_value(report)?,
            table,
            passed,
        })
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    passed: bool,
    report: &'a serde_json::Value,
}

pub fn render(config: &RunConfig, outcome: &Outcome) -> Result<Vec<u8>> {
    match config.format {
        Format::Json => {
            let env = Envelope {
                tool: env!("CARGO_BIN_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                config,
                passed: outcome.passed,
                report: &outcome.report,
            };
            let mut out = serde_json::to_vec_pretty(&env)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&outcome.table.header)?;
            for row in &outcome.table.rows {
                w.write_record(row)?;
            }
            Ok(w.into_inner().context("flushing CSV")?)
        }
    }
}

pub fn emit(config: &RunConfig, outcome: &Outcome) -> Result<()> {
    let bytes = render(config, outcome)?;
    match &config.output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            Ok(out.flush()?)
        }
    }
}
