//! Report files: `reports.jsonl`, `summary.csv` and `summary.json`.

use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Format;
use super::run::{Record, RunOutput};
use crate::error::Result;

pub const JSONL_FILE: &str = "reports.jsonl";
pub const CSV_FILE: &str = "summary.csv";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn write_jsonl<W: Write>(records: &[Record], w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub suite: String,
    pub manifold: String,
    pub n: usize,
    pub theta: f64,
    pub reports: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_relative_deficit: f64,
    pub constant_min: f64,
    pub constant_max: f64,
}

/// One row per distinct (suite, manifold), in first-seen order.
pub fn csv_rows(records: &[Record]) -> Vec<CsvRow> {
    let mut rows: Vec<CsvRow> = Vec::new();
    for r in records {
        let label = r.report.manifold.label();
        let rep = &r.report;
        let row = match rows.iter_mut().find(|x| x.suite == r.suite && x.manifold == label) {
            Some(row) => row,
            None => {
                rows.push(CsvRow {
                    suite: r.suite.clone(),
                    manifold: label,
                    n: rep.n,
                    theta: rep.theta,
                    reports: 0,
                    passed: 0,
                    failed: 0,
                    worst_relative_deficit: f64::INFINITY,
                    constant_min: f64::INFINITY,
                    constant_max: f64::NEG_INFINITY,
                });
                rows.last_mut().expect("row just pushed")
            }
        };
        row.reports += 1;
        if rep.pass {
            row.passed += 1;
        } else {
            row.failed += 1;
        }
        row.worst_relative_deficit = row.worst_relative_deficit.min(rep.relative_deficit);
        row.constant_min = row.constant_min.min(rep.constant);
        row.constant_max = row.constant_max.max(rep.constant);
    }
    rows
}

pub fn write_csv<W: Write>(records: &[Record], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in csv_rows(records) {
        out.serialize(row).map_err(std::io::Error::other)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the requested formats plus `summary.json` into `dir`, returning
/// the paths written.
pub fn emit(out: &RunOutput, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            Format::Jsonl => {
                let path = dir.join(JSONL_FILE);
                write_jsonl(&out.records, fs::File::create(&path)?)?;
                path
            }
            Format::Csv => {
                let path = dir.join(CSV_FILE);
                write_csv(&out.records, fs::File::create(&path)?)?;
                path
            }
        };
        written.push(path);
    }
    let path = dir.join(SUMMARY_FILE);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, &out.summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    written.push(path);
    Ok(written)
}
