//! Sweep records on disk.
//!
//! CSV columns are fixed:
//! `P,sigma,j0,energy,orientation,alignment,pop_0..pop_K,c_abs_0..c_abs_K`
//! with `K` the largest `j_max` in the sweep; levels above a point's own
//! basis are written as zero. Floats carry 17 significant digits so files
//! read back bit-exactly. The JSON file holds the same rows plus a metadata
//! block. Drop loci, surface minima, the line fit and failed points go to
//! separate files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::write_file;
use crate::sweep::{GridPoint, SweepResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(Error::domain(format!("unknown output format '{other}'"))),
        }
    }
}

/// Provenance written alongside the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// Fully resolved run configuration, `key -> value`.
    pub config: BTreeMap<String, String>,
    pub code_version: String,
    /// Unix seconds; `None` is written as `null`.
    pub timestamp: Option<u64>,
}

impl RunMetadata {
    /// Current crate version; the timestamp honours `SOURCE_DATE_EPOCH`
    /// so repeated runs can produce identical files.
    pub fn new(config: BTreeMap<String, String>) -> Self {
        let timestamp = match std::env::var("SOURCE_DATE_EPOCH") {
            Ok(v) => v.trim().parse().ok(),
            Err(_) => std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs()),
        };
        Self { config, code_version: env!("CARGO_PKG_VERSION").to_string(), timestamp }
    }
}

/// One CSV/JSON row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    #[serde(rename = "P")]
    pub p: f64,
    pub sigma: f64,
    pub j0: usize,
    pub energy: f64,
    pub orientation: f64,
    pub alignment: f64,
    pub pop: Vec<f64>,
    pub c_abs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsFile {
    pub metadata: RunMetadata,
    pub columns: Vec<String>,
    pub records: Vec<RecordRow>,
}

pub fn rows(result: &SweepResult) -> Vec<RecordRow> {
    let width = result.max_j_max().map_or(0, |k| k + 1);
    result
        .records()
        .map(|r| {
            let mut pop = r.observables.populations.clone();
            let mut c_abs = r.c_abs();
            pop.resize(width, 0.0);
            c_abs.resize(width, 0.0);
            RecordRow {
                p: r.p,
                sigma: r.sigma,
                j0: r.j0,
                energy: r.observables.kinetic_energy,
                orientation: r.observables.orientation,
                alignment: r.observables.alignment,
                pop,
                c_abs,
            }
        })
        .collect()
}

pub fn columns(levels: usize) -> Vec<String> {
    let mut cols: Vec<String> =
        ["P", "sigma", "j0", "energy", "orientation", "alignment"].iter().map(|s| s.to_string()).collect();
    cols.extend((0..levels).map(|j| format!("pop_{j}")));
    cols.extend((0..levels).map(|j| format!("c_abs_{j}")));
    cols
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_rows(result: &SweepResult) -> String {
    let rows = rows(result);
    let levels = rows.first().map_or(0, |r| r.pop.len());
    let mut out = columns(levels).join(",");
    out.push('\n');
    for r in &rows {
        let mut fields = vec![num(r.p), num(r.sigma), r.j0.to_string(), num(r.energy), num(r.orientation), num(r.alignment)];
        fields.extend(r.pop.iter().map(|&x| num(x)));
        fields.extend(r.c_abs.iter().map(|&x| num(x)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

fn points_csv(points: &[GridPoint]) -> String {
    let mut out = String::from("P,sigma,energy\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", num(p.p), num(p.sigma), num(p.energy));
    }
    out
}

fn failures_csv(result: &SweepResult) -> String {
    let mut out = String::from("P,sigma,reason\n");
    for f in result.failures() {
        let _ = writeln!(out, "{},{},\"{}\"", num(f.p), num(f.sigma), f.reason.replace('"', "'"));
    }
    out
}

/// Writes the record files for `format` into `dir` and returns their paths.
/// SVG output is handled by [`super::write_plots`].
pub fn write_records(result: &SweepResult, format: Format, dir: &Path, metadata: &RunMetadata) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &body)?;
        written.push(path);
        Ok(())
    };
    match format {
        Format::Csv => {
            put("records.csv", csv_rows(result))?;
            put("drops.csv", points_csv(&result.drop_loci))?;
            put("minima.csv", points_csv(&result.minima_2d))?;
            put("failures.csv", failures_csv(result))?;
        }
        Format::Json => {
            let rows = rows(result);
            let levels = rows.first().map_or(0, |r| r.pop.len());
            let file = RecordsFile { metadata: metadata.clone(), columns: columns(levels), records: rows };
            put("records.json", serde_json::to_string_pretty(&file)?)?;
            let analysis = serde_json::json!({
                "drops": result.drop_loci,
                "minima": result.minima_2d,
                "fit": match &result.minima_line_fit {
                    Some(f) => serde_json::to_value(f)?,
                    None => serde_json::json!({ "status": "no-fit" }),
                },
                "failures": result.failures().collect::<Vec<_>>(),
            });
            put("analysis.json", serde_json::to_string_pretty(&analysis)?)?;
        }
        Format::Svg => {}
    }
    Ok(written)
}

pub fn read_json_records(path: &Path) -> Result<RecordsFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Parses a `records.csv` written by [`write_records`].
pub fn read_csv_records(path: &Path) -> Result<Vec<RecordRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::domain("empty CSV"))?.split(',').collect();
    let levels = header.iter().filter(|h| h.starts_with("pop_")).count();
    if header.len() != 6 + 2 * levels {
        return Err(Error::domain("unexpected CSV header"));
    }
    let bad = |line: usize| Error::domain(format!("malformed CSV row {line}"));
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != header.len() {
                return Err(bad(i + 2));
            }
            let x = |k: usize| f[k].parse::<f64>().map_err(|_| bad(i + 2));
            Ok(RecordRow {
                p: x(0)?,
                sigma: x(1)?,
                j0: f[2].parse().map_err(|_| bad(i + 2))?,
                energy: x(3)?,
                orientation: x(4)?,
                alignment: x(5)?,
                pop: (6..6 + levels).map(x).collect::<Result<_>>()?,
                c_abs: (6 + levels..6 + 2 * levels).map(x).collect::<Result<_>>()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{run_sweep, uniform_axis, BasisPolicy, SweepGrid, SweepOptions};

    #[test]
    fn format_parsing() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!(" svg".parse::<Format>().unwrap(), Format::Svg);
        assert!("xml".parse::<Format>().is_err());
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn field_free_rows_have_exact_energy() {
        let grid = SweepGrid::new(vec![0.0], uniform_axis(0.5, 2.5, 0.5).unwrap(), 2, BasisPolicy::default()).unwrap();
        let r = run_sweep(&grid, &SweepOptions::default()).unwrap();
        let rows = rows(&r);
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|row| (row.energy - 6.0).abs() <= 4.0 * f64::EPSILON * 6.0));
        assert!(rows.iter().all(|row| row.pop.len() == 7));
        assert_eq!(columns(2), vec!["P", "sigma", "j0", "energy", "orientation", "alignment", "pop_0", "pop_1", "c_abs_0", "c_abs_1"]);
    }
}
