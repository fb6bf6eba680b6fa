//! Output files: per-suite CSV, gnuplot data blocks and the JSON summary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::baselines::Violation;
use crate::suites::{Summary, Table};

pub fn csv_path(dir: &Path, suite: &str) -> PathBuf {
    dir.join(format!("{suite}.csv"))
}

pub fn write_csv(table: &Table, dir: &Path) -> Result<PathBuf> {
    let path = csv_path(dir, table.suite.name());
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(table.suite.columns())?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(path)
}

/// Header and raw records of a results CSV.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in r.records() {
        rows.push(record?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Whitespace-separated columns, one block per group value separated by two
/// blank lines so gnuplot can address blocks with `index`.
pub fn write_plot(table: &Table, dir: &Path) -> Result<PathBuf> {
    let spec = table.suite.plot();
    let path = dir.join(format!("{}.dat", table.suite.name()));
    let g = table.index_of(spec.group);
    let x = table.index_of(spec.x);
    let ys: Vec<usize> = spec.ys.iter().map(|y| table.index_of(y)).collect();
    let mut blocks: Vec<(String, Vec<String>)> = Vec::new();
    for row in &table.rows {
        let key = row[g].to_string();
        let line = std::iter::once(row[x].to_string())
            .chain(ys.iter().map(|&i| row[i].to_string()))
            .collect::<Vec<_>>()
            .join(" ");
        match blocks.iter_mut().find(|(k, _)| *k == key) {
            Some((_, lines)) => lines.push(line),
            None => blocks.push((key, vec![line])),
        }
    }
    let mut out = String::new();
    for (i, (key, lines)) in blocks.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(&format!("# {} = {key}\n# {} {}\n", spec.group, spec.x, spec.ys.join(" ")));
        for line in lines {
            out.push_str(line);
            out.push('\n');
        }
    }
    fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

#[derive(Debug, Serialize)]
pub struct SummaryFile<'a> {
    pub config_hash: &'a str,
    pub suites: BTreeMap<&'a str, &'a Summary>,
    pub baseline_violations: &'a [Violation],
    pub passed: bool,
}

pub fn write_summary(dir: &Path, file: &SummaryFile<'_>) -> Result<PathBuf> {
    let path = dir.join("summary.json");
    let mut f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, file)?;
    f.write_all(b"\n")?;
    Ok(path)
}
