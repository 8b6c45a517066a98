//! Output files: atomic writes, PGM images, metric CSVs and JSON manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::difftest::DiffTestReport;
use crate::error::{HdcError, Result};
use crate::image::Image;
use crate::retrain::EpochMetrics;

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes `bytes` next to `path` and renames over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| HdcError::io(parent, e))?;
    }
    let tmp = tmp_path(path);
    fs::write(&tmp, bytes).map_err(|e| HdcError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        HdcError::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Binary PGM (P5) with maxval 255.
pub fn pgm_bytes(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

/// Parses a P5 file written by [`pgm_bytes`] (single whitespace separators,
/// no comments).
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |message: &str| HdcError::Format {
        field: "pgm",
        offset: 0,
        message: message.to_string(),
    };
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
        pos += 1;
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad("expected P5 with maxval 255"));
    }
    let width: usize = fields[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = fields[2].parse().map_err(|_| bad("bad height"))?;
    let data = &bytes[pos..];
    if data.len() != width * height {
        return Err(bad("pixel data length does not match geometry"));
    }
    Ok((width, height, data.to_vec()))
}

/// Replaces `dir` with a directory holding one PGM per perturbed record,
/// named `<parent_id>_<kind>.pgm`.
pub fn export_perturbed_pgms(dir: &Path, report: &DiffTestReport) -> Result<usize> {
    let staging = tmp_path(dir);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| HdcError::io(&staging, e))?;
    }
    fs::create_dir_all(&staging).map_err(|e| HdcError::io(&staging, e))?;
    let mut written = 0;
    for record in report.records.iter().filter(|r| r.is_generated()) {
        let path = staging.join(format!("{}.pgm", record.image_id));
        fs::write(&path, pgm_bytes(&record.image)).map_err(|e| HdcError::io(&path, e))?;
        written += 1;
    }
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| HdcError::io(dir, e))?;
    }
    fs::rename(&staging, dir).map_err(|e| HdcError::io(dir, e))?;
    Ok(written)
}

/// CSV header: `epoch,acc_seed_<s>...,discrepancy_count,test_discrepancy_count`.
pub fn metrics_header(seeds: &[u64]) -> String {
    let mut header = String::from("epoch");
    for seed in seeds {
        write!(header, ",acc_seed_{seed}").unwrap();
    }
    header.push_str(",discrepancy_count,test_discrepancy_count");
    header
}

pub fn metrics_row(row: &EpochMetrics) -> String {
    let mut line = row.epoch.to_string();
    for acc in &row.per_classifier_test_accuracy {
        write!(line, ",{acc:.6}").unwrap();
    }
    write!(line, ",{},{}", row.discrepancy_count, row.test_discrepancy_count).unwrap();
    line
}

pub fn metrics_csv<'a>(seeds: &[u64], rows: impl IntoIterator<Item = &'a EpochMetrics>) -> String {
    let mut out = metrics_header(seeds);
    out.push('\n');
    for row in rows {
        out.push_str(&metrics_row(row));
        out.push('\n');
    }
    out
}
