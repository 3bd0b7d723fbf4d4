//! Writing reports to disk: canonical JSON, CSV tables and plot-data files.
//!
//! Files are named by a content hash, so repeated runs never overwrite each
//! other. `index.json` lists every report in the directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::report::{format_float, VerificationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Plot,
}

pub const ALL_FORMATS: [Format; 3] = [Format::Json, Format::Csv, Format::Plot];

pub const INDEX_FILE: &str = "index.json";

/// JSON with sorted keys, two-space indentation and floats as `{:.16e}`.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let indent = |out: &mut String, d: usize| {
        out.push('\n');
        out.push_str(&"  ".repeat(d));
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => write!(out, "{u}").unwrap(),
            (None, Some(i), _) => write!(out, "{i}").unwrap(),
            (None, None, Some(f)) => out.push_str(&format_float(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                indent(out, depth + 1);
                write_value(out, item, depth + 1);
            }
            indent(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push('{');
            for (i, (k, item)) in sorted.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                indent(out, depth + 1);
                out.push_str(&serde_json::to_string(k).unwrap());
                out.push_str(": ");
                write_value(out, item, depth + 1);
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

pub fn report_json(report: &VerificationReport) -> String {
    canonical_json(&serde_json::to_value(report).expect("report serialises"))
}

pub fn parse_report(text: &str) -> serde_json::Result<VerificationReport> {
    serde_json::from_str(text)
}

/// First 16 hex digits of the SHA-256 of `bytes`.
pub fn content_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Whitespace-separated `t value stderr` lines.
pub fn plot_data(points: &[[f64; 3]]) -> String {
    let mut s = String::from("# t value stderr\n");
    for p in points {
        writeln!(s, "{} {} {}", format_float(p[0]), format_float(p[1]), format_float(p[2])).unwrap();
    }
    s
}

fn slug(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    out.truncate(60);
    out
}

/// Write `contents` under a content-hashed name; an existing file of that
/// name already holds the same bytes and is left alone.
fn put(dir: &Path, stem: &str, ext: &str, contents: &str) -> io::Result<PathBuf> {
    let path = dir.join(format!("{stem}-{}.{ext}", content_hash(contents.as_bytes())));
    if !path.exists() {
        let tmp = path.with_extension(format!("{ext}.tmp"));
        fs::write(&tmp, contents)?;
        fs::rename(&tmp, &path)?;
    }
    Ok(path)
}

/// Emit `report` into `dir` in the requested formats. Returns the written paths.
pub fn emit(report: &VerificationReport, dir: &Path, formats: &[Format]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    if formats.contains(&Format::Json) {
        paths.push(put(dir, &format!("report-{}", report.kind), "json", &report_json(report))?);
    }
    for (i, section) in report.sections.iter().enumerate() {
        let stem = format!("{}-{i:03}-{}", report.kind, slug(&section.label));
        if formats.contains(&Format::Csv) {
            for t in &section.tables {
                paths.push(put(dir, &format!("{stem}-{}", slug(&t.name)), "csv", &t.to_csv())?);
            }
        }
        if formats.contains(&Format::Plot) {
            for s in &section.series {
                paths.push(put(dir, &format!("{stem}-{}", slug(&s.name)), "dat", &plot_data(&s.points))?);
            }
        }
    }
    Ok(paths)
}

/// Rewrite the directory index from the report files present. Called once,
/// by a single writer, after all reports of a run are emitted.
pub fn write_index(dir: &Path) -> io::Result<PathBuf> {
    let mut entries = Vec::new();
    let mut names: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("report-") && n.ends_with(".json"))
        .collect();
    names.sort();
    for name in names {
        let text = fs::read_to_string(dir.join(&name))?;
        let Ok(report) = parse_report(&text) else {
            continue;
        };
        entries.push(serde_json::json!({
            "file": name,
            "kind": report.kind,
            "pass": report.pass,
            "checks": report.checks().count(),
        }));
    }
    let path = dir.join(INDEX_FILE);
    let tmp = dir.join(format!("{INDEX_FILE}.tmp"));
    fs::write(&tmp, canonical_json(&Value::Array(entries)))?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}
