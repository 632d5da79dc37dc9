//! Linelist CSV ingestion and export plus the metadata sidecar.
//!
//! CSV format: header `id,primary_window,secondary_window[,strata_*...]`.
//! Window grammar: `NUM ":" NUM ("|" NUM ":" NUM)*`, or a bare `NUM` d which
//! expands to [d, d+1); a single reported date is still a censored day.
//! Export is bit-stable: numbers are written in fixed decimal notation with
//! nine significant digits.

use super::{CaseRecord, EventWindow, Linelist, Segment};
use crate::error::{DelayError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

/// Sidecar metadata carried next to the CSV (same path with `.meta.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinelistMeta {
    pub delay_name: String,
    /// Final observation time in days; None for complete data.
    pub observation_time: Option<f64>,
    #[serde(default)]
    pub allow_negative: bool,
    /// Always "days"; rejected otherwise.
    #[serde(default = "days")]
    pub time_unit: String,
    /// Optional calendar date that day 0 corresponds to, carried verbatim for
    /// provenance. All arithmetic stays in epoch-relative days.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<String>,
}

fn days() -> String {
    "days".to_string()
}

impl Default for LinelistMeta {
    fn default() -> Self {
        LinelistMeta {
            delay_name: "delay".into(),
            observation_time: None,
            allow_negative: false,
            time_unit: days(),
            epoch: None,
        }
    }
}

impl LinelistMeta {
    pub fn read_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let meta: LinelistMeta = serde_json::from_str(&text)?;
        if meta.time_unit != "days" {
            return Err(DelayError::InvalidLinelist(format!(
                "unsupported time unit '{}' (only 'days')",
                meta.time_unit
            )));
        }
        Ok(meta)
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Conventional sidecar path for a linelist CSV.
    pub fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
        let mut os = csv_path.as_os_str().to_owned();
        os.push(".meta.json");
        std::path::PathBuf::from(os)
    }
}

/// Parses a window expression; `row` is the 1-based data-row number used in
/// error messages.
fn parse_window(text: &str, column: &str, row: usize) -> Result<EventWindow> {
    let bad = |message: String| DelayError::LinelistRow { row, message };
    let parse_num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("{column}: non-numeric bound '{s}'")))
    };

    let mut segments = Vec::new();
    for part in text.trim().split('|') {
        match part.split_once(':') {
            Some((lo, hi)) => {
                let lo = parse_num(lo)?;
                let hi = parse_num(hi)?;
                if hi <= lo {
                    return Err(bad(format!("{column}: window upper <= lower ({lo}:{hi})")));
                }
                segments.push(Segment { lo, hi });
            }
            None => {
                let d = parse_num(part)?;
                segments.push(Segment { lo: d, hi: d + 1.0 });
            }
        }
    }
    EventWindow::new(segments).map_err(|e| bad(format!("{column}: {e}")))
}

/// Reads a linelist from CSV text with metadata supplied separately.
pub fn ingest_csv_reader<R: Read>(reader: R, meta: &LinelistMeta) -> Result<Linelist> {
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers()?.clone();

    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            DelayError::InvalidLinelist(format!("missing required column '{name}'"))
        })
    };
    let id_col = find("id")?;
    let primary_col = find("primary_window")?;
    let secondary_col = find("secondary_window")?;
    let strata_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            h.strip_prefix("strata_")
                .map(|name| (i, name.to_string()))
        })
        .collect();

    let mut cases = Vec::new();
    for (idx, record) in csv_reader.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let get = |col: usize, name: &str| -> Result<&str> {
            record.get(col).ok_or_else(|| DelayError::LinelistRow {
                row,
                message: format!("missing field '{name}'"),
            })
        };
        let id = get(id_col, "id")?.to_string();
        if id.is_empty() {
            return Err(DelayError::LinelistRow {
                row,
                message: "empty id".into(),
            });
        }
        let primary = parse_window(get(primary_col, "primary_window")?, "primary_window", row)?;
        let secondary = parse_window(
            get(secondary_col, "secondary_window")?,
            "secondary_window",
            row,
        )?;
        let mut strata = BTreeMap::new();
        for (col, name) in &strata_cols {
            let value = record.get(*col).unwrap_or("");
            if !value.is_empty() {
                strata.insert(name.clone(), value.to_string());
            }
        }
        cases.push(CaseRecord {
            id,
            primary,
            secondary,
            strata,
            pair_order_known: true,
        });
    }

    Linelist::new(
        cases,
        meta.observation_time,
        meta.allow_negative,
        meta.delay_name.clone(),
    )
}

/// Reads a linelist CSV with its sidecar (`<path>.meta.json` when present,
/// defaults otherwise).
pub fn ingest_csv_path(path: &Path) -> Result<Linelist> {
    let sidecar = LinelistMeta::sidecar_path(path);
    let meta = if sidecar.exists() {
        LinelistMeta::read_path(&sidecar)?
    } else {
        LinelistMeta::default()
    };
    let file = std::fs::File::open(path)?;
    ingest_csv_reader(file, &meta)
}

/// Fixed decimal formatting with nine significant digits, trailing zeros
/// trimmed. Day-grid values round-trip exactly.
pub(crate) fn format_days(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 17) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn format_window(w: &EventWindow, widen: f64) -> String {
    let w = if widen > 0.0 { w.widen(widen) } else { w.clone() };
    w.segments()
        .iter()
        .map(|s| format!("{}:{}", format_days(s.lo), format_days(s.hi)))
        .collect::<Vec<_>>()
        .join("|")
}

/// Writes the linelist in the canonical CSV format.
///
/// `widen` expands every window by that many days on each side before
/// writing, an option for privacy-preserving exports; 0 writes windows as
/// they are.
pub fn write_linelist<W: Write>(linelist: &Linelist, writer: W, widen: f64) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let strata_keys = linelist.strata_keys();
    let mut header = vec![
        "id".to_string(),
        "primary_window".to_string(),
        "secondary_window".to_string(),
    ];
    header.extend(strata_keys.iter().map(|k| format!("strata_{k}")));
    out.write_record(&header)?;
    for case in linelist.cases() {
        let mut row = vec![
            case.id.clone(),
            format_window(&case.primary, widen),
            format_window(&case.secondary, widen),
        ];
        for key in &strata_keys {
            row.push(case.strata.get(key).cloned().unwrap_or_default());
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
