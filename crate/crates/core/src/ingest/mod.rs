//! Telemetry ingestion: SAR and perf delimited exports to [`MtsSample`]s.
//!
//! Parsing happens in two stages. [`parse_sar`] and [`parse_perf`] turn a
//! [`RawTelemetryFile`] into a [`ParsedTelemetry`] table whose cells may be
//! missing; [`drop_incomplete_rows`] then removes every row with a missing
//! cell and produces a sample whose entries are all finite.

mod perf;
mod sar;

use std::collections::HashSet;
use std::fs;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

pub use perf::parse_perf;
pub use sar::{parse_sar, SarOptions};

use crate::error::{Error, Result};
use crate::sample::{Dialect, MetricSchema, MtsSample, SampleId};

/// Columns that name a device, interface or CPU rather than measure anything.
const IDENTIFIER_COLUMNS: &[&str] = &[
    "iface",
    "dev",
    "device",
    "cpu",
    "intr",
    "tty",
    "fchost",
    "filesystem",
    "mountpoint",
    "hostname",
    "bus",
];

/// A delimited telemetry export: one header line followed by data records.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTelemetryFile {
    pub dialect: Dialect,
    pub name: String,
    pub delimiter: u8,
    pub header: Vec<String>,
    /// `(line number, fields)` for every non-blank data record.
    pub records: Vec<(u64, Vec<String>)>,
}

impl RawTelemetryFile {
    pub fn from_path(dialect: Dialect, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(dialect, path.display().to_string(), &bytes)
    }

    pub fn from_reader(
        dialect: Dialect,
        name: impl Into<String>,
        mut reader: impl Read,
    ) -> Result<Self> {
        let name = name.into();
        let mut bytes = Vec::new();
        reader
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(&name, e))?;
        Self::from_bytes(dialect, name, &bytes)
    }

    pub fn from_bytes(dialect: Dialect, name: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let name = name.into();
        let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedRecord {
            file: name.clone(),
            line: 0,
            reason: format!("not valid UTF-8: {e}"),
        })?;
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);

        let Some(header_line) = text.lines().find(|l| !l.trim().is_empty()) else {
            return Err(Error::EmptyFile { file: name });
        };
        let delimiter = detect_delimiter(header_line);

        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut header: Option<Vec<String>> = None;
        let mut records = Vec::new();
        for result in reader.records() {
            let record = result.map_err(|e| Error::MalformedRecord {
                file: name.clone(),
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            let fields: Vec<String> = record.iter().map(str::to_owned).collect();
            match &header {
                None => header = Some(parse_header(&name, line, fields)?),
                Some(h) if h.len() != fields.len() => {
                    return Err(Error::MalformedRecord {
                        file: name,
                        line,
                        reason: format!("expected {} fields, found {}", h.len(), fields.len()),
                    })
                }
                Some(_) => records.push((line, fields)),
            }
        }
        let header = header.ok_or_else(|| Error::EmptyFile { file: name.clone() })?;
        if records.is_empty() {
            return Err(Error::EmptyFile { file: name });
        }
        Ok(Self {
            dialect,
            name,
            delimiter,
            header,
            records,
        })
    }
}

fn detect_delimiter(header_line: &str) -> u8 {
    let commas = header_line.matches(',').count();
    let semicolons = header_line.matches(';').count();
    if semicolons > commas {
        b';'
    } else {
        b','
    }
}

/// `sadf -d` comments out its header line with a leading `#`.
fn parse_header(file: &str, line: u64, mut fields: Vec<String>) -> Result<Vec<String>> {
    if let Some(first) = fields.first_mut() {
        if let Some(rest) = first.strip_prefix('#') {
            *first = rest.trim().to_owned();
        }
    }
    let mut seen = HashSet::new();
    for f in &fields {
        if f.is_empty() {
            return Err(Error::MalformedRecord {
                file: file.to_owned(),
                line,
                reason: "empty column name in header".into(),
            });
        }
        if !seen.insert(f.as_str()) {
            return Err(Error::MalformedRecord {
                file: file.to_owned(),
                line,
                reason: format!("duplicate column `{f}` in header"),
            });
        }
    }
    if fields.len() < 2 {
        return Err(Error::MalformedRecord {
            file: file.to_owned(),
            line,
            reason: "header needs a time column and at least one metric".into(),
        });
    }
    Ok(fields)
}

/// Parses one numeric cell. Blank, non-numeric and non-finite cells are missing.
pub(crate) fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Splits the non-time columns into metric columns and text columns.
///
/// A column is text-valued when its name is a known device/interface
/// identifier or when none of its non-blank cells parses as a number.
pub(crate) struct ColumnPlan {
    pub metrics: Vec<usize>,
    pub identifiers: Vec<usize>,
    pub dropped_names: Vec<String>,
}

pub(crate) fn plan_columns(file: &RawTelemetryFile) -> ColumnPlan {
    let mut plan = ColumnPlan {
        metrics: Vec::new(),
        identifiers: Vec::new(),
        dropped_names: Vec::new(),
    };
    for (col, name) in file.header.iter().enumerate().skip(1) {
        let is_identifier = IDENTIFIER_COLUMNS.contains(&name.to_ascii_lowercase().as_str());
        let any_numeric = file
            .records
            .iter()
            .any(|(_, fields)| parse_cell(&fields[col]).is_some());
        let all_blank = file.records.iter().all(|(_, f)| f[col].is_empty());
        if is_identifier || (!any_numeric && !all_blank) {
            plan.identifiers.push(col);
            plan.dropped_names.push(name.clone());
        } else {
            plan.metrics.push(col);
        }
    }
    plan
}

/// A parsed telemetry table whose cells may still be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTelemetry {
    pub name: String,
    pub schema: MetricSchema,
    pub start_epoch: Option<i64>,
    /// Absolute (or, for unaligned perf data, relative) time of each row in seconds.
    pub times: Vec<i64>,
    pub rows: Vec<Vec<Option<f64>>>,
    pub report: IngestReport,
}

impl ParsedTelemetry {
    /// Value at `row` for the metric called `metric`.
    pub fn value(&self, row: usize, metric: &str) -> Option<f64> {
        let col = self.schema.names().iter().position(|n| n == metric)?;
        self.rows.get(row)?.get(col).copied().flatten()
    }

    pub fn row_at_time(&self, time: i64) -> Option<usize> {
        self.times.iter().position(|&t| t == time)
    }

    /// Drops incomplete rows and labels the result.
    pub fn into_sample(self, id: SampleId) -> Result<(MtsSample, IngestReport)> {
        let mut report = self.report.clone();
        let (sample, dropped) = drop_incomplete_rows(self, id)?;
        report.rows_dropped = dropped;
        report.rows_kept = sample.rows();
        Ok((sample, report))
    }
}

/// Per-file ingestion summary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub file: String,
    pub records_read: usize,
    /// Rows after per-timestamp aggregation, before dropping incomplete rows.
    pub rows_parsed: usize,
    pub rows_kept: usize,
    pub rows_dropped: usize,
    pub dropped_columns: Vec<String>,
    /// Timestamps whose records were summed into one row.
    pub summed_timestamps: usize,
    /// Timestamps where an `all` summary record was used instead of summing.
    pub summary_timestamps: usize,
}

/// Removes every row that has a missing or non-numeric cell.
///
/// Relative row order is preserved. Returns the sample together with the
/// number of rows removed.
pub fn drop_incomplete_rows(parsed: ParsedTelemetry, id: SampleId) -> Result<(MtsSample, usize)> {
    let n = parsed.schema.len();
    let total = parsed.rows.len();
    let complete: Vec<&Vec<Option<f64>>> = parsed
        .rows
        .iter()
        .filter(|row| row.iter().all(Option::is_some))
        .collect();
    let dropped = total - complete.len();
    if complete.len() < 2 {
        return Err(Error::TooFewRows {
            context: parsed.name,
            rows: complete.len(),
        });
    }
    let data = DMatrix::from_fn(complete.len(), n, |i, j| {
        complete[i][j].expect("filtered to complete rows")
    });
    let sample = MtsSample::new(id, parsed.schema, data, parsed.start_epoch)?;
    Ok((sample, dropped))
}

/// Reads and parses a file of either dialect.
///
/// `start_epoch` aligns perf elapsed times; it is ignored for SAR files.
pub fn parse_path(
    dialect: Dialect,
    path: impl AsRef<Path>,
    start_epoch: Option<i64>,
) -> Result<ParsedTelemetry> {
    let raw = RawTelemetryFile::from_path(dialect, path)?;
    match dialect {
        Dialect::Sar => parse_sar(&raw, &SarOptions::default()),
        Dialect::Perf => parse_perf(&raw, start_epoch),
    }
}

/// Parses a file and drops incomplete rows in one step.
pub fn ingest_path(
    dialect: Dialect,
    path: impl AsRef<Path>,
    id: SampleId,
    start_epoch: Option<i64>,
) -> Result<(MtsSample, IngestReport)> {
    parse_path(dialect, path, start_epoch)?.into_sample(id)
}
