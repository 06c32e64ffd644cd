use super::{parse_cell, plan_columns, IngestReport, ParsedTelemetry, RawTelemetryFile};
use crate::error::{Error, Result};
use crate::sample::{Dialect, MetricSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SarOptions {
    /// Sort records by timestamp before grouping. When disabled, a decreasing
    /// timestamp is an error.
    pub sort_timestamps: bool,
}

impl Default for SarOptions {
    fn default() -> Self {
        Self {
            sort_timestamps: true,
        }
    }
}

fn parse_epoch(cell: &str) -> Option<i64> {
    if let Ok(v) = cell.parse::<i64>() {
        return Some(v);
    }
    let v = cell.parse::<f64>().ok()?;
    (v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
}

/// Parses a SAR export whose first column is a Unix-epoch timestamp.
///
/// Records sharing a timestamp (one per device, interface or CPU) collapse
/// into a single row. If any of them carries an `all` identifier, only those
/// summary records are used; otherwise all records are summed.
pub fn parse_sar(file: &RawTelemetryFile, opts: &SarOptions) -> Result<ParsedTelemetry> {
    if file.dialect != Dialect::Sar {
        return Err(Error::InvalidArgument(format!(
            "{}: expected a sar file, got {}",
            file.name, file.dialect
        )));
    }
    let plan = plan_columns(file);
    let names = plan
        .metrics
        .iter()
        .map(|&c| file.header[c].clone())
        .collect();
    let schema = MetricSchema::new(names, Dialect::Sar).map_err(|e| Error::MalformedRecord {
        file: file.name.clone(),
        line: 1,
        reason: e.to_string(),
    })?;

    let mut stamped = Vec::with_capacity(file.records.len());
    for (line, fields) in &file.records {
        let ts = parse_epoch(&fields[0]).ok_or_else(|| Error::MalformedRecord {
            file: file.name.clone(),
            line: *line,
            reason: format!("bad timestamp `{}`", fields[0]),
        })?;
        stamped.push((ts, *line, fields));
    }
    if opts.sort_timestamps {
        stamped.sort_by_key(|&(ts, line, _)| (ts, line));
    } else if let Some(w) = stamped.windows(2).find(|w| w[1].0 < w[0].0) {
        return Err(Error::NonMonotonicTimestamps {
            file: file.name.clone(),
            line: w[1].1,
            timestamp: w[1].0,
        });
    }

    let mut report = IngestReport {
        file: file.name.clone(),
        records_read: file.records.len(),
        dropped_columns: plan.dropped_names.clone(),
        ..Default::default()
    };
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for group in stamped.chunk_by(|a, b| a.0 == b.0) {
        let is_summary = |fields: &Vec<String>| {
            plan.identifiers
                .iter()
                .any(|&c| fields[c].eq_ignore_ascii_case("all"))
        };
        let summaries: Vec<_> = group.iter().filter(|(_, _, f)| is_summary(f)).collect();
        let members: Vec<_> = if summaries.is_empty() {
            group.iter().collect()
        } else {
            if group.len() > summaries.len() {
                report.summary_timestamps += 1;
            }
            summaries
        };
        if members.len() > 1 {
            report.summed_timestamps += 1;
        }
        let row = plan
            .metrics
            .iter()
            .map(|&c| {
                members
                    .iter()
                    .map(|(_, _, f)| parse_cell(&f[c]))
                    .sum::<Option<f64>>()
            })
            .collect();
        times.push(group[0].0);
        rows.push(row);
    }
    report.rows_parsed = rows.len();

    Ok(ParsedTelemetry {
        name: file.name.clone(),
        schema,
        start_epoch: times.first().copied(),
        times,
        rows,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sar(text: &str) -> RawTelemetryFile {
        RawTelemetryFile::from_bytes(Dialect::Sar, "sar.csv", text.as_bytes()).unwrap()
    }

    #[test]
    fn multi_device_rows_are_summed() {
        let f = sar("timestamp,DEV,tps\n100,sda,3\n100,sdb,5\n101,sda,1\n101,sdb,1\n");
        let p = parse_sar(&f, &SarOptions::default()).unwrap();
        assert_eq!(p.schema.names(), ["tps"]);
        assert_eq!(p.times, vec![100, 101]);
        assert_eq!(p.value(0, "tps"), Some(8.0));
        assert_eq!(p.value(1, "tps"), Some(2.0));
        assert_eq!(p.report.summed_timestamps, 2);
        assert_eq!(p.report.dropped_columns, vec!["DEV"]);
    }

    #[test]
    fn summary_row_wins_over_per_cpu_rows() {
        let f = sar("timestamp,CPU,%user\n1,all,50\n1,0,40\n1,1,60\n2,0,10\n2,1,20\n");
        let p = parse_sar(&f, &SarOptions::default()).unwrap();
        assert_eq!(p.value(0, "%user"), Some(50.0));
        assert_eq!(p.value(1, "%user"), Some(30.0));
        assert_eq!(p.report.summary_timestamps, 1);
    }

    #[test]
    fn unsorted_timestamps_are_sorted() {
        let f = sar("timestamp,a\n3,30\n1,10\n2,20\n");
        let p = parse_sar(&f, &SarOptions::default()).unwrap();
        assert_eq!(p.times, vec![1, 2, 3]);
        assert_eq!(p.start_epoch, Some(1));
        assert_eq!(p.value(2, "a"), Some(30.0));
    }

    #[test]
    fn decreasing_timestamps_rejected_without_sort() {
        let f = sar("timestamp,a\n3,30\n1,10\n");
        let opts = SarOptions {
            sort_timestamps: false,
        };
        assert!(matches!(
            parse_sar(&f, &opts),
            Err(Error::NonMonotonicTimestamps {
                line: 3,
                timestamp: 1,
                ..
            })
        ));
    }

    #[test]
    fn blank_cell_poisons_the_summed_row() {
        let f = sar("timestamp,IFACE,rxkB/s\n1,eth0,\n1,lo,2\n2,eth0,1\n2,lo,1\n");
        let p = parse_sar(&f, &SarOptions::default()).unwrap();
        assert_eq!(p.value(0, "rxkB/s"), None);
        assert_eq!(p.value(1, "rxkB/s"), Some(2.0));
    }

    #[test]
    fn bad_timestamp_is_malformed() {
        let f = sar("timestamp,a\nnoon,1\n");
        assert!(matches!(
            parse_sar(&f, &SarOptions::default()),
            Err(Error::MalformedRecord { line: 2, .. })
        ));
    }

    #[test]
    fn text_only_column_is_dropped() {
        let f = sar("timestamp,host,a\n1,web1,1\n2,web1,2\n");
        let p = parse_sar(&f, &SarOptions::default()).unwrap();
        assert_eq!(p.schema.names(), ["a"]);
    }
}
