use super::{parse_cell, plan_columns, IngestReport, ParsedTelemetry, RawTelemetryFile};
use crate::error::{Error, Result};
use crate::sample::{Dialect, MetricSchema};

/// Parses a perf interval export whose first column is elapsed seconds since
/// the collection started (e.g. `1.001065`).
///
/// Each row's time is `collection_start_epoch + round(elapsed)`. Without a
/// start epoch the times stay relative to the start of the collection.
pub fn parse_perf(
    file: &RawTelemetryFile,
    collection_start_epoch: Option<i64>,
) -> Result<ParsedTelemetry> {
    if file.dialect != Dialect::Perf {
        return Err(Error::InvalidArgument(format!(
            "{}: expected a perf file, got {}",
            file.name, file.dialect
        )));
    }
    let plan = plan_columns(file);
    let names = plan
        .metrics
        .iter()
        .map(|&c| file.header[c].clone())
        .collect();
    let schema = MetricSchema::new(names, Dialect::Perf).map_err(|e| Error::MalformedRecord {
        file: file.name.clone(),
        line: 1,
        reason: e.to_string(),
    })?;

    let base = collection_start_epoch.unwrap_or(0);
    let mut times = Vec::with_capacity(file.records.len());
    let mut rows = Vec::with_capacity(file.records.len());
    for (line, fields) in &file.records {
        let elapsed = parse_cell(&fields[0]).ok_or_else(|| Error::MalformedRecord {
            file: file.name.clone(),
            line: *line,
            reason: format!("bad elapsed time `{}`", fields[0]),
        })?;
        if elapsed < 0.0 {
            return Err(Error::NegativeElapsed {
                file: file.name.clone(),
                line: *line,
                elapsed,
            });
        }
        times.push(base + elapsed.round() as i64);
        rows.push(
            plan.metrics
                .iter()
                .map(|&c| parse_cell(&fields[c]))
                .collect(),
        );
    }

    let report = IngestReport {
        file: file.name.clone(),
        records_read: file.records.len(),
        rows_parsed: rows.len(),
        dropped_columns: plan.dropped_names,
        ..Default::default()
    };
    Ok(ParsedTelemetry {
        name: file.name.clone(),
        schema,
        start_epoch: collection_start_epoch,
        times,
        rows,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perf(text: &str) -> RawTelemetryFile {
        RawTelemetryFile::from_bytes(Dialect::Perf, "perf.csv", text.as_bytes()).unwrap()
    }

    #[test]
    fn aligns_to_collection_start() {
        let f = perf("time,branches\n1.001065,10\n2.002247,20\n2.6,30\n");
        let p = parse_perf(&f, Some(1632834000)).unwrap();
        assert_eq!(p.times, vec![1632834001, 1632834002, 1632834003]);
        assert_eq!(p.start_epoch, Some(1632834000));
    }

    #[test]
    fn relative_times_without_start() {
        let f = perf("time,branches\n1.4,10\n2.5,20\n");
        let p = parse_perf(&f, None).unwrap();
        assert_eq!(p.times, vec![1, 3]);
        assert_eq!(p.start_epoch, None);
    }

    #[test]
    fn negative_elapsed_rejected() {
        let f = perf("time,branches\n-1,10\n");
        assert!(matches!(
            parse_perf(&f, Some(0)),
            Err(Error::NegativeElapsed { line: 2, .. })
        ));
    }

    #[test]
    fn not_counted_cells_are_missing() {
        let f = perf("time,branches,cycles\n1,10,<not counted>\n2,20,5\n");
        let p = parse_perf(&f, Some(0)).unwrap();
        assert_eq!(p.schema.names(), ["branches", "cycles"]);
        assert_eq!(p.value(0, "cycles"), None);
        assert_eq!(p.value(1, "cycles"), Some(5.0));
    }

    #[test]
    fn wrong_dialect_rejected() {
        let f = RawTelemetryFile::from_bytes(Dialect::Sar, "x", b"t,a\n1,2\n").unwrap();
        assert!(parse_perf(&f, None).is_err());
    }
}
