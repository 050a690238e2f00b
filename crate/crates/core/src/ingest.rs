//! Sensor-log file handling: schema-driven CSV parsing, writing the standard
//! schema back out, resampling onto a fixed time grid, and aligning two
//! datasets by timestamp.
//!
//! The standard schema is
//! `timestamp,illuminance,temperature,humidity,voltage,current,flags` with a
//! header row, `.` decimal, and ISO-8601 timestamps. Station files may omit
//! voltage/current columns. A `flags` column, when present, is trusted for
//! record provenance (gap filling, missing cells) so that written datasets
//! reload identically.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, NaiveDateTime, TimeZone};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::{
    validate_record, Dataset, MeasurementRecord, QualityFlags, Timestamp,
};

/// Offset assumed for timestamps written without one (Morelia, UTC-6).
pub fn default_utc_offset() -> FixedOffset {
    FixedOffset::west_opt(6 * 3600).expect("static offset")
}

/// Logical fields a CSV column can map to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalField {
    Timestamp,
    Illuminance,
    Temperature,
    Humidity,
    Voltage,
    Current,
    Flags,
}

/// A column is referenced either by zero-based index or by header name.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

/// Parsing schema for a sensor-log or station CSV file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub columns: BTreeMap<LogicalField, ColumnRef>,
    pub delimiter: char,
    pub decimal: char,
    pub has_header: bool,
    /// chrono format string; empty means ISO-8601 / RFC 3339 with naive
    /// fallbacks.
    pub timestamp_format: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        let mut columns = BTreeMap::new();
        for (field, name) in [
            (LogicalField::Timestamp, "timestamp"),
            (LogicalField::Illuminance, "illuminance"),
            (LogicalField::Temperature, "temperature"),
            (LogicalField::Humidity, "humidity"),
            (LogicalField::Voltage, "voltage"),
            (LogicalField::Current, "current"),
            (LogicalField::Flags, "flags"),
        ] {
            columns.insert(field, ColumnRef::Name(name.into()));
        }
        CsvSchema {
            columns,
            delimiter: ',',
            decimal: '.',
            has_header: true,
            timestamp_format: String::new(),
        }
    }
}

impl CsvSchema {
    pub fn validate(&self) -> Result<()> {
        if !self.columns.contains_key(&LogicalField::Timestamp) {
            return Err(Error::InvalidConfig(
                "schema must map the timestamp field".into(),
            ));
        }
        let mut seen: Vec<&ColumnRef> = Vec::new();
        for column in self.columns.values() {
            if seen.contains(&column) {
                return Err(Error::InvalidConfig(format!(
                    "two fields map to the same column {column:?}"
                )));
            }
            seen.push(column);
        }
        Ok(())
    }

    fn parse_timestamp(&self, raw: &str) -> std::result::Result<Timestamp, String> {
        let raw = raw.trim();
        if !self.timestamp_format.is_empty() {
            if let Ok(ts) = DateTime::parse_from_str(raw, &self.timestamp_format) {
                return Ok(ts);
            }
            return NaiveDateTime::parse_from_str(raw, &self.timestamp_format)
                .map(|naive| naive_to_default_offset(&naive))
                .map_err(|e| format!("bad timestamp '{raw}': {e}"));
        }
        if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
            return Ok(ts);
        }
        for format in [
            "%Y-%m-%dT%H:%M:%S",
            "%Y-%m-%d %H:%M:%S",
            "%Y-%m-%dT%H:%M",
            "%Y-%m-%d %H:%M",
        ] {
            if let Ok(naive) = NaiveDateTime::parse_from_str(raw, format) {
                return Ok(naive_to_default_offset(&naive));
            }
        }
        Err(format!("bad timestamp '{raw}'"))
    }
}

fn naive_to_default_offset(naive: &NaiveDateTime) -> Timestamp {
    default_utc_offset()
        .from_local_datetime(naive)
        .single()
        .expect("fixed offsets are unambiguous")
}

/// Column indices resolved against a header (or taken verbatim).
struct ResolvedSchema {
    indices: BTreeMap<LogicalField, usize>,
}

fn resolve_schema(schema: &CsvSchema, header: Option<&csv::StringRecord>) -> Result<ResolvedSchema> {
    let mut indices = BTreeMap::new();
    for (field, column) in &schema.columns {
        match column {
            ColumnRef::Index(i) => {
                indices.insert(*field, *i);
            }
            ColumnRef::Name(name) => match header {
                Some(header) => {
                    if let Some(i) = header.iter().position(|h| h.trim() == name) {
                        indices.insert(*field, i);
                    }
                    // a named column absent from the header is simply
                    // unmapped; only the timestamp is mandatory
                }
                None => {
                    return Err(Error::InvalidConfig(format!(
                        "column '{name}' referenced by name but the schema has no header row"
                    )))
                }
            },
        }
    }
    if !indices.contains_key(&LogicalField::Timestamp) {
        return Err(Error::Parse {
            line: 1,
            column: "timestamp".into(),
            reason: "timestamp column not found".into(),
        });
    }
    Ok(ResolvedSchema { indices })
}

/// Parses a CSV file into a validated [`Dataset`]: records are checked with
/// `validate_record`, sorted by timestamp, duplicates rejected, and the
/// sampling period inferred as the median inter-record gap.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    schema.validate()?;
    let file = File::open(path)?;
    let mut content = String::new();
    BufReader::new(file).read_to_string(&mut content)?;
    load_csv_str(&content, schema).map_err(|e| match e {
        Error::EmptyFile(_) => Error::EmptyFile(path.display().to_string()),
        other => other,
    })
}

/// Same as [`load_csv`] over in-memory text.
pub fn load_csv_str(content: &str, schema: &CsvSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(false)
        .flexible(true)
        .from_reader(content.as_bytes());

    let mut rows = reader.records();
    let header = if schema.has_header {
        match rows.next() {
            Some(row) => Some(row.map_err(|e| Error::Parse {
                line: 1,
                column: "-".into(),
                reason: e.to_string(),
            })?),
            None => return Err(Error::EmptyFile("<input>".into())),
        }
    } else {
        None
    };
    let resolved = resolve_schema(schema, header.as_ref())?;
    let has_flags_column = resolved.indices.contains_key(&LogicalField::Flags);

    let mut records = Vec::new();
    let header_lines = usize::from(schema.has_header);
    for (i, row) in rows.enumerate() {
        let line = i + 1 + header_lines;
        let row = row.map_err(|e| Error::Parse {
            line,
            column: "-".into(),
            reason: e.to_string(),
        })?;
        if row.iter().all(|cell| cell.trim().is_empty()) {
            continue;
        }

        let cell = |field: LogicalField| -> Option<&str> {
            resolved
                .indices
                .get(&field)
                .and_then(|&i| row.get(i))
                .map(str::trim)
        };

        let ts_index = resolved.indices[&LogicalField::Timestamp];
        let raw_ts = row.get(ts_index).map(str::trim).ok_or(Error::Parse {
            line,
            column: "timestamp".into(),
            reason: format!("row has only {} fields", row.len()),
        })?;
        let timestamp = schema.parse_timestamp(raw_ts).map_err(|reason| Error::Parse {
            line,
            column: "timestamp".into(),
            reason,
        })?;

        let mut missing = false;
        let mut numeric = |field: LogicalField, name: &str| -> Result<Option<f64>> {
            match cell(field) {
                None => Ok(None), // column not mapped for this file
                Some("") => {
                    missing = true;
                    Ok(None)
                }
                Some(raw) => {
                    let cleaned = if schema.decimal != '.' {
                        raw.replace(schema.decimal, ".")
                    } else {
                        raw.to_string()
                    };
                    cleaned.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                        line,
                        column: name.into(),
                        reason: format!("'{raw}' is not a number"),
                    })
                }
            }
        };

        let illuminance = numeric(LogicalField::Illuminance, "illuminance")?;
        let temperature = numeric(LogicalField::Temperature, "temperature")?;
        let humidity = numeric(LogicalField::Humidity, "humidity")?;
        let voltage = numeric(LogicalField::Voltage, "voltage")?;
        let current = numeric(LogicalField::Current, "current")?;

        let mut record = MeasurementRecord::new(
            timestamp,
            illuminance,
            temperature,
            humidity,
            voltage,
            current,
        );
        if has_flags_column {
            // the file's flags are authoritative for provenance
            let raw = cell(LogicalField::Flags).unwrap_or("");
            record.quality_flags = raw.parse::<QualityFlags>().map_err(|_| Error::Parse {
                line,
                column: "flags".into(),
                reason: format!("bad flags '{raw}'"),
            })?;
        } else if missing {
            record.quality_flags.insert(QualityFlags::MISSING);
        }
        records.push(validate_record(record));
    }
    if records.is_empty() {
        return Err(Error::EmptyFile("<input>".into()));
    }
    Dataset::from_records(records)
}

/// Renders a dataset in the standard CSV schema (flags column included).
/// Numbers use full shortest-round-trip precision; timestamps are RFC 3339.
pub fn dataset_to_csv_string(dataset: &Dataset) -> String {
    let mut out = String::from("timestamp,illuminance,temperature,humidity,voltage,current,flags\n");
    for record in dataset.records() {
        let field = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            record.timestamp.to_rfc3339(),
            field(record.illuminance),
            field(record.temperature),
            field(record.humidity),
            field(record.voltage),
            field(record.current),
            record.quality_flags,
        ));
    }
    out
}

/// Writes [`dataset_to_csv_string`] to a file.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut file = File::create(path)?;
    file.write_all(dataset_to_csv_string(dataset).as_bytes())?;
    Ok(())
}

/// What to do with grid points that have no record nearby.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPolicy {
    /// Omit the grid point (default: fabricated values are opt-in).
    Drop,
    /// Repeat the last seen record, flagged GAP_FILLED.
    HoldLast,
    /// Linear interpolation between the neighbors, flagged GAP_FILLED.
    Linear,
}

impl std::str::FromStr for GapPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "drop" => Ok(GapPolicy::Drop),
            "hold" | "hold_last" => Ok(GapPolicy::HoldLast),
            "linear" => Ok(GapPolicy::Linear),
            other => Err(Error::InvalidConfig(format!("unknown gap policy '{other}'"))),
        }
    }
}

/// Snaps records onto a grid anchored at the first record. A grid point
/// takes the nearest record within half a period; points with no such
/// record follow the gap policy. Synthesized records carry GAP_FILLED.
pub fn resample_to_grid(data: &Dataset, period: Duration, policy: GapPolicy) -> Result<Dataset> {
    if period <= Duration::zero() {
        return Err(Error::InvalidConfig("period must be positive".into()));
    }
    let records = data.records();
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let anchor = records[0].timestamp;
    let span = records.last().unwrap().timestamp - anchor;
    let steps = span.num_seconds() / period.num_seconds();
    let half_period = period / 2;

    let mut output = Vec::new();
    let mut cursor = 0usize; // first record with timestamp >= grid point - half
    for k in 0..=steps {
        let grid_ts = anchor + period * (k as i32);
        while cursor < records.len()
            && records[cursor].timestamp < grid_ts - half_period
        {
            cursor += 1;
        }
        let candidate = [cursor.checked_sub(1), Some(cursor)]
            .into_iter()
            .flatten()
            .filter_map(|i| records.get(i))
            .map(|r| ((r.timestamp - grid_ts).num_seconds().abs(), r))
            .filter(|(dist, _)| *dist <= half_period.num_seconds())
            .min_by_key(|(dist, _)| *dist);

        if let Some((_, record)) = candidate {
            let mut snapped = record.clone();
            snapped.timestamp = grid_ts;
            output.push(snapped);
            continue;
        }
        match policy {
            GapPolicy::Drop => {}
            GapPolicy::HoldLast => {
                let previous = records[..cursor]
                    .last()
                    .expect("grid starts at the first record");
                let mut held = previous.clone();
                held.timestamp = grid_ts;
                held.quality_flags = QualityFlags::empty();
                held.quality_flags.insert(QualityFlags::GAP_FILLED);
                output.push(validate_record(held));
            }
            GapPolicy::Linear => {
                let before = records[..cursor].last();
                let after = records.get(cursor);
                let (Some(before), Some(after)) = (before, after) else {
                    continue;
                };
                let total = (after.timestamp - before.timestamp).num_seconds() as f64;
                let fraction = (grid_ts - before.timestamp).num_seconds() as f64 / total;
                let lerp = |a: Option<f64>, b: Option<f64>| match (a, b) {
                    (Some(a), Some(b)) => Some(a + (b - a) * fraction),
                    _ => None,
                };
                let mut filled = MeasurementRecord::new(
                    grid_ts,
                    lerp(before.illuminance, after.illuminance),
                    lerp(before.temperature, after.temperature),
                    lerp(before.humidity, after.humidity),
                    lerp(before.voltage, after.voltage),
                    lerp(before.current, after.current),
                );
                filled.quality_flags.insert(QualityFlags::GAP_FILLED);
                output.push(validate_record(filled));
            }
        }
    }
    if output.is_empty() {
        return Err(Error::EmptyInput);
    }
    Dataset::from_records(output)
}

/// Outcome counts of [`align_series`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentReport {
    pub matched_count: usize,
    pub dropped_left: usize,
    pub dropped_right: usize,
    /// Largest |timestamp difference| over matched pairs, in seconds.
    pub max_time_skew_seconds: i64,
}

/// Greedy nearest-timestamp matching within `tolerance`; each record is
/// used at most once. Returns index pairs `(into a, into b)` sorted by the
/// left record's timestamp, plus the report. Candidate pairs are taken
/// smallest skew first, which makes the matched count symmetric in the two
/// inputs.
pub fn align_series(
    a: &Dataset,
    b: &Dataset,
    tolerance: Duration,
) -> Result<(Vec<(usize, usize)>, AlignmentReport)> {
    if tolerance < Duration::zero() {
        return Err(Error::InvalidConfig("tolerance must be non-negative".into()));
    }
    let b_times: Vec<Timestamp> = b.records().iter().map(|r| r.timestamp).collect();
    let tol = tolerance.num_seconds();

    // candidate pairs (skew, tie-break keys, i, j), at most a handful per
    // left record
    let mut candidates = Vec::new();
    for (i, record) in a.records().iter().enumerate() {
        let ts = record.timestamp;
        let insertion = b_times.partition_point(|t| *t < ts);
        let low = insertion.saturating_sub(2);
        let high = (insertion + 2).min(b_times.len());
        for (j, b_ts) in b_times.iter().enumerate().take(high).skip(low) {
            let skew = (*b_ts - ts).num_seconds().abs();
            if skew <= tol {
                let (first, second) = if ts <= *b_ts { (ts, *b_ts) } else { (*b_ts, ts) };
                candidates.push((skew, first, second, i, j));
            }
        }
    }
    candidates.sort();

    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut pairs = Vec::new();
    let mut max_skew = 0i64;
    for (skew, _, _, i, j) in candidates {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        pairs.push((i, j));
        max_skew = max_skew.max(skew);
    }
    if pairs.is_empty() {
        return Err(Error::NoOverlap);
    }
    pairs.sort();
    let report = AlignmentReport {
        matched_count: pairs.len(),
        dropped_left: a.len() - pairs.len(),
        dropped_right: b.len() - pairs.len(),
        max_time_skew_seconds: max_skew,
    };
    Ok((pairs, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Channel;

    fn ts(hour: u32, minute: u32) -> Timestamp {
        default_utc_offset()
            .with_ymd_and_hms(2019, 1, 14, hour, minute, 0)
            .unwrap()
    }

    fn record(hour: u32, minute: u32, lux: f64) -> MeasurementRecord {
        validate_record(MeasurementRecord::new(
            ts(hour, minute),
            Some(lux),
            Some(20.0),
            Some(50.0),
            Some(14.0),
            Some(1.0),
        ))
    }

    const WELL_FORMED: &str = "\
timestamp,illuminance,temperature,humidity,voltage,current
2019-01-14T08:00:00-06:00,1000,18.5,70,13.9,0.4
2019-01-14T08:05:00-06:00,1500,18.9,69,14.0,0.5
2019-01-14T08:10:00-06:00,2100,19.4,68,14.1,0.6
";

    #[test]
    fn well_formed_file_loads_with_inferred_period() {
        let dataset = load_csv_str(WELL_FORMED, &CsvSchema::default()).unwrap();
        assert_eq!(dataset.len(), 3);
        assert_eq!(dataset.sampling_period(), Duration::minutes(5));
        let first = &dataset.records()[0];
        assert_eq!(first.power, Some(13.9 * 0.4));
        assert!(first.quality_flags.contains(QualityFlags::OK));
    }

    #[test]
    fn malformed_number_reports_line_and_column() {
        let text = WELL_FORMED.replace("18.9", "abc");
        match load_csv_str(&text, &CsvSchema::default()) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "temperature");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_timestamps_are_rejected() {
        let text = WELL_FORMED.replace("08:10:00", "08:05:00");
        assert!(matches!(
            load_csv_str(&text, &CsvSchema::default()),
            Err(Error::DuplicateTimestamp(_))
        ));
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(
            load_csv_str("", &CsvSchema::default()),
            Err(Error::EmptyFile(_))
        ));
        assert!(matches!(
            load_csv_str("timestamp,illuminance\n", &CsvSchema::default()),
            Err(Error::EmptyFile(_))
        ));
    }

    #[test]
    fn decimal_comma_and_semicolon_delimiter() {
        let text = "\
timestamp;illuminance;temperature;humidity;voltage;current
2019-01-14 08:00;1000,5;18,5;70,0;13,9;0,4
";
        let schema = CsvSchema {
            delimiter: ';',
            decimal: ',',
            ..CsvSchema::default()
        };
        let dataset = load_csv_str(text, &schema).unwrap();
        assert_eq!(dataset.records()[0].illuminance, Some(1000.5));
        assert_eq!(dataset.records()[0].timestamp, ts(8, 0));
    }

    #[test]
    fn station_file_without_electrical_columns_loads_cleanly() {
        let text = "\
timestamp,illuminance,temperature,humidity
2018-11-12T09:00:00-06:00,30000,21,55
2018-11-12T09:05:00-06:00,31000,21.5,54
";
        let dataset = load_csv_str(text, &CsvSchema::default()).unwrap();
        let first = &dataset.records()[0];
        assert_eq!(first.voltage, None);
        assert_eq!(first.power, None);
        assert!(!first.quality_flags.contains(QualityFlags::MISSING));
        assert!(first.quality_flags.contains(QualityFlags::OK));
    }

    #[test]
    fn empty_mapped_cell_is_flagged_missing() {
        let text = "\
timestamp,illuminance,temperature,humidity,voltage,current
2019-01-14T08:00:00-06:00,1000,,70,13.9,0.4
";
        let dataset = load_csv_str(text, &CsvSchema::default()).unwrap();
        let record = &dataset.records()[0];
        assert!(record.quality_flags.contains(QualityFlags::MISSING));
        assert_eq!(record.temperature, None);
    }

    #[test]
    fn written_dataset_reloads_identically() {
        let mut records = vec![record(8, 0, 1000.0), record(8, 5, 1500.0)];
        // a saturated record and a gap-filled record with a missing cell
        let mut saturated = MeasurementRecord::new(
            ts(8, 10),
            Some(2000.0),
            Some(19.0),
            Some(100.0),
            Some(14.0),
            Some(0.7),
        );
        saturated = validate_record(saturated);
        records.push(saturated);
        let mut filled = MeasurementRecord::new(ts(8, 15), Some(2500.0), None, Some(61.0), None, None);
        filled.quality_flags.insert(QualityFlags::GAP_FILLED);
        filled.quality_flags.insert(QualityFlags::MISSING);
        records.push(validate_record(filled));

        let dataset = Dataset::from_records(records).unwrap();
        let text = dataset_to_csv_string(&dataset);
        let reloaded = load_csv_str(&text, &CsvSchema::default()).unwrap();
        assert_eq!(reloaded.records(), dataset.records());
        // and the rendering itself is stable
        assert_eq!(dataset_to_csv_string(&reloaded), text);
    }

    #[test]
    fn on_grid_drop_resample_is_identity() {
        let dataset = Dataset::from_records(vec![
            record(8, 0, 1.0),
            record(8, 5, 2.0),
            record(8, 10, 3.0),
        ])
        .unwrap();
        let resampled = resample_to_grid(&dataset, Duration::minutes(5), GapPolicy::Drop).unwrap();
        assert_eq!(resampled.records(), dataset.records());
    }

    #[test]
    fn linear_fill_synthesizes_midpoint() {
        let dataset =
            Dataset::from_records(vec![record(8, 0, 1000.0), record(8, 10, 2000.0)]).unwrap();
        let resampled =
            resample_to_grid(&dataset, Duration::minutes(5), GapPolicy::Linear).unwrap();
        assert_eq!(resampled.len(), 3);
        let middle = &resampled.records()[1];
        assert_eq!(middle.timestamp, ts(8, 5));
        assert_eq!(middle.illuminance, Some(1500.0));
        assert_eq!(middle.temperature, Some(20.0));
        assert!(middle.quality_flags.contains(QualityFlags::GAP_FILLED));
        // power re-derived from interpolated voltage and current
        assert_eq!(middle.power, Some(14.0 * 1.0));
    }

    #[test]
    fn drop_policy_omits_gap_points() {
        let dataset =
            Dataset::from_records(vec![record(8, 0, 1000.0), record(8, 10, 2000.0)]).unwrap();
        let resampled = resample_to_grid(&dataset, Duration::minutes(5), GapPolicy::Drop).unwrap();
        assert_eq!(resampled.len(), 2);
        assert_eq!(resampled.records()[1].timestamp, ts(8, 10));
    }

    #[test]
    fn hold_last_copies_previous_values() {
        let dataset =
            Dataset::from_records(vec![record(8, 0, 1000.0), record(8, 10, 2000.0)]).unwrap();
        let resampled =
            resample_to_grid(&dataset, Duration::minutes(5), GapPolicy::HoldLast).unwrap();
        assert_eq!(resampled.len(), 3);
        let middle = &resampled.records()[1];
        assert_eq!(middle.illuminance, Some(1000.0));
        assert!(middle.quality_flags.contains(QualityFlags::GAP_FILLED));
    }

    #[test]
    fn resampled_timestamps_are_congruent_to_anchor() {
        let dataset = Dataset::from_records(vec![
            record(8, 0, 1.0),
            record(8, 7, 2.0),
            record(8, 22, 3.0),
            record(8, 30, 4.0),
        ])
        .unwrap();
        for policy in [GapPolicy::Drop, GapPolicy::HoldLast, GapPolicy::Linear] {
            let resampled = resample_to_grid(&dataset, Duration::minutes(5), policy).unwrap();
            let anchor = resampled.records()[0].timestamp;
            for r in resampled.records() {
                let offset = (r.timestamp - anchor).num_seconds();
                assert_eq!(offset % 300, 0, "{policy:?}: {offset}");
            }
        }
    }

    fn shifted(dataset: &Dataset, minutes: i64) -> Dataset {
        let records = dataset
            .records()
            .iter()
            .map(|r| {
                let mut shifted = r.clone();
                shifted.timestamp += Duration::minutes(minutes);
                shifted
            })
            .collect();
        Dataset::from_records(records).unwrap()
    }

    #[test]
    fn identical_timestamp_sets_fully_match() {
        let dataset = Dataset::from_records(vec![
            record(8, 0, 1.0),
            record(8, 5, 2.0),
            record(8, 10, 3.0),
        ])
        .unwrap();
        let (pairs, report) = align_series(&dataset, &dataset, Duration::minutes(1)).unwrap();
        assert_eq!(pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(report.matched_count, 3);
        assert_eq!(report.dropped_left, 0);
        assert_eq!(report.dropped_right, 0);
        assert_eq!(report.max_time_skew_seconds, 0);
    }

    #[test]
    fn disjoint_ranges_have_no_overlap() {
        let a = Dataset::from_records(vec![record(8, 0, 1.0), record(8, 5, 2.0)]).unwrap();
        let b = shifted(&a, 24 * 60);
        assert!(matches!(
            align_series(&a, &b, Duration::minutes(2)),
            Err(Error::NoOverlap)
        ));
    }

    #[test]
    fn shifted_series_matches_within_tolerance() {
        let a = Dataset::from_records(vec![
            record(8, 0, 1.0),
            record(8, 5, 2.0),
            record(8, 10, 3.0),
            record(8, 15, 4.0),
        ])
        .unwrap();
        let b = shifted(&a, 2);
        let (pairs, report) =
            align_series(&a, &b, Duration::seconds(150)).unwrap();
        assert_eq!(pairs.len(), 4);
        assert_eq!(report.max_time_skew_seconds, 120);

        // symmetric matched count
        let (_, swapped) = align_series(&b, &a, Duration::seconds(150)).unwrap();
        assert_eq!(swapped.matched_count, report.matched_count);
    }

    #[test]
    fn schema_rejects_double_mapped_columns() {
        let mut schema = CsvSchema::default();
        schema
            .columns
            .insert(LogicalField::Voltage, ColumnRef::Name("temperature".into()));
        assert!(matches!(
            load_csv_str(WELL_FORMED, &schema),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn column_stats_present_for_loaded_channels() {
        let dataset = load_csv_str(WELL_FORMED, &CsvSchema::default()).unwrap();
        assert!(dataset.column_stats().contains_key(&Channel::Power));
        assert_eq!(dataset.column_stats()[&Channel::Illuminance].min, 1000.0);
        assert_eq!(dataset.column_stats()[&Channel::Illuminance].max, 2100.0);
    }
}
