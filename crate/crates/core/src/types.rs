//! Shared domain types: measurement records, datasets, feature matrices,
//! and the train/validation/test split.
//!
//! All types are immutable after construction and safe to share across
//! threads. Randomized operations (the split shuffle) are driven by an
//! explicit 64-bit seed and are bit-reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, FixedOffset};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Timestamps carry an explicit UTC offset; naive inputs are resolved by the
/// ingestion layer (UTC-6 by default).
pub type Timestamp = DateTime<FixedOffset>;

/// Sensor ceiling of the light sensor (128 klux) extended by the 55%
/// attenuating-glass factor.
pub const ILLUMINANCE_MAX_LUX: f64 = 128_000.0 * 1.55;
/// Temperature sensor range, degrees Celsius.
pub const TEMPERATURE_RANGE_C: (f64, f64) = (-40.0, 85.0);
/// Relative humidity at or above this is treated as a saturated reading.
pub const HUMIDITY_SATURATION_PCT: f64 = 99.9;

/// Quality flags attached to a record. Stored as a small bit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QualityFlags(u8);

impl QualityFlags {
    pub const OK: QualityFlags = QualityFlags(1);
    pub const HUMIDITY_SATURATED: QualityFlags = QualityFlags(2);
    pub const OUT_OF_RANGE: QualityFlags = QualityFlags(4);
    pub const GAP_FILLED: QualityFlags = QualityFlags(8);
    pub const MISSING: QualityFlags = QualityFlags(16);

    pub const fn empty() -> Self {
        QualityFlags(0)
    }

    pub fn contains(self, other: QualityFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: QualityFlags) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True when the record may feed model training: it is neither out of
    /// physical range nor missing a mapped value.
    pub fn usable(self) -> bool {
        !self.contains(Self::OUT_OF_RANGE) && !self.contains(Self::MISSING)
    }
}

const FLAG_NAMES: [(QualityFlags, &str); 5] = [
    (QualityFlags::OK, "OK"),
    (QualityFlags::HUMIDITY_SATURATED, "HUMIDITY_SATURATED"),
    (QualityFlags::OUT_OF_RANGE, "OUT_OF_RANGE"),
    (QualityFlags::GAP_FILLED, "GAP_FILLED"),
    (QualityFlags::MISSING, "MISSING"),
];

impl fmt::Display for QualityFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in FLAG_NAMES {
            if self.contains(flag) {
                if !first {
                    write!(f, "|")?;
                }
                write!(f, "{name}")?;
                first = false;
            }
        }
        Ok(())
    }
}

impl FromStr for QualityFlags {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut flags = QualityFlags::empty();
        for part in s.split('|').map(str::trim).filter(|p| !p.is_empty()) {
            let known = FLAG_NAMES.iter().find(|(_, name)| *name == part);
            match known {
                Some((flag, _)) => flags.insert(*flag),
                None => {
                    return Err(Error::Parse {
                        line: 0,
                        column: "flags".into(),
                        reason: format!("unknown flag '{part}'"),
                    })
                }
            }
        }
        Ok(flags)
    }
}

/// One timestamped sample. Power is derived from voltage and current at
/// construction time, never stored independently.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub timestamp: Timestamp,
    pub illuminance: Option<f64>,
    pub temperature: Option<f64>,
    pub humidity: Option<f64>,
    pub voltage: Option<f64>,
    pub current: Option<f64>,
    pub power: Option<f64>,
    pub quality_flags: QualityFlags,
}

impl MeasurementRecord {
    pub fn new(
        timestamp: Timestamp,
        illuminance: Option<f64>,
        temperature: Option<f64>,
        humidity: Option<f64>,
        voltage: Option<f64>,
        current: Option<f64>,
    ) -> Self {
        let power = match (voltage, current) {
            (Some(v), Some(i)) => Some(v * i),
            _ => None,
        };
        MeasurementRecord {
            timestamp,
            illuminance,
            temperature,
            humidity,
            voltage,
            current,
            power,
            quality_flags: QualityFlags::empty(),
        }
    }

    pub fn channel(&self, channel: Channel) -> Option<f64> {
        match channel {
            Channel::Illuminance => self.illuminance,
            Channel::Temperature => self.temperature,
            Channel::Humidity => self.humidity,
            Channel::Voltage => self.voltage,
            Channel::Current => self.current,
            Channel::Power => self.power,
        }
    }
}

/// Checks a record against the sensor ranges and saturation rule, updating
/// its quality flags. Validation is total: values are flagged, never
/// rejected, clamped, or altered. Flags already present are kept.
pub fn validate_record(mut record: MeasurementRecord) -> MeasurementRecord {
    let flags = &mut record.quality_flags;
    if let Some(lux) = record.illuminance {
        if !(0.0..=ILLUMINANCE_MAX_LUX).contains(&lux) {
            flags.insert(QualityFlags::OUT_OF_RANGE);
        }
    }
    if let Some(t) = record.temperature {
        if !(TEMPERATURE_RANGE_C.0..=TEMPERATURE_RANGE_C.1).contains(&t) {
            flags.insert(QualityFlags::OUT_OF_RANGE);
        }
    }
    if let Some(h) = record.humidity {
        if !(0.0..=100.0).contains(&h) {
            flags.insert(QualityFlags::OUT_OF_RANGE);
        }
        if h >= HUMIDITY_SATURATION_PCT {
            flags.insert(QualityFlags::HUMIDITY_SATURATED);
        }
    }
    for value in [record.voltage, record.current, record.power].into_iter().flatten() {
        if value < 0.0 {
            flags.insert(QualityFlags::OUT_OF_RANGE);
        }
    }
    if flags.is_empty() {
        flags.insert(QualityFlags::OK);
    }
    record
}

/// Logical data channels of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Channel {
    Illuminance,
    Temperature,
    Humidity,
    Voltage,
    Current,
    Power,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Illuminance,
        Channel::Temperature,
        Channel::Humidity,
        Channel::Voltage,
        Channel::Current,
        Channel::Power,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Illuminance => "illuminance",
            Channel::Temperature => "temperature",
            Channel::Humidity => "humidity",
            Channel::Voltage => "voltage",
            Channel::Current => "current",
            Channel::Power => "power",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Input variables selectable for model features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variable {
    Illuminance,
    Temperature,
    Humidity,
}

impl Variable {
    pub const ALL: [Variable; 3] = [Variable::Illuminance, Variable::Temperature, Variable::Humidity];

    pub fn channel(self) -> Channel {
        match self {
            Variable::Illuminance => Channel::Illuminance,
            Variable::Temperature => Channel::Temperature,
            Variable::Humidity => Channel::Humidity,
        }
    }

    pub fn name(self) -> &'static str {
        self.channel().name()
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "illuminance" | "lux" | "lighting" | "light" => Ok(Variable::Illuminance),
            "temperature" | "temp" => Ok(Variable::Temperature),
            "humidity" | "hum" | "rh" => Ok(Variable::Humidity),
            other => Err(Error::InvalidConfig(format!("unknown variable '{other}'"))),
        }
    }
}

/// Per-column summary over usable records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Records that contributed: value present and flags usable.
    pub count: usize,
}

/// Ordered collection of records with strictly increasing timestamps.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<MeasurementRecord>,
    sampling_period: Duration,
    column_stats: BTreeMap<Channel, ColumnStats>,
}

impl Dataset {
    /// Builds a dataset from records already sorted by the caller or not;
    /// records are sorted here and duplicate timestamps are rejected. The
    /// sampling period is inferred as the median inter-record gap (nominal
    /// 5 minutes when fewer than two records).
    pub fn from_records(mut records: Vec<MeasurementRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput);
        }
        records.sort_by_key(|r| r.timestamp);
        for pair in records.windows(2) {
            if pair[0].timestamp == pair[1].timestamp {
                return Err(Error::DuplicateTimestamp(pair[1].timestamp));
            }
        }
        let sampling_period = infer_period(&records);
        let column_stats = compute_column_stats(&records);
        Ok(Dataset {
            records,
            sampling_period,
            column_stats,
        })
    }

    pub fn records(&self) -> &[MeasurementRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn sampling_period(&self) -> Duration {
        self.sampling_period
    }

    pub fn column_stats(&self) -> &BTreeMap<Channel, ColumnStats> {
        &self.column_stats
    }

    /// Recomputes the per-column stats from the records; used to check the
    /// stored values are in sync.
    pub fn recompute_column_stats(&self) -> BTreeMap<Channel, ColumnStats> {
        compute_column_stats(&self.records)
    }
}

fn infer_period(records: &[MeasurementRecord]) -> Duration {
    if records.len() < 2 {
        return Duration::minutes(5);
    }
    let mut gaps: Vec<i64> = records
        .windows(2)
        .map(|p| (p[1].timestamp - p[0].timestamp).num_seconds())
        .collect();
    gaps.sort_unstable();
    Duration::seconds(gaps[gaps.len() / 2])
}

fn compute_column_stats(records: &[MeasurementRecord]) -> BTreeMap<Channel, ColumnStats> {
    let mut stats = BTreeMap::new();
    for channel in Channel::ALL {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut count = 0usize;
        for record in records {
            if !record.quality_flags.usable() {
                continue;
            }
            if let Some(v) = record.channel(channel) {
                min = min.min(v);
                max = max.max(v);
                sum += v;
                count += 1;
            }
        }
        if count > 0 {
            stats.insert(
                channel,
                ColumnStats {
                    min,
                    max,
                    mean: sum / count as f64,
                    count,
                },
            );
        }
    }
    stats
}

/// Dense feature matrix plus target vector, rows aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    features: Vec<f64>,
    target: Vec<f64>,
    column_names: Vec<String>,
}

impl DataMatrix {
    /// `features` is row-major with `column_names.len()` columns. Fails on
    /// any NaN or infinite entry and on shape inconsistencies.
    pub fn new(features: Vec<f64>, target: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        let cols = column_names.len();
        if cols == 0 {
            return Err(Error::ShapeMismatch("no feature columns".into()));
        }
        if features.len() % cols != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not fill rows of {} columns",
                features.len(),
                cols
            )));
        }
        let rows = features.len() / cols;
        if target.len() != rows {
            return Err(Error::ShapeMismatch(format!(
                "target has {} entries but features have {} rows",
                target.len(),
                rows
            )));
        }
        for (idx, v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(column_names[idx % cols].clone()));
            }
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("target".into()));
        }
        Ok(DataMatrix {
            rows,
            cols,
            features,
            target,
            column_names,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.cols..(i + 1) * self.cols]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Column values copied out; handy for correlation screens.
    pub fn column(&self, index: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r)[index]).collect()
    }

    /// New matrix containing the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let mut features = Vec::with_capacity(indices.len() * self.cols);
        let mut target = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            target.push(self.target[i]);
        }
        DataMatrix {
            rows: indices.len(),
            cols: self.cols,
            features,
            target,
            column_names: self.column_names.clone(),
        }
    }

    /// New matrix with one feature column removed (used by drop-one ANOVA).
    pub fn drop_column(&self, index: usize) -> Result<DataMatrix> {
        if index >= self.cols {
            return Err(Error::ShapeMismatch(format!(
                "column {index} out of range ({} columns)",
                self.cols
            )));
        }
        if self.cols == 1 {
            return Err(Error::ShapeMismatch("cannot drop the only column".into()));
        }
        let mut features = Vec::with_capacity(self.rows * (self.cols - 1));
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter().enumerate() {
                if c != index {
                    features.push(*v);
                }
            }
        }
        let mut column_names = self.column_names.clone();
        column_names.remove(index);
        Ok(DataMatrix {
            rows: self.rows,
            cols: self.cols - 1,
            features,
            target: self.target.clone(),
            column_names,
        })
    }

    /// Builds a feature matrix for the given variables with power as the
    /// target. Rows come from records that are usable (not out of range or
    /// missing), have every selected variable present, and have a power
    /// value. When `include_saturated` is false, humidity-saturated records
    /// are skipped as well. Returns the matrix and the indices of the source
    /// records within the dataset.
    pub fn from_dataset(
        dataset: &Dataset,
        variables: &[Variable],
        include_saturated: bool,
    ) -> Result<(DataMatrix, Vec<usize>)> {
        if variables.is_empty() {
            return Err(Error::ShapeMismatch("no variables selected".into()));
        }
        let mut features = Vec::new();
        let mut target = Vec::new();
        let mut indices = Vec::new();
        'records: for (i, record) in dataset.records().iter().enumerate() {
            if !record.quality_flags.usable() {
                continue;
            }
            if !include_saturated
                && record.quality_flags.contains(QualityFlags::HUMIDITY_SATURATED)
            {
                continue;
            }
            let Some(power) = record.power else { continue };
            let mut row = Vec::with_capacity(variables.len());
            for v in variables {
                match record.channel(v.channel()) {
                    Some(value) => row.push(value),
                    None => continue 'records,
                }
            }
            features.extend_from_slice(&row);
            target.push(power);
            indices.push(i);
        }
        if target.is_empty() {
            return Err(Error::InsufficientData {
                needed: 1,
                available: 0,
            });
        }
        let names = variables.iter().map(|v| v.name().to_string()).collect();
        let matrix = DataMatrix::new(features, target, names)?;
        Ok((matrix, indices))
    }
}

/// Sizes and seed for the shuffled train/validation/test partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_count: usize,
    pub validation_count: usize,
    pub test_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_count: usize, validation_count: usize, test_count: usize, seed: u64) -> Self {
        SplitSpec {
            train_count,
            validation_count,
            test_count,
            seed,
        }
    }

    pub fn total(&self) -> usize {
        self.train_count + self.validation_count + self.test_count
    }
}

/// Deterministic Fisher-Yates permutation of `0..n` seeded by `seed`.
pub fn seeded_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        indices.swap(i, j);
    }
    indices
}

/// Shuffled index partition for the given spec over `n` rows.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if spec.train_count == 0 || spec.test_count == 0 {
        return Err(Error::InvalidSplit(
            "train_count and test_count must be positive".into(),
        ));
    }
    if spec.total() > n {
        return Err(Error::CountExceedsData {
            requested: spec.total(),
            available: n,
        });
    }
    let permutation = seeded_permutation(n, spec.seed);
    let train = permutation[..spec.train_count].to_vec();
    let validation =
        permutation[spec.train_count..spec.train_count + spec.validation_count].to_vec();
    let test = permutation
        [spec.train_count + spec.validation_count..spec.total()]
        .to_vec();
    Ok((train, validation, test))
}

/// Shuffles rows by a seeded permutation, then partitions them
/// train/validation/test. The outputs are disjoint and cover exactly
/// `spec.total()` rows.
pub fn split_dataset(
    data: &DataMatrix,
    spec: &SplitSpec,
) -> Result<(DataMatrix, DataMatrix, DataMatrix)> {
    let (train, validation, test) = split_indices(data.rows(), spec)?;
    Ok((
        data.select_rows(&train),
        data.select_rows(&validation),
        data.select_rows(&test),
    ))
}
