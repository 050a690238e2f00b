//! Experiment harness: variable-subset topology sweeps, the ANN-vs-MLR
//! comparison, cross-instrument station comparison, and the lagged-input
//! short-term forecast matrix.
//!
//! Sweep runs are deterministic: the split permutation comes from the split
//! seed, and run `i` of a sweep trains with seed `base_seed + i` so runs are
//! independent and reproducible whether executed serially or in parallel.

use std::fmt;

use chrono::Duration;

use crate::ann::{init_weights, train, MlpModel, StopReason, Topology, TrainConfig};
use crate::error::{Error, Result};
use crate::ingest::{align_series, AlignmentReport};
use crate::mlr::{anova, fit_mlr, predict_mlr, MlrModel};
use crate::stats::{fit_scaler, normalize_series, rmse, transform, AnovaTable, MinMaxScaler};
use crate::types::{
    split_indices, Channel, DataMatrix, Dataset, SplitSpec, Timestamp, Variable,
};

/// Which rows the min-max scaler is fitted on.
///
/// Training-only fitting is the default: fitting on the whole dataset leaks
/// the test extremes. The whole-dataset variant reproduces the literal
/// "entire data-set" reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScalerFit {
    #[default]
    TrainOnly,
    AllData,
}

impl std::str::FromStr for ScalerFit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(ScalerFit::TrainOnly),
            "all" => Ok(ScalerFit::AllData),
            other => Err(Error::InvalidConfig(format!(
                "unknown scaler-fit policy '{other}' (use train|all)"
            ))),
        }
    }
}

/// One experiment: input variables, the topologies to sweep, and how to
/// split, scale, and train.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub variables: Vec<Variable>,
    pub topologies: Vec<Topology>,
    pub split: SplitSpec,
    pub train_config: TrainConfig,
    pub scaler_fit: ScalerFit,
    /// Humidity-saturated records stay in by default; the sensor kept
    /// logging through its morning plateau.
    pub include_saturated: bool,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(Error::InvalidConfig("no input variables selected".into()));
        }
        if self.topologies.is_empty() {
            return Err(Error::InvalidConfig("topology sweep list is empty".into()));
        }
        Ok(())
    }
}

/// One sweep run's configuration and outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variables: Vec<Variable>,
    pub topology: Topology,
    pub max_cycles: usize,
    pub target_error: f64,
    pub cycles_used: usize,
    pub stop_reason: StopReason,
    pub final_training_error: f64,
    /// Test RMSE on the normalized scale.
    pub test_rmse: f64,
}

pub fn variables_label(variables: &[Variable]) -> String {
    variables
        .iter()
        .map(|v| v.name())
        .collect::<Vec<_>>()
        .join("+")
}

/// Sweep outcomes sorted ascending by test RMSE.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "variables,topology,max_cycles,error_level,cycles_used,stop_reason,final_training_error,test_rmse\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                variables_label(&row.variables),
                row.topology,
                row.max_cycles,
                row.target_error,
                row.cycles_used,
                row.stop_reason,
                row.final_training_error,
                row.test_rmse,
            ));
        }
        out
    }
}

impl fmt::Display for SweepResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<38} {:>10} {:>16} {:>12} {:>10}",
            "Input Variables", "Topology", "Training cycles", "Error level", "RMSE"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:<38} {:>10} {:>16} {:>12} {:>10.5}",
                variables_label(&row.variables),
                row.topology.to_string(),
                row.max_cycles,
                row.target_error,
                row.test_rmse,
            )?;
        }
        Ok(())
    }
}

struct PreparedRun {
    scaler: MinMaxScaler,
    train_data: DataMatrix,
    validation_data: DataMatrix,
    test_data: DataMatrix,
    /// Dataset record index per test row.
    test_record_indices: Vec<usize>,
}

fn prepare_split(
    matrix: &DataMatrix,
    record_indices: &[usize],
    split: &SplitSpec,
    scaler_fit: ScalerFit,
) -> Result<PreparedRun> {
    if matrix.rows() < split.total() {
        return Err(Error::InsufficientData {
            needed: split.total(),
            available: matrix.rows(),
        });
    }
    let (train_idx, validation_idx, test_idx) = split_indices(matrix.rows(), split)?;
    let train_raw = matrix.select_rows(&train_idx);
    let validation_raw = matrix.select_rows(&validation_idx);
    let test_raw = matrix.select_rows(&test_idx);
    let scaler = match scaler_fit {
        ScalerFit::TrainOnly => fit_scaler(&train_raw)?,
        ScalerFit::AllData => fit_scaler(matrix)?,
    };
    Ok(PreparedRun {
        train_data: transform(&scaler, &train_raw)?,
        validation_data: transform(&scaler, &validation_raw)?,
        test_data: transform(&scaler, &test_raw)?,
        test_record_indices: test_idx.iter().map(|&i| record_indices[i]).collect(),
        scaler,
    })
}

fn ann_outputs(model: &MlpModel, data: &DataMatrix) -> Vec<f64> {
    (0..data.rows())
        .map(|r| model.forward(data.row(r)).expect("shapes checked")[0])
        .collect()
}

/// Runs every topology in the spec over the selected variables and reports
/// test RMSE per run, sorted best first. Records flagged MISSING or
/// OUT_OF_RANGE never enter the matrix.
pub fn run_experiment(data: &Dataset, spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    for topology in &spec.topologies {
        if topology.input_size() != spec.variables.len() {
            return Err(Error::TopologyInputMismatch {
                expected: topology.input_size(),
                found: spec.variables.len(),
            });
        }
    }
    let (matrix, record_indices) =
        DataMatrix::from_dataset(data, &spec.variables, spec.include_saturated)?;
    let prepared = prepare_split(&matrix, &record_indices, &spec.split, spec.scaler_fit)?;

    let mut rows = Vec::with_capacity(spec.topologies.len());
    for (run_index, topology) in spec.topologies.iter().enumerate() {
        let run_config = TrainConfig {
            seed: spec.train_config.seed.wrapping_add(run_index as u64),
            ..spec.train_config.clone()
        };
        let model = init_weights(topology, run_config.seed);
        let trained = train(
            model,
            &prepared.train_data,
            Some(&prepared.validation_data),
            &run_config,
        )?;
        let outputs = ann_outputs(&trained, &prepared.test_data);
        let test_rmse = rmse(&outputs, prepared.test_data.target())?;
        let history = &trained.history().training_error;
        rows.push(SweepRow {
            variables: spec.variables.clone(),
            topology: topology.clone(),
            max_cycles: run_config.max_cycles,
            target_error: run_config.target_error,
            cycles_used: history.len(),
            stop_reason: trained.stop_reason().expect("training completed"),
            final_training_error: *history.last().expect("at least one cycle"),
            test_rmse,
        });
    }
    rows.sort_by(|a, b| a.test_rmse.total_cmp(&b.test_rmse));
    Ok(SweepResult { rows })
}

/// Per-timestamp comparison row, physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub timestamp: Timestamp,
    pub actual: f64,
    pub ann_estimate: f64,
    pub mlr_estimate: f64,
}

/// ANN and MLR trained on the same partition and evaluated on the same test
/// rows.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Test rows in timestamp order.
    pub rows: Vec<ComparisonRow>,
    /// Test RMSE of the ANN, normalized scale.
    pub ann_rmse: f64,
    /// Test RMSE of the MLR, normalized scale.
    pub mlr_rmse: f64,
    pub ann_model: MlpModel,
    pub mlr_model: MlrModel,
    /// ANOVA of the MLR fit on its (normalized) training rows.
    pub anova: AnovaTable,
}

/// Trains the first topology of the spec and an MLR on the same training
/// partition (all three variables required) and evaluates both on the same
/// test rows.
pub fn compare_models(data: &Dataset, spec: &ExperimentSpec) -> Result<ComparisonReport> {
    spec.validate()?;
    if spec.variables.len() != 3 {
        return Err(Error::InvalidConfig(
            "model comparison uses all three input variables".into(),
        ));
    }
    let topology = &spec.topologies[0];
    if topology.input_size() != spec.variables.len() {
        return Err(Error::TopologyInputMismatch {
            expected: topology.input_size(),
            found: spec.variables.len(),
        });
    }
    let (matrix, record_indices) =
        DataMatrix::from_dataset(data, &spec.variables, spec.include_saturated)?;
    let prepared = prepare_split(&matrix, &record_indices, &spec.split, spec.scaler_fit)?;

    let ann_model = train(
        init_weights(topology, spec.train_config.seed),
        &prepared.train_data,
        Some(&prepared.validation_data),
        &spec.train_config,
    )?;
    let ann_normalized = ann_outputs(&ann_model, &prepared.test_data);
    let ann_rmse = rmse(&ann_normalized, prepared.test_data.target())?;

    let mlr_model = fit_mlr(&prepared.train_data)?;
    let mlr_normalized = predict_mlr(&mlr_model, &prepared.test_data)?;
    let mlr_rmse = rmse(&mlr_normalized, prepared.test_data.target())?;
    let anova_table = anova(&mlr_model, &prepared.train_data)?;

    let mut rows: Vec<ComparisonRow> = (0..prepared.test_data.rows())
        .map(|r| ComparisonRow {
            timestamp: data.records()[prepared.test_record_indices[r]].timestamp,
            actual: prepared
                .scaler
                .denormalize_target(prepared.test_data.target()[r]),
            ann_estimate: prepared.scaler.denormalize_target(ann_normalized[r]),
            mlr_estimate: prepared.scaler.denormalize_target(mlr_normalized[r]),
        })
        .collect();
    rows.sort_by_key(|row| row.timestamp);

    Ok(ComparisonReport {
        rows,
        ann_rmse,
        mlr_rmse,
        ann_model,
        mlr_model,
        anova: anova_table,
    })
}

/// Cross-instrument check: align the two datasets in time, min-max
/// normalize each matched series independently, and return the RMSE between
/// them along with the alignment report.
pub fn compare_station(
    prototype: &Dataset,
    station: &Dataset,
    channel: Channel,
    tolerance: Duration,
) -> Result<(f64, AlignmentReport)> {
    let (pairs, report) = align_series(prototype, station, tolerance)?;
    let mut left = Vec::with_capacity(pairs.len());
    let mut right = Vec::with_capacity(pairs.len());
    for (i, j) in &pairs {
        let a = prototype.records()[*i].channel(channel);
        let b = station.records()[*j].channel(channel);
        if let (Some(a), Some(b)) = (a, b) {
            left.push(a);
            right.push(b);
        }
    }
    if left.is_empty() {
        return Err(Error::NoOverlap);
    }
    let left_normalized = normalize_series(&left)?;
    let right_normalized = normalize_series(&right)?;
    let value = rmse(&left_normalized, &right_normalized)?;
    Ok((value, report))
}

/// Lagged feature matrix plus the dataset record index of each row's
/// target.
pub fn forecast_rows(
    data: &Dataset,
    lags: usize,
    horizon: usize,
) -> Result<(DataMatrix, Vec<usize>)> {
    if lags == 0 || horizon == 0 {
        return Err(Error::InvalidConfig("lags and horizon must be >= 1".into()));
    }
    let records = data.records();
    let period = data.sampling_period();
    let anchor = records[0].timestamp;
    for record in records {
        let offset = (record.timestamp - anchor).num_seconds();
        if offset % period.num_seconds() != 0 {
            return Err(Error::NotOnGrid(record.timestamp));
        }
    }
    let window = lags + horizon;
    if records.len() < window {
        return Err(Error::InsufficientHistory {
            needed: window,
            available: records.len(),
        });
    }

    let mut column_names = Vec::with_capacity(lags * 3);
    for lag in 1..=lags {
        for variable in Variable::ALL {
            column_names.push(format!("{}_lag{lag}", variable.name()));
        }
    }

    let mut features = Vec::new();
    let mut target = Vec::new();
    let mut target_indices = Vec::new();
    'rows: for t in lags..=(records.len() - horizon) {
        let target_index = t + horizon - 1;
        // the whole window must sit on consecutive grid steps
        for i in (t - lags)..target_index {
            if records[i + 1].timestamp - records[i].timestamp != period {
                continue 'rows;
            }
        }
        let target_record = &records[target_index];
        if !target_record.quality_flags.usable() {
            continue;
        }
        let Some(power) = target_record.power else { continue };
        let mut row = Vec::with_capacity(lags * 3);
        for lag in 1..=lags {
            let record = &records[t - lag];
            if !record.quality_flags.usable() {
                continue 'rows;
            }
            for variable in Variable::ALL {
                match record.channel(variable.channel()) {
                    Some(value) => row.push(value),
                    None => continue 'rows,
                }
            }
        }
        features.extend_from_slice(&row);
        target.push(power);
        target_indices.push(target_index);
    }
    if target.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: window,
            available: 0,
        });
    }
    let matrix = DataMatrix::new(features, target, column_names)?;
    Ok((matrix, target_indices))
}

/// Lagged feature matrix: the row at grid step t carries the three
/// variables at t-1..t-lags and the power at t+horizon-1. Rows spanning
/// grid gaps are dropped.
pub fn build_forecast_matrix(data: &Dataset, lags: usize, horizon: usize) -> Result<DataMatrix> {
    forecast_rows(data, lags, horizon).map(|(matrix, _)| matrix)
}

/// Trained forecast network plus its held-out evaluation.
#[derive(Debug, Clone)]
pub struct ForecastReport {
    pub model: MlpModel,
    /// (target timestamp, actual power, forecast power), timestamp order.
    pub rows: Vec<(Timestamp, f64, f64)>,
    /// Test RMSE on the normalized scale.
    pub test_rmse: f64,
}

/// Builds the lagged matrix, splits, trains the given topology, and
/// evaluates the forecast on the held-out rows.
pub fn run_forecast(
    data: &Dataset,
    lags: usize,
    horizon: usize,
    topology: &Topology,
    split: &SplitSpec,
    train_config: &TrainConfig,
    scaler_fit: ScalerFit,
) -> Result<ForecastReport> {
    let (matrix, target_indices) = forecast_rows(data, lags, horizon)?;
    if topology.input_size() != matrix.cols() {
        return Err(Error::TopologyInputMismatch {
            expected: topology.input_size(),
            found: matrix.cols(),
        });
    }
    let prepared = prepare_split(&matrix, &target_indices, split, scaler_fit)?;
    let model = train(
        init_weights(topology, train_config.seed),
        &prepared.train_data,
        Some(&prepared.validation_data),
        train_config,
    )?;
    let outputs = ann_outputs(&model, &prepared.test_data);
    let test_rmse = rmse(&outputs, prepared.test_data.target())?;
    let mut rows: Vec<(Timestamp, f64, f64)> = (0..prepared.test_data.rows())
        .map(|r| {
            (
                data.records()[prepared.test_record_indices[r]].timestamp,
                prepared
                    .scaler
                    .denormalize_target(prepared.test_data.target()[r]),
                prepared.scaler.denormalize_target(outputs[r]),
            )
        })
        .collect();
    rows.sort_by_key(|(ts, _, _)| *ts);
    Ok(ForecastReport {
        model,
        rows,
        test_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::parse_topology;
    use crate::ingest::default_utc_offset;
    use crate::synthetic::{generate, NoiseSd, PanelCoeffs, SynthConfig};
    use crate::types::{validate_record, MeasurementRecord};
    use chrono::TimeZone;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quick_config(cycles: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            max_cycles: cycles,
            target_error: 1e-6,
            seed,
            ..TrainConfig::default()
        }
    }

    fn small_synthetic() -> Dataset {
        generate(&SynthConfig {
            days: 5,
            seed: 77,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    fn small_spec(topologies: &[&str]) -> ExperimentSpec {
        ExperimentSpec {
            variables: Variable::ALL.to_vec(),
            topologies: topologies.iter().map(|t| parse_topology(t).unwrap()).collect(),
            split: SplitSpec::new(300, 100, 50, 42),
            train_config: quick_config(60, 1),
            scaler_fit: ScalerFit::TrainOnly,
            include_saturated: true,
        }
    }

    #[test]
    fn single_topology_sweep_has_one_row() {
        let data = small_synthetic();
        let result = run_experiment(&data, &small_spec(&["3:3:1"])).unwrap();
        assert_eq!(result.rows.len(), 1);
        let row = &result.rows[0];
        assert!(row.test_rmse >= 0.0);
        assert_eq!(row.cycles_used, 60);
        assert_eq!(row.stop_reason, StopReason::MaxCycles);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let data = small_synthetic();
        let mut spec = small_spec(&["2:8:1"]);
        spec.variables = Variable::ALL.to_vec();
        assert!(matches!(
            run_experiment(&data, &spec),
            Err(Error::TopologyInputMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn sweep_rows_are_sorted_by_test_rmse() {
        let data = small_synthetic();
        let result = run_experiment(&data, &small_spec(&["3:3:1", "3:5:1", "3:2:1"])).unwrap();
        assert_eq!(result.rows.len(), 3);
        for pair in result.rows.windows(2) {
            assert!(pair[0].test_rmse <= pair[1].test_rmse);
        }
    }

    #[test]
    fn sweeps_are_bit_reproducible() {
        let data = small_synthetic();
        let spec = small_spec(&["3:3:1", "3:4:1"]);
        let a = run_experiment(&data, &spec).unwrap();
        let b = run_experiment(&data, &spec).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn insufficient_rows_are_reported() {
        let data = generate(&SynthConfig {
            days: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        let spec = small_spec(&["3:3:1"]);
        // 288 records < 450 requested
        assert!(matches!(
            run_experiment(&data, &spec),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn comparison_report_row_count_matches_test_size() {
        let data = small_synthetic();
        let report = compare_models(&data, &small_spec(&["3:3:1"])).unwrap();
        assert_eq!(report.rows.len(), 50);
        for pair in report.rows.windows(2) {
            assert!(pair[0].timestamp < pair[1].timestamp);
        }
        report.anova.check_identities(1e-6).unwrap();
    }

    #[test]
    fn comparison_requires_three_variables() {
        let data = small_synthetic();
        let mut spec = small_spec(&["2:3:1"]);
        spec.variables = vec![Variable::Illuminance, Variable::Humidity];
        assert!(matches!(
            compare_models(&data, &spec),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn mlr_is_exact_on_linear_noise_free_data() {
        let data = generate(&SynthConfig {
            days: 4,
            panel_coeffs: PanelCoeffs {
                lux: 8.0e-4,
                temperature: -0.2,
                humidity: -0.05,
                intercept: 25.0,
            },
            noise_sd: NoiseSd::ZERO,
            cloud_events_per_day: 0.0,
            seed: 5,
            ..SynthConfig::default()
        })
        .unwrap();
        let report = compare_models(&data, &small_spec(&["3:3:1"])).unwrap();
        assert!(report.mlr_rmse < 1e-6, "mlr rmse {}", report.mlr_rmse);
        assert!(report.ann_rmse >= report.mlr_rmse);
    }

    #[test]
    fn station_compared_with_itself_is_zero() {
        let data = small_synthetic();
        let (value, report) =
            compare_station(&data, &data, Channel::Illuminance, Duration::minutes(1)).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(report.matched_count, data.len());
    }

    #[test]
    fn multiplicative_bias_vanishes_under_normalization() {
        let data = small_synthetic();
        let biased_records: Vec<MeasurementRecord> = data
            .records()
            .iter()
            .map(|r| {
                let mut biased = r.clone();
                biased.illuminance = r.illuminance.map(|v| v * 1.05);
                validate_record(biased)
            })
            .collect();
        let biased = Dataset::from_records(biased_records).unwrap();
        let (value, _) =
            compare_station(&data, &biased, Channel::Illuminance, Duration::minutes(1)).unwrap();
        assert!(value < 1e-12, "rmse {value}");
    }

    #[test]
    fn independent_noise_gives_root_two_sigma_rmse() {
        // both instruments carry independent noise of sd 0.05 on the
        // normalized scale; the rmse of the difference is ~sqrt(2)*0.05
        let base = small_synthetic();
        let stats = base.column_stats()[&Channel::Illuminance];
        let range = stats.max - stats.min;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut noisy = |dataset: &Dataset| -> Dataset {
            let records = dataset
                .records()
                .iter()
                .map(|r| {
                    let mut n = r.clone();
                    n.illuminance = r
                        .illuminance
                        .map(|v| v + rng.gen_range(-1.0f64..1.0) * 0.05 * range * 1.732);
                    n.quality_flags = crate::types::QualityFlags::empty();
                    validate_record(n)
                })
                .collect();
            Dataset::from_records(records).unwrap()
        };
        let proto = noisy(&base);
        let station = noisy(&base);
        let (value, _) =
            compare_station(&proto, &station, Channel::Illuminance, Duration::minutes(1)).unwrap();
        assert!(
            (0.05..=0.09).contains(&value),
            "rmse {value} outside [0.05, 0.09]"
        );
    }

    fn gridded(lux: &[f64]) -> Dataset {
        let offset = default_utc_offset();
        let records = lux
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let ts = offset
                    .with_ymd_and_hms(2019, 1, 14, 8, 0, 0)
                    .unwrap()
                    + Duration::minutes(5 * i as i64);
                validate_record(MeasurementRecord::new(
                    ts,
                    Some(*v),
                    Some(20.0),
                    Some(50.0),
                    Some(14.0),
                    Some(1.0),
                ))
            })
            .collect();
        Dataset::from_records(records).unwrap()
    }

    #[test]
    fn forecast_matrix_shapes() {
        let lux: Vec<f64> = (0..10).map(|i| 1000.0 + i as f64).collect();
        let data = gridded(&lux);
        let matrix = build_forecast_matrix(&data, 3, 1).unwrap();
        assert_eq!(matrix.cols(), 9);
        assert_eq!(matrix.rows(), 7);
        // row 0 is t=3: features are lags 1..3 i.e. records 2,1,0
        assert_eq!(matrix.row(0)[0], 1002.0); // illuminance_lag1
        assert_eq!(matrix.row(0)[3], 1001.0); // illuminance_lag2
        assert_eq!(matrix.row(0)[6], 1000.0); // illuminance_lag3
        assert_eq!(matrix.target()[0], 14.0); // power at t
    }

    #[test]
    fn forecast_rows_crossing_gaps_are_dropped() {
        let lux: Vec<f64> = (0..10).map(|i| 1000.0 + i as f64).collect();
        let full = gridded(&lux);
        // remove the record at index 5, leaving a one-step hole on the grid
        let records: Vec<MeasurementRecord> = full
            .records()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 5)
            .map(|(_, r)| r.clone())
            .collect();
        let gappy = Dataset::from_records(records).unwrap();
        let matrix = build_forecast_matrix(&gappy, 3, 1).unwrap();
        // consecutive runs 0..=4 and 6..=9 admit 2 + 1 complete windows
        assert_eq!(matrix.rows(), 3);
        for r in 0..matrix.rows() {
            // within every surviving window lag-1 is one grid step after lag-2
            assert_eq!(matrix.row(r)[0] - matrix.row(r)[3], 1.0);
            assert_eq!(matrix.row(r)[3] - matrix.row(r)[6], 1.0);
        }
    }

    #[test]
    fn forecast_off_grid_and_short_history_errors() {
        let lux = [1000.0, 1001.0];
        let data = gridded(&lux);
        assert!(matches!(
            build_forecast_matrix(&data, 3, 1),
            Err(Error::InsufficientHistory { needed: 4, .. })
        ));

        let offset = default_utc_offset();
        let records = vec![
            validate_record(MeasurementRecord::new(
                offset.with_ymd_and_hms(2019, 1, 14, 8, 0, 0).unwrap(),
                Some(1.0),
                Some(20.0),
                Some(50.0),
                None,
                None,
            )),
            validate_record(MeasurementRecord::new(
                offset.with_ymd_and_hms(2019, 1, 14, 8, 7, 0).unwrap(),
                Some(2.0),
                Some(20.0),
                Some(50.0),
                None,
                None,
            )),
            validate_record(MeasurementRecord::new(
                offset.with_ymd_and_hms(2019, 1, 14, 8, 10, 0).unwrap(),
                Some(3.0),
                Some(20.0),
                Some(50.0),
                None,
                None,
            )),
        ];
        let off_grid = Dataset::from_records(records).unwrap();
        assert!(matches!(
            build_forecast_matrix(&off_grid, 1, 1),
            Err(Error::NotOnGrid(_))
        ));
    }

    #[test]
    fn forecast_run_trains_and_reports() {
        let data = generate(&SynthConfig {
            days: 4,
            seed: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        let report = run_forecast(
            &data,
            3,
            1,
            &parse_topology("9:4:3:1").unwrap(),
            &SplitSpec::new(400, 100, 80, 11),
            &quick_config(40, 2),
            ScalerFit::TrainOnly,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 80);
        assert!(report.test_rmse >= 0.0);
        assert!(report.model.is_trained());
    }

    #[test]
    fn forecast_arity_must_match_topology() {
        let data = small_synthetic();
        let err = run_forecast(
            &data,
            2,
            1,
            &parse_topology("9:4:3:1").unwrap(),
            &SplitSpec::new(100, 0, 50, 1),
            &quick_config(5, 2),
            ScalerFit::TrainOnly,
        );
        assert!(matches!(
            err,
            Err(Error::TopologyInputMismatch { expected: 9, found: 6 })
        ));
    }
}
