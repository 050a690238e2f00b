//! From-scratch multilayer perceptron: topology parsing, seeded
//! initialization, forward pass, backpropagation with momentum, and the
//! fixed-budget training regime (max cycles plus a target error level).
//!
//! Hidden and output layers use the logistic sigmoid; the activation is a
//! deliberate seam (one private function) should another ever be needed.
//! Targets and features are expected on the normalized [0, 1] scale.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stats::{rmse, MinMaxScaler};
use crate::types::DataMatrix;

/// Ordered layer sizes, e.g. 3:3:1. The last layer is always 1 here: the
/// single power output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology(Vec<usize>);

impl Topology {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2
            || layer_sizes.iter().any(|&s| s == 0)
            || *layer_sizes.last().unwrap() != 1
        {
            let joined = layer_sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(":");
            return Err(Error::MalformedTopology(joined));
        }
        Ok(Topology(layer_sizes))
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.0
    }

    pub fn input_size(&self) -> usize {
        self.0[0]
    }

    pub fn output_size(&self) -> usize {
        *self.0.last().unwrap()
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for size in &self.0 {
            if !first {
                write!(f, ":")?;
            }
            write!(f, "{size}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_topology(s)
    }
}

/// Parses the colon syntax ("3:3:1") into a [`Topology`].
pub fn parse_topology(spec: &str) -> Result<Topology> {
    if spec.trim().is_empty() {
        return Err(Error::MalformedTopology(spec.into()));
    }
    let sizes: Vec<usize> = spec
        .trim()
        .split(':')
        .map(|part| {
            part.parse::<usize>()
                .map_err(|_| Error::MalformedTopology(spec.into()))
        })
        .collect::<Result<_>>()?;
    Topology::new(sizes).map_err(|_| Error::MalformedTopology(spec.into()))
}

/// How the per-cycle error level is measured against `target_error`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorLevelMetric {
    /// Aggregate RMSE over the training set (the reference behavior).
    #[default]
    Rmse,
    /// Largest per-sample absolute output error.
    PerSampleMax,
}

/// Training regime: fixed cycle budget with an error-level stop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_cycles: usize,
    pub target_error: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub shuffle_each_cycle: bool,
    /// Cycle interval between validation evaluations.
    pub validation_check_every: usize,
    /// When set, stop after this many consecutive validation checks without
    /// improvement. Off by default: the fixed-budget regime is the
    /// reference behavior.
    pub validation_patience: Option<usize>,
    pub error_metric: ErrorLevelMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_cycles: 5000,
            target_error: 0.1,
            learning_rate: 0.1,
            momentum: 0.8,
            seed: 0,
            shuffle_each_cycle: true,
            validation_check_every: 100,
            validation_patience: None,
            error_metric: ErrorLevelMetric::Rmse,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.max_cycles == 0 {
            return Err(Error::InvalidConfig("max_cycles must be >= 1".into()));
        }
        if !(self.target_error > 0.0) {
            return Err(Error::InvalidConfig("target_error must be > 0".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.momentum < 0.0 || self.momentum >= 1.0 {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        if self.validation_check_every == 0 {
            return Err(Error::InvalidConfig(
                "validation_check_every must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Why training ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    MaxCycles,
    ValidationStop,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StopReason::TargetReached => "TARGET_REACHED",
            StopReason::MaxCycles => "MAX_CYCLES",
            StopReason::ValidationStop => "VALIDATION_STOP",
        };
        f.write_str(name)
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TARGET_REACHED" => Ok(StopReason::TargetReached),
            "MAX_CYCLES" => Ok(StopReason::MaxCycles),
            "VALIDATION_STOP" => Ok(StopReason::ValidationStop),
            other => Err(Error::ModelFormat(format!("unknown stop reason '{other}'"))),
        }
    }
}

/// Per-cycle training error plus periodic validation error.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    /// One entry per completed cycle.
    pub training_error: Vec<f64>,
    /// (cycle, validation RMSE) at each periodic check.
    pub validation_error: Vec<(usize, f64)>,
}

/// Network weights plus training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    topology: Topology,
    /// Per connection layer: (out x in) row-major.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    history: TrainingHistory,
    stop_reason: Option<StopReason>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Derivative in terms of the activation value a = sigmoid(z).
fn sigmoid_derivative(a: f64) -> f64 {
    a * (1.0 - a)
}

impl MlpModel {
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn history(&self) -> &TrainingHistory {
        &self.history
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop_reason
    }

    pub fn is_trained(&self) -> bool {
        self.stop_reason.is_some()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Forward pass: per layer, affine transform then logistic sigmoid.
    /// Outputs are strictly inside (0, 1).
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.topology.input_size() {
            return Err(Error::ShapeMismatch(format!(
                "input has {} values, topology expects {}",
                input.len(),
                self.topology.input_size()
            )));
        }
        let mut activation = input.to_vec();
        for (weights, biases) in self.weights.iter().zip(&self.biases) {
            activation = layer_forward(weights, biases, &activation);
        }
        Ok(activation)
    }

    /// Forward pass keeping every layer's activations (input first).
    fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.weights.len() + 1);
        activations.push(input.to_vec());
        for (weights, biases) in self.weights.iter().zip(&self.biases) {
            let next = layer_forward(weights, biases, activations.last().unwrap());
            activations.push(next);
        }
        activations
    }

    /// Per-layer deltas for squared-error loss L = 1/2 sum (t - o)^2,
    /// given the activations of a forward trace. delta = -dL/dz.
    fn deltas(&self, activations: &[Vec<f64>], target: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.weights.len();
        let mut deltas: Vec<Vec<f64>> = vec![Vec::new(); layers];
        let output = activations.last().unwrap();
        deltas[layers - 1] = output
            .iter()
            .zip(target)
            .map(|(o, t)| (t - o) * sigmoid_derivative(*o))
            .collect();
        for l in (0..layers - 1).rev() {
            let next_weights = &self.weights[l + 1];
            let next_deltas = &deltas[l + 1];
            let width = activations[l + 1].len();
            deltas[l] = (0..width)
                .map(|i| {
                    let back: f64 = next_deltas
                        .iter()
                        .enumerate()
                        .map(|(j, d)| d * next_weights[j * width + i])
                        .sum();
                    back * sigmoid_derivative(activations[l + 1][i])
                })
                .collect();
        }
        deltas
    }
}

fn layer_forward(weights: &[f64], biases: &[f64], input: &[f64]) -> Vec<f64> {
    let out = biases.len();
    let inp = input.len();
    (0..out)
        .map(|j| {
            let z = biases[j]
                + weights[j * inp..(j + 1) * inp]
                    .iter()
                    .zip(input)
                    .map(|(w, x)| w * x)
                    .sum::<f64>();
            sigmoid(z)
        })
        .collect()
}

/// Fresh untrained model: weights uniform in [-0.5, 0.5] from a seeded
/// PRNG, biases zero.
pub fn init_weights(topology: &Topology, seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = topology.layer_sizes();
    let mut weights = Vec::with_capacity(sizes.len() - 1);
    let mut biases = Vec::with_capacity(sizes.len() - 1);
    for pair in sizes.windows(2) {
        let (inp, out) = (pair[0], pair[1]);
        weights.push((0..inp * out).map(|_| rng.gen_range(-0.5..0.5)).collect());
        biases.push(vec![0.0; out]);
    }
    MlpModel {
        topology: topology.clone(),
        weights,
        biases,
        history: TrainingHistory::default(),
        stop_reason: None,
    }
}

fn check_normalized(data: &DataMatrix) -> Result<()> {
    for v in data.features().iter().chain(data.target()) {
        if v.abs() > 10.0 {
            return Err(Error::UnnormalizedInput(*v));
        }
    }
    Ok(())
}

fn cycle_error(model: &MlpModel, data: &DataMatrix, metric: ErrorLevelMetric) -> f64 {
    match metric {
        ErrorLevelMetric::Rmse => {
            let outputs: Vec<f64> = (0..data.rows())
                .map(|r| model.forward(data.row(r)).unwrap()[0])
                .collect();
            rmse(&outputs, data.target()).unwrap()
        }
        ErrorLevelMetric::PerSampleMax => (0..data.rows())
            .map(|r| (model.forward(data.row(r)).unwrap()[0] - data.target()[r]).abs())
            .fold(0.0, f64::max),
    }
}

/// Trains with per-sample stochastic gradient descent on squared error,
/// sigmoid-derivative backpropagation, and a momentum term. One cycle is a
/// full pass over the training rows (shuffled each cycle when configured).
/// Training stops when the cycle error level reaches `target_error` or the
/// cycle budget runs out; validation RMSE is recorded every
/// `validation_check_every` cycles.
pub fn train(
    model: MlpModel,
    train_data: &DataMatrix,
    validation: Option<&DataMatrix>,
    config: &TrainConfig,
) -> Result<MlpModel> {
    config.validate()?;
    let mut model = model;
    if train_data.cols() != model.topology.input_size() {
        return Err(Error::TopologyInputMismatch {
            expected: model.topology.input_size(),
            found: train_data.cols(),
        });
    }
    if train_data.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    check_normalized(train_data)?;
    if let Some(v) = validation {
        if v.cols() != train_data.cols() {
            return Err(Error::ShapeMismatch(
                "validation columns differ from training columns".into(),
            ));
        }
        check_normalized(v)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_data.rows()).collect();
    let mut weight_updates: Vec<Vec<f64>> =
        model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut bias_updates: Vec<Vec<f64>> =
        model.biases.iter().map(|b| vec![0.0; b.len()]).collect();

    let mut history = TrainingHistory::default();
    let mut best_validation = f64::INFINITY;
    let mut checks_without_improvement = 0usize;
    let mut stop_reason = StopReason::MaxCycles;

    'cycles: for cycle in 1..=config.max_cycles {
        if config.shuffle_each_cycle {
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
        }
        for &row in &order {
            let activations = model.forward_trace(train_data.row(row));
            let target = [train_data.target()[row]];
            let deltas = model.deltas(&activations, &target);
            for l in 0..model.weights.len() {
                let inputs = &activations[l];
                let inp = inputs.len();
                for (j, delta) in deltas[l].iter().enumerate() {
                    for (i, x) in inputs.iter().enumerate() {
                        let idx = j * inp + i;
                        let update = config.learning_rate * delta * x
                            + config.momentum * weight_updates[l][idx];
                        model.weights[l][idx] += update;
                        weight_updates[l][idx] = update;
                    }
                    let update =
                        config.learning_rate * delta + config.momentum * bias_updates[l][j];
                    model.biases[l][j] += update;
                    bias_updates[l][j] = update;
                }
            }
        }

        let error = cycle_error(&model, train_data, config.error_metric);
        history.training_error.push(error);

        let check_validation = validation
            .filter(|v| v.rows() > 0 && cycle % config.validation_check_every == 0);
        if let Some(v) = check_validation {
            let v_error = cycle_error(&model, v, ErrorLevelMetric::Rmse);
            history.validation_error.push((cycle, v_error));
            if let Some(patience) = config.validation_patience {
                if v_error + 1e-12 < best_validation {
                    best_validation = v_error;
                    checks_without_improvement = 0;
                } else {
                    checks_without_improvement += 1;
                    if checks_without_improvement >= patience {
                        stop_reason = StopReason::ValidationStop;
                        break 'cycles;
                    }
                }
            }
        }

        if error <= config.target_error {
            stop_reason = StopReason::TargetReached;
            break;
        }
    }

    model.history = history;
    model.stop_reason = Some(stop_reason);
    Ok(model)
}

/// Squared-error loss 1/2 sum (t - o)^2 for one sample.
fn sample_loss(model: &MlpModel, input: &[f64], target: &[f64]) -> f64 {
    let output = model.forward(input).unwrap();
    0.5 * output
        .iter()
        .zip(target)
        .map(|(o, t)| (t - o) * (t - o))
        .sum::<f64>()
}

/// Compares every analytic weight and bias gradient against central finite
/// differences and returns the maximum relative deviation. The denominator
/// is floored at 1e-4 so that vanishing gradients are compared absolutely
/// (to ~1e-10) instead of amplifying floating-point noise.
pub fn gradient_check(
    model: &MlpModel,
    input: &[f64],
    target: &[f64],
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1e-2) {
        return Err(Error::InvalidConfig("epsilon must lie in (0, 1e-2]".into()));
    }
    if input.len() != model.topology.input_size() {
        return Err(Error::ShapeMismatch("input length".into()));
    }
    if target.len() != model.topology.output_size() {
        return Err(Error::ShapeMismatch("target length".into()));
    }

    let activations = model.forward_trace(input);
    let deltas = model.deltas(&activations, target);

    let mut max_deviation = 0.0f64;
    let mut compare = |analytic: f64, numeric: f64| {
        let deviation = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-4);
        max_deviation = max_deviation.max(deviation);
    };

    let mut probe = model.clone();
    for l in 0..model.weights.len() {
        let inp = activations[l].len();
        for j in 0..model.biases[l].len() {
            for i in 0..inp {
                let idx = j * inp + i;
                // dL/dw = -delta_j * a_i
                let analytic = -deltas[l][j] * activations[l][i];
                let original = probe.weights[l][idx];
                probe.weights[l][idx] = original + epsilon;
                let loss_plus = sample_loss(&probe, input, target);
                probe.weights[l][idx] = original - epsilon;
                let loss_minus = sample_loss(&probe, input, target);
                probe.weights[l][idx] = original;
                compare(analytic, (loss_plus - loss_minus) / (2.0 * epsilon));
            }
            let analytic = -deltas[l][j];
            let original = probe.biases[l][j];
            probe.biases[l][j] = original + epsilon;
            let loss_plus = sample_loss(&probe, input, target);
            probe.biases[l][j] = original - epsilon;
            let loss_minus = sample_loss(&probe, input, target);
            probe.biases[l][j] = original;
            compare(analytic, (loss_plus - loss_minus) / (2.0 * epsilon));
        }
    }
    Ok(max_deviation)
}

/// Forward pass per row, then the output mapped back to physical units
/// through the target scaler.
pub fn predict_ann(
    model: &MlpModel,
    data: &DataMatrix,
    scaler: &MinMaxScaler,
) -> Result<Vec<f64>> {
    if !model.is_trained() {
        return Err(Error::NotTrained);
    }
    if data.cols() != model.topology.input_size() {
        return Err(Error::ShapeMismatch(format!(
            "data has {} columns, topology expects {}",
            data.cols(),
            model.topology.input_size()
        )));
    }
    (0..data.rows())
        .map(|r| {
            let output = model.forward(data.row(r))?;
            Ok(scaler.denormalize_target(output[0]))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Plain-text model format (versioned; 17 significant digits round-trips f64
// bit-exactly)
// ---------------------------------------------------------------------------

const MODEL_FORMAT_VERSION: u32 = 1;

/// Serializes topology, stop reason, and weight/bias blocks.
pub fn serialize_model(model: &MlpModel) -> String {
    let mut out = format!("pvf-mlp {MODEL_FORMAT_VERSION}\n");
    out.push_str(&format!("topology {}\n", model.topology));
    out.push_str(&format!(
        "stop_reason {}\n",
        model
            .stop_reason
            .map(|r| r.to_string())
            .unwrap_or_else(|| "UNTRAINED".into())
    ));
    for (l, (weights, biases)) in model.weights.iter().zip(&model.biases).enumerate() {
        let out_size = biases.len();
        let in_size = weights.len() / out_size;
        out.push_str(&format!("layer {l} weights {out_size} {in_size}\n"));
        for j in 0..out_size {
            let row: Vec<String> = weights[j * in_size..(j + 1) * in_size]
                .iter()
                .map(|w| format!("{w:.16e}"))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out.push_str(&format!("layer {l} biases {out_size}\n"));
        let row: Vec<String> = biases.iter().map(|b| format!("{b:.16e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the plain-text format produced by [`serialize_model`].
pub fn deserialize_model(text: &str) -> Result<MlpModel> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::ModelFormat("empty model file".into()))?;
    let version = header
        .strip_prefix("pvf-mlp ")
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::ModelFormat(format!("bad header '{header}'")))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported version {version}"
        )));
    }
    let topology_line = lines
        .next()
        .and_then(|l| l.strip_prefix("topology "))
        .ok_or_else(|| Error::ModelFormat("missing topology line".into()))?;
    let topology = parse_topology(topology_line)?;
    let stop_line = lines
        .next()
        .and_then(|l| l.strip_prefix("stop_reason "))
        .ok_or_else(|| Error::ModelFormat("missing stop_reason line".into()))?;
    let stop_reason = match stop_line {
        "UNTRAINED" => None,
        other => Some(other.parse::<StopReason>()?),
    };

    let parse_row = |line: &str, expected: usize| -> Result<Vec<f64>> {
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::ModelFormat(format!("bad number '{v}'")))
            })
            .collect::<Result<_>>()?;
        if values.len() != expected {
            return Err(Error::ModelFormat(format!(
                "expected {expected} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    };

    let sizes = topology.layer_sizes().to_vec();
    let mut weights = Vec::with_capacity(sizes.len() - 1);
    let mut biases = Vec::with_capacity(sizes.len() - 1);
    for (l, pair) in sizes.windows(2).enumerate() {
        let (in_size, out_size) = (pair[0], pair[1]);
        let expect_header = format!("layer {l} weights {out_size} {in_size}");
        match lines.next() {
            Some(line) if line == expect_header => {}
            other => {
                return Err(Error::ModelFormat(format!(
                    "expected '{expect_header}', found {other:?}"
                )))
            }
        }
        let mut layer_weights = Vec::with_capacity(in_size * out_size);
        for _ in 0..out_size {
            let line = lines
                .next()
                .ok_or_else(|| Error::ModelFormat("truncated weight block".into()))?;
            layer_weights.extend(parse_row(line, in_size)?);
        }
        let expect_header = format!("layer {l} biases {out_size}");
        match lines.next() {
            Some(line) if line == expect_header => {}
            other => {
                return Err(Error::ModelFormat(format!(
                    "expected '{expect_header}', found {other:?}"
                )))
            }
        }
        let line = lines
            .next()
            .ok_or_else(|| Error::ModelFormat("truncated bias block".into()))?;
        biases.push(parse_row(line, out_size)?);
        weights.push(layer_weights);
    }

    Ok(MlpModel {
        topology,
        weights,
        biases,
        history: TrainingHistory::default(),
        stop_reason,
    })
}
