//! Numerical building blocks: min-max scaling, RMSE, Pearson correlation,
//! and the F-distribution tail probability behind the ANOVA table.
//!
//! The F tail is computed through a self-contained regularized incomplete
//! beta function (Lentz continued fraction with the usual symmetry switch),
//! good to better than 1e-8 absolute over the degrees of freedom that matter
//! here.

use std::fmt;

use crate::error::{Error, Result};
use crate::types::DataMatrix;

// ---------------------------------------------------------------------------
// Min-max scaling
// ---------------------------------------------------------------------------

/// Per-column (min, max) pairs over a feature matrix plus its target column.
/// Transforming a fitted column maps min to exactly 0 and max to exactly 1;
/// values outside the fitted range map outside [0, 1] without clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    column_names: Vec<String>,
    feature_ranges: Vec<(f64, f64)>,
    target_range: (f64, f64),
}

impl MinMaxScaler {
    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn feature_ranges(&self) -> &[(f64, f64)] {
        &self.feature_ranges
    }

    pub fn target_range(&self) -> (f64, f64) {
        self.target_range
    }

    pub fn normalize_target(&self, value: f64) -> f64 {
        let (lo, hi) = self.target_range;
        (value - lo) / (hi - lo)
    }

    pub fn denormalize_target(&self, value: f64) -> f64 {
        let (lo, hi) = self.target_range;
        lo + value * (hi - lo)
    }
}

/// Fits per-column extremes of `data` (every feature column and the target).
pub fn fit_scaler(data: &DataMatrix) -> Result<MinMaxScaler> {
    if data.rows() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: data.rows(),
        });
    }
    let mut feature_ranges = Vec::with_capacity(data.cols());
    for (c, name) in data.column_names().iter().enumerate() {
        let range = column_extremes((0..data.rows()).map(|r| data.row(r)[c]));
        if range.0 == range.1 {
            return Err(Error::ConstantColumn(name.clone()));
        }
        feature_ranges.push(range);
    }
    let target_range = column_extremes(data.target().iter().copied());
    if target_range.0 == target_range.1 {
        return Err(Error::ConstantColumn("target".into()));
    }
    Ok(MinMaxScaler {
        column_names: data.column_names().to_vec(),
        feature_ranges,
        target_range,
    })
}

fn column_extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

fn check_shape(scaler: &MinMaxScaler, data: &DataMatrix) -> Result<()> {
    if scaler.column_names != data.column_names() {
        return Err(Error::ShapeMismatch(format!(
            "scaler fitted on {:?}, data has {:?}",
            scaler.column_names,
            data.column_names()
        )));
    }
    Ok(())
}

/// Maps every value x to (x - min) / (max - min) using the fitted extremes,
/// target column included.
pub fn transform(scaler: &MinMaxScaler, data: &DataMatrix) -> Result<DataMatrix> {
    check_shape(scaler, data)?;
    let cols = data.cols();
    let mut features = Vec::with_capacity(data.rows() * cols);
    for r in 0..data.rows() {
        for (c, v) in data.row(r).iter().enumerate() {
            let (lo, hi) = scaler.feature_ranges[c];
            features.push((v - lo) / (hi - lo));
        }
    }
    let target = data
        .target()
        .iter()
        .map(|v| scaler.normalize_target(*v))
        .collect();
    DataMatrix::new(features, target, data.column_names().to_vec())
}

/// Exact algebraic inverse of [`transform`].
pub fn inverse_transform(scaler: &MinMaxScaler, data: &DataMatrix) -> Result<DataMatrix> {
    check_shape(scaler, data)?;
    let cols = data.cols();
    let mut features = Vec::with_capacity(data.rows() * cols);
    for r in 0..data.rows() {
        for (c, v) in data.row(r).iter().enumerate() {
            let (lo, hi) = scaler.feature_ranges[c];
            features.push(lo + v * (hi - lo));
        }
    }
    let target = data
        .target()
        .iter()
        .map(|v| scaler.denormalize_target(*v))
        .collect();
    DataMatrix::new(features, target, data.column_names().to_vec())
}

/// Min-max normalization of a standalone series over its own extremes.
pub fn normalize_series(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyVector);
    }
    let (min, max) = column_extremes(values.iter().copied());
    if min == max {
        return Err(Error::ConstantSeries("series".into()));
    }
    Ok(values.iter().map(|v| (v - min) / (max - min)).collect())
}

// ---------------------------------------------------------------------------
// Error and correlation measures
// ---------------------------------------------------------------------------

/// Root-mean-square error between two equal-length vectors:
/// sqrt(sum((e_i - a_i)^2) / n).
pub fn rmse(estimated: &[f64], actual: &[f64]) -> Result<f64> {
    if estimated.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: estimated.len(),
            right: actual.len(),
        });
    }
    if estimated.is_empty() {
        return Err(Error::EmptyVector);
    }
    let sum_sq: f64 = estimated
        .iter()
        .zip(actual)
        .map(|(e, a)| (e - a) * (e - a))
        .sum();
    Ok((sum_sq / estimated.len() as f64).sqrt())
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: x.len(),
        });
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(Error::ConstantSeries("x".into()));
    }
    if var_y == 0.0 {
        return Err(Error::ConstantSeries("y".into()));
    }
    Ok((cov / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0))
}

/// Symmetric matrix of pairwise Pearson coefficients with its column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    labels: Vec<String>,
    values: Vec<f64>, // row-major, labels.len() square
}

impl CorrelationMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    pub fn get_by_name(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.get(i, j))
    }
}

/// Pairwise Pearson correlation over a set of named series. Every series
/// must be non-constant. The diagonal is exactly 1.
pub fn correlation_matrix(series: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    let k = series.len();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        values[i * k + i] = 1.0;
        for j in (i + 1)..k {
            let r = pearson(&series[i].1, &series[j].1).map_err(|e| match e {
                Error::ConstantSeries(which) => {
                    let name = if which == "x" { &series[i].0 } else { &series[j].0 };
                    Error::ConstantSeries(name.clone())
                }
                other => other,
            })?;
            values[i * k + j] = r;
            values[j * k + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        labels: series.iter().map(|(name, _)| name.clone()).collect(),
        values,
    })
}

/// Correlation matrix over selected feature columns of a data matrix, with
/// the target appended as a final "power" column.
pub fn correlation_matrix_with_target(data: &DataMatrix) -> Result<CorrelationMatrix> {
    let mut series: Vec<(String, Vec<f64>)> = data
        .column_names()
        .iter()
        .enumerate()
        .map(|(c, name)| (name.clone(), data.column(c)))
        .collect();
    series.push(("power".into(), data.target().to_vec()));
    correlation_matrix(&series)
}

// ---------------------------------------------------------------------------
// F-distribution tail via the regularized incomplete beta function
// ---------------------------------------------------------------------------

/// ln of the gamma function, Lanczos approximation (valid for z > 0).
fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_9e-2,
        -0.539_523_938_495_3e-5,
    ];
    let mut series = 1.000_000_000_190_015;
    for (i, c) in COEFFS.iter().enumerate() {
        series += c / (z + i as f64 + 1.0);
    }
    let tmp = z + 5.5;
    (z + 0.5) * tmp.ln() - tmp + (2.506_628_274_631_000_5 * series / z).ln()
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in
/// [0, 1]. Continued fraction (modified Lentz), switching to the symmetric
/// complement when x is past the convergence pivot.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - regularized_incomplete_beta(1.0 - x, b, a);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let front = ln_front.exp();
    front * beta_continued_fraction(x, a, b) / a
}

/// Value of the continued fraction in the standard expansion
/// I_x(a, b) = front / a * [1 / (1 + d1/(1 + d2/(1 + ...)))].
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-30;

    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        // even-numbered coefficient
        let numerator = m_f * (b - m_f) * x / ((a + 2.0 * m_f - 1.0) * (a + 2.0 * m_f));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        // odd-numbered coefficient
        let numerator =
            -(a + m_f) * (a + b + m_f) * x / ((a + 2.0 * m_f) * (a + 2.0 * m_f + 1.0));
        d = 1.0 + numerator * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + numerator / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Upper-tail probability P(F > f) of the F(df1, df2) distribution.
///
/// Evaluated directly in complement form, I_{df2/(df2 + df1 f)}(df2/2, df1/2),
/// so small tails are not lost to cancellation.
pub fn f_tail_probability(f: f64, df1: usize, df2: usize) -> Result<f64> {
    if df1 == 0 || df2 == 0 {
        return Err(Error::InvalidDf(format!("df1={df1}, df2={df2}")));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    let d1 = df1 as f64;
    let d2 = df2 as f64;
    let x = d2 / (d2 + d1 * f);
    Ok(regularized_incomplete_beta(x, d2 / 2.0, d1 / 2.0))
}

// ---------------------------------------------------------------------------
// ANOVA table
// ---------------------------------------------------------------------------

/// One row of the variance decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaRow {
    pub source: String,
    pub df: usize,
    pub adj_ss: f64,
    pub adj_ms: Option<f64>,
    pub f_value: Option<f64>,
    pub p_value: Option<f64>,
}

/// Variance decomposition of a fitted regression: Regression, one row per
/// predictor (drop-one adjusted SS), Error, Total, plus the model R².
#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    pub rows: Vec<AnovaRow>,
    pub r_squared: f64,
}

impl AnovaTable {
    pub fn row(&self, source: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.source == source)
    }

    /// Checks the DF/SS additivity and MS identities the table must satisfy.
    pub fn check_identities(&self, rel_tol: f64) -> Result<()> {
        let regression = self.row("Regression").ok_or(Error::NotFitted)?;
        let error = self.row("Error").ok_or(Error::NotFitted)?;
        let total = self.row("Total").ok_or(Error::NotFitted)?;
        if regression.df + error.df != total.df {
            return Err(Error::InvalidDf(format!(
                "{} + {} != {}",
                regression.df, error.df, total.df
            )));
        }
        let ss_sum = regression.adj_ss + error.adj_ss;
        if (ss_sum - total.adj_ss).abs() > rel_tol * total.adj_ss.abs().max(1.0) {
            return Err(Error::ShapeMismatch(format!(
                "SS additivity violated: {} + {} vs {}",
                regression.adj_ss, error.adj_ss, total.adj_ss
            )));
        }
        for row in &self.rows {
            if let Some(ms) = row.adj_ms {
                let expected = row.adj_ss / row.df as f64;
                if (ms - expected).abs() > rel_tol * expected.abs().max(1.0) {
                    return Err(Error::ShapeMismatch(format!(
                        "MS identity violated for {}",
                        row.source
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV form: one header plus one line per row, full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,df,adj_ss,adj_ms,f_value,p_value\n");
        for row in &self.rows {
            let fmt_opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.source,
                row.df,
                row.adj_ss,
                fmt_opt(row.adj_ms),
                fmt_opt(row.f_value),
                fmt_opt(row.p_value),
            ));
        }
        out.push_str(&format!("r_squared,,,,,{}\n", self.r_squared));
        out
    }
}

impl fmt::Display for AnovaTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:>6} {:>12} {:>12} {:>10} {:>9}",
            "Source", "DF", "Adj SS", "Adj MS", "F-Value", "P-Value"
        )?;
        for row in &self.rows {
            let ms = row
                .adj_ms
                .map(|v| format!("{v:.2}"))
                .unwrap_or_default();
            let fv = row
                .f_value
                .map(|v| format!("{v:.2}"))
                .unwrap_or_default();
            let pv = row
                .p_value
                .map(|v| format!("{v:.3}"))
                .unwrap_or_default();
            writeln!(
                f,
                "{:<14} {:>6} {:>12.2} {:>12} {:>10} {:>9}",
                row.source, row.df, row.adj_ss, ms, fv, pv
            )?;
        }
        write!(f, "R-sq = {:.2}%", self.r_squared * 100.0)
    }
}
