//! Multiple linear regression baseline with its ANOVA decomposition.
//!
//! The fit is ordinary least squares through Householder QR, which keeps the
//! normal-equation conditioning problems out and makes rank deficiency easy
//! to detect. Per-predictor sums of squares are adjusted (drop-one): the SS
//! increase when that predictor is removed and the model refitted.

use crate::error::{Error, Result};
use crate::stats::{f_tail_probability, AnovaRow, AnovaTable};
use crate::types::DataMatrix;

/// Fitted linear model: one coefficient per feature column plus an
/// intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct MlrModel {
    coefficients: Vec<f64>,
    intercept: f64,
    column_names: Vec<String>,
}

impl MlrModel {
    /// Assembles a model from explicit parameters (used for tests and for
    /// loading persisted fits).
    pub fn with_parameters(
        coefficients: Vec<f64>,
        intercept: f64,
        column_names: Vec<String>,
    ) -> Result<Self> {
        if coefficients.len() != column_names.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {} columns",
                coefficients.len(),
                column_names.len()
            )));
        }
        Ok(MlrModel {
            coefficients,
            intercept,
            column_names,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }
}

/// Ordinary least squares fit of `target ~ features + intercept`.
pub fn fit_mlr(train: &DataMatrix) -> Result<MlrModel> {
    let n = train.rows();
    let p = train.cols();
    if n <= p + 1 {
        return Err(Error::Underdetermined { rows: n, cols: p + 1 });
    }
    let beta = lstsq_with_intercept(train)?;
    Ok(MlrModel {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        column_names: train.column_names().to_vec(),
    })
}

/// Predictions for `data` through a fitted model.
pub fn predict_mlr(model: &MlrModel, data: &DataMatrix) -> Result<Vec<f64>> {
    if model.column_names != data.column_names() {
        return Err(Error::ShapeMismatch(format!(
            "model fitted on {:?}, data has {:?}",
            model.column_names,
            data.column_names()
        )));
    }
    Ok((0..data.rows())
        .map(|r| {
            model.intercept
                + data
                    .row(r)
                    .iter()
                    .zip(&model.coefficients)
                    .map(|(x, b)| x * b)
                    .sum::<f64>()
        })
        .collect())
}

/// Variance decomposition of the fit on its training data.
///
/// Rows: Regression (DF = number of predictors), one per predictor
/// (DF = 1, drop-one adjusted SS), Error (DF = n - p - 1), Total
/// (DF = n - 1). F ratios divide each adjusted MS by the error MS and
/// p-values come from the F upper tail.
pub fn anova(model: &MlrModel, train: &DataMatrix) -> Result<AnovaTable> {
    let n = train.rows();
    let p = train.cols();
    if n <= p + 1 {
        return Err(Error::Underdetermined { rows: n, cols: p + 1 });
    }
    let predictions = predict_mlr(model, train)?;
    let y = train.target();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sse: f64 = y
        .iter()
        .zip(&predictions)
        .map(|(yi, pi)| (yi - pi) * (yi - pi))
        .sum();
    let sst: f64 = y.iter().map(|yi| (yi - mean_y) * (yi - mean_y)).sum();
    let ss_reg: f64 = predictions
        .iter()
        .map(|pi| (pi - mean_y) * (pi - mean_y))
        .sum();

    let df_error = n - p - 1;
    let ms_error = sse / df_error as f64;

    let mut rows = Vec::with_capacity(p + 3);
    let ms_reg = ss_reg / p as f64;
    rows.push(AnovaRow {
        source: "Regression".into(),
        df: p,
        adj_ss: ss_reg,
        adj_ms: Some(ms_reg),
        f_value: Some(ms_reg / ms_error),
        p_value: Some(f_tail_probability(ms_reg / ms_error, p, df_error)?),
    });

    for (j, name) in train.column_names().iter().enumerate() {
        let sse_reduced = if p == 1 {
            // dropping the only predictor leaves the intercept-only model
            sst
        } else {
            let reduced = train.drop_column(j)?;
            let reduced_model = fit_mlr(&reduced)?;
            let reduced_predictions = predict_mlr(&reduced_model, &reduced)?;
            y.iter()
                .zip(&reduced_predictions)
                .map(|(yi, pi)| (yi - pi) * (yi - pi))
                .sum()
        };
        let adj_ss = (sse_reduced - sse).max(0.0);
        let f_value = adj_ss / ms_error;
        rows.push(AnovaRow {
            source: capitalize(name),
            df: 1,
            adj_ss,
            adj_ms: Some(adj_ss),
            f_value: Some(f_value),
            p_value: Some(f_tail_probability(f_value, 1, df_error)?),
        });
    }

    rows.push(AnovaRow {
        source: "Error".into(),
        df: df_error,
        adj_ss: sse,
        adj_ms: Some(ms_error),
        f_value: None,
        p_value: None,
    });
    rows.push(AnovaRow {
        source: "Total".into(),
        df: n - 1,
        adj_ss: sst,
        adj_ms: None,
        f_value: None,
        p_value: None,
    });

    Ok(AnovaTable {
        rows,
        r_squared: 1.0 - sse / sst,
    })
}

fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Least squares for [1 | features] via Householder QR. Returns the solution
/// with the intercept first.
fn lstsq_with_intercept(data: &DataMatrix) -> Result<Vec<f64>> {
    let n = data.rows();
    let m = data.cols() + 1;
    // column-major working copy of the augmented design matrix
    let mut a = vec![0.0; n * m];
    for i in 0..n {
        a[i] = 1.0;
        for (j, v) in data.row(i).iter().enumerate() {
            a[(j + 1) * n + i] = *v;
        }
    }
    let mut rhs = data.target().to_vec();

    let max_col_norm = (0..m)
        .map(|j| a[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let rank_tol = 1e-10 * max_col_norm.max(f64::MIN_POSITIVE);

    let mut diag = vec![0.0; m];
    for k in 0..m {
        let col = &a[k * n..(k + 1) * n];
        let mut sigma = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if sigma <= rank_tol {
            return Err(Error::RankDeficient(format!(
                "pivot {k} collapsed during factorization"
            )));
        }
        if a[k * n + k] > 0.0 {
            sigma = -sigma;
        }
        // Householder vector stored in the column itself: v = x - sigma * e_k
        a[k * n + k] -= sigma;
        diag[k] = sigma;
        let v_norm_sq: f64 = a[k * n + k..(k + 1) * n].iter().map(|v| v * v).sum();

        for j in (k + 1)..m {
            let dot: f64 = (k..n).map(|i| a[k * n + i] * a[j * n + i]).sum();
            let scale = 2.0 * dot / v_norm_sq;
            for i in k..n {
                a[j * n + i] -= scale * a[k * n + i];
            }
        }
        let dot: f64 = (k..n).map(|i| a[k * n + i] * rhs[i]).sum();
        let scale = 2.0 * dot / v_norm_sq;
        for i in k..n {
            rhs[i] -= scale * a[k * n + i];
        }
    }

    // back substitution against R (upper triangle lives above the stored
    // Householder vectors; diagonal is in `diag`)
    let mut beta = vec![0.0; m];
    for k in (0..m).rev() {
        let mut sum = rhs[k];
        for j in (k + 1)..m {
            sum -= a[j * n + k] * beta[j];
        }
        beta[k] = sum / diag[k];
    }
    Ok(beta)
}
