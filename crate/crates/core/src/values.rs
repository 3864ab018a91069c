//! Societal value statistics and the strategic objective `F`.
//!
//! `ρ_l` is the absolute mean-centered covariance between the raw-scale
//! sensitive attribute `l` and a vector of decisions (or scores), with the
//! mean taken over the evaluated rows. `F = accuracy − Σ_l w_l ρ_l`.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::Dataset;
use crate::fairglm::ValueWeights;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuesError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

fn mismatch(what: &str, got: usize, want: usize) -> ValuesError {
    ValuesError::DimensionMismatch(format!("{what} has length {got}, expected {want}"))
}

/// Measured values of one decision vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueReport {
    pub rho: Vec<f64>,
    pub accuracy: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub n_evaluated: usize,
}

impl ValueReport {
    pub fn csv_header(m: usize) -> String {
        let mut cols = vec!["accuracy".to_string()];
        cols.extend((1..=m).map(|l| format!("rho_{l}")));
        cols.push("F".into());
        cols.push("n".into());
        cols.join(",")
    }

    /// One CSV row: `accuracy, rho_1..rho_m, F, n`.
    pub fn csv_row(&self) -> String {
        let mut cells = vec![format!("{:.17e}", self.accuracy)];
        cells.extend(self.rho.iter().map(|r| format!("{r:.17e}")));
        cells.push(format!("{:.17e}", self.f));
        cells.push(self.n_evaluated.to_string());
        cells.join(",")
    }
}

fn centered_covariance(data: &Dataset, attr_index: usize, v: &[f64]) -> f64 {
    let raw = data.raw_column(attr_index);
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    (raw.iter().zip(v).map(|(r, d)| (r - mean) * d).sum::<f64>() / n).abs()
}

fn check_attr(data: &Dataset, attr_index: usize) -> Result<(), ValuesError> {
    if attr_index >= data.d() {
        return Err(ValuesError::DimensionMismatch(format!(
            "attribute {attr_index} out of range for {} features",
            data.d()
        )));
    }
    if data.is_empty() {
        return Err(ValuesError::DimensionMismatch("no rows to evaluate".into()));
    }
    Ok(())
}

/// `ρ` of hard decisions for feature `attr_index`.
pub fn rho_decision(data: &Dataset, decisions: &[u8], attr_index: usize) -> Result<f64, ValuesError> {
    check_attr(data, attr_index)?;
    if decisions.len() != data.n() {
        return Err(mismatch("decisions", decisions.len(), data.n()));
    }
    let v: Vec<f64> = decisions.iter().map(|&d| f64::from(d)).collect();
    Ok(centered_covariance(data, attr_index, &v))
}

/// `ρ` of real-valued scores for feature `attr_index`.
pub fn rho_score(data: &Dataset, scores: &[f64], attr_index: usize) -> Result<f64, ValuesError> {
    check_attr(data, attr_index)?;
    if scores.len() != data.n() {
        return Err(mismatch("scores", scores.len(), data.n()));
    }
    Ok(centered_covariance(data, attr_index, scores))
}

pub fn evaluate_f(accuracy: f64, rho: &[f64], weights: &ValueWeights) -> Result<f64, ValuesError> {
    if rho.len() != weights.len() {
        return Err(mismatch("rho", rho.len(), weights.len()));
    }
    Ok(accuracy
        - rho
            .iter()
            .zip(weights.as_slice())
            .map(|(r, w)| r * w)
            .sum::<f64>())
}

pub fn accuracy(decisions: &[u8], labels: &[u8]) -> Result<f64, ValuesError> {
    if decisions.len() != labels.len() {
        return Err(mismatch("decisions", decisions.len(), labels.len()));
    }
    if decisions.is_empty() {
        return Err(ValuesError::DimensionMismatch("no rows to evaluate".into()));
    }
    let hits = decisions.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / decisions.len() as f64)
}

/// Accuracy, `ρ` per sensitive attribute of `data`, and `F`.
pub fn value_report(
    data: &Dataset,
    decisions: &[u8],
    labels: &[u8],
    weights: &ValueWeights,
) -> Result<ValueReport, ValuesError> {
    if labels.len() != data.n() {
        return Err(mismatch("labels", labels.len(), data.n()));
    }
    if weights.len() != data.sensitive.len() {
        return Err(mismatch("weights", weights.len(), data.sensitive.len()));
    }
    let acc = accuracy(decisions, labels)?;
    let rho = data
        .sensitive
        .iter()
        .map(|&s| rho_decision(data, decisions, s))
        .collect::<Result<Vec<_>, _>>()?;
    let f = evaluate_f(acc, &rho, weights)?;
    Ok(ValueReport {
        rho,
        accuracy: acc,
        f,
        n_evaluated: decisions.len(),
    })
}
