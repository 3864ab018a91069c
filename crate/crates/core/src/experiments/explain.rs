use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::ExperimentError;
use crate::dataset::Dataset;
use crate::fairglm::{FairGlmModel, ValueWeights};
use crate::pdm::PdmPolicy;
use crate::values::{value_report, ValueReport};

/// Nested explanation scopes; each adds fields to the previous one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Scope {
    /// Predictions.
    E1,
    /// + recommended decisions.
    E2,
    /// + applied decisions and overrides.
    E3,
    /// + value reports before and after the overseer.
    E4,
}

impl FromStr for Scope {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(Self::E1),
            "E2" => Ok(Self::E2),
            "E3" => Ok(Self::E3),
            "E4" => Ok(Self::E4),
            other => Err(ExperimentError::InvalidConfig(format!("unknown scope `{other}`"))),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub struct ExplanationContext<'a> {
    pub model: &'a FairGlmModel,
    pub data: &'a Dataset,
    /// Needed from E3 on.
    pub policy: Option<&'a PdmPolicy>,
    /// Needed for E4, which computes the value reports before and after the
    /// policy against `data.y`.
    pub weights: Option<&'a ValueWeights>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationRecord {
    pub row: usize,
    pub score: f64,
    pub probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recommended: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub applied: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overridden: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationReport {
    pub scope: Scope,
    pub records: Vec<ExplanationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overrides: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values_before: Option<ValueReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values_after: Option<ValueReport>,
}

impl ExplanationReport {
    /// Names of the populated fields, record fields prefixed `record.`.
    pub fn field_names(&self) -> Vec<String> {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut names: Vec<String> = value
            .as_object()
            .expect("object")
            .keys()
            .filter(|k| *k != "records")
            .cloned()
            .collect();
        if let Some(first) = value["records"].as_array().and_then(|r| r.first()) {
            names.extend(
                first
                    .as_object()
                    .expect("object")
                    .keys()
                    .map(|k| format!("record.{k}")),
            );
        }
        names.sort();
        names
    }

    /// Per-row CSV with the columns present at this scope.
    pub fn records_csv(&self) -> String {
        let mut header = vec!["row", "score", "probability"];
        if self.scope >= Scope::E2 {
            header.push("recommended");
        }
        if self.scope >= Scope::E3 {
            header.extend(["applied", "overridden"]);
        }
        let mut out = header.join(",") + "\n";
        for r in &self.records {
            let mut cells = vec![
                r.row.to_string(),
                format!("{:.17e}", r.score),
                format!("{:.17e}", r.probability),
            ];
            if let Some(d) = r.recommended {
                cells.push(d.to_string());
            }
            if let (Some(a), Some(o)) = (r.applied, r.overridden) {
                cells.push(a.to_string());
                cells.push(u8::from(o).to_string());
            }
            out += &(cells.join(",") + "\n");
        }
        out
    }
}

pub fn emit_explanation_report(
    scope: Scope,
    ctx: &ExplanationContext<'_>,
) -> Result<ExplanationReport, ExperimentError> {
    let missing = |what: &str| ExperimentError::MissingContext {
        scope: scope.to_string(),
        missing: what.to_string(),
    };
    let policy = if scope >= Scope::E3 {
        Some(ctx.policy.ok_or_else(|| missing("an override policy"))?)
    } else {
        None
    };
    let weights = if scope >= Scope::E4 {
        Some(ctx.weights.ok_or_else(|| missing("value weights"))?)
    } else {
        None
    };

    let data = ctx.data;
    let mut records = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let (score, probability) = ctx.model.predict_score(data.x.row(i))?;
        records.push(ExplanationRecord {
            row: data.row_ids[i],
            score,
            probability,
            recommended: None,
            applied: None,
            overridden: None,
        });
    }
    let mut report = ExplanationReport {
        scope,
        records,
        policy: None,
        overrides: None,
        values_before: None,
        values_after: None,
    };
    if scope < Scope::E2 {
        return Ok(report);
    }
    let recommended: Vec<u8> = report.records.iter().map(|r| u8::from(r.score >= 0.0)).collect();
    for (r, d) in report.records.iter_mut().zip(&recommended) {
        r.recommended = Some(*d);
    }
    let Some(policy) = policy else {
        return Ok(report);
    };
    let applied = policy.apply(&recommended, &data.y)?;
    for ((r, a), d) in report.records.iter_mut().zip(&applied.decisions).zip(&recommended) {
        r.applied = Some(*a);
        r.overridden = Some(a != d);
    }
    report.policy = Some(policy.to_string());
    report.overrides = Some(applied.overrides);
    if let Some(w) = weights {
        report.values_before = Some(value_report(data, &recommended, &data.y, w)?);
        report.values_after = Some(value_report(data, &applied.decisions, &data.y, w)?);
    }
    Ok(report)
}
