//! Algorithm selection by the strategic decision-maker: naive argmax of `F`
//! and robust max-min over each candidate's realizable override policies.

use thiserror::Error;

use crate::dataset::{Dataset, Matrix};
use crate::fairglm::ValueWeights;
use crate::pdm::{DecisionTarget, PdmError, PdmKind, PdmPolicy};
use crate::values::{value_report, ValuesError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectionError {
    #[error("candidate {0} has an empty policy set")]
    EmptyPolicySet(usize),
    #[error("no candidates")]
    NoCandidates,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Policy(#[from] PdmError),
    #[error(transparent)]
    Values(#[from] ValuesError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub label: String,
    /// Recommended decisions on the evaluation rows.
    pub decisions: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub labels: Vec<u8>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>, labels: Vec<u8>) -> Result<Self, SelectionError> {
        if candidates.is_empty() {
            return Err(SelectionError::NoCandidates);
        }
        if let Some(c) = candidates.iter().find(|c| c.decisions.len() != labels.len()) {
            return Err(SelectionError::Shape(format!(
                "candidate `{}` has {} decisions for {} labels",
                c.label,
                c.decisions.len(),
                labels.len()
            )));
        }
        Ok(Self { candidates, labels })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// `Π(A)` for every candidate, in candidate order.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet(pub Vec<Vec<PdmPolicy>>);

impl PolicySet {
    /// The same policy list for each of `n` candidates.
    pub fn uniform(policies: Vec<PdmPolicy>, n: usize) -> Self {
        Self(vec![policies; n])
    }
}

/// `F` for every (candidate, policy) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub candidate_labels: Vec<String>,
    /// Policy descriptions per candidate, aligned with `rows`.
    pub policy_labels: Vec<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn row_min(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Rows are candidates, columns are the union of policy descriptions in
    /// order of first appearance; absent cells are empty.
    pub fn to_csv(&self) -> String {
        let mut columns: Vec<&str> = Vec::new();
        for labels in &self.policy_labels {
            for l in labels {
                if !columns.contains(&l.as_str()) {
                    columns.push(l);
                }
            }
        }
        let mut out = String::from("candidate");
        for c in &columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for ((cand, labels), row) in self
            .candidate_labels
            .iter()
            .zip(&self.policy_labels)
            .zip(&self.rows)
        {
            out.push_str(cand);
            for c in &columns {
                out.push(',');
                if let Some(k) = labels.iter().position(|l| l == c) {
                    out.push_str(&format!("{:.17e}", row[k]));
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustSelection {
    pub winner: usize,
    pub worst_case: Vec<f64>,
    pub matrix: ScoreMatrix,
}

/// First index of the maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn check_shapes(cands: &CandidateSet, data: &Dataset) -> Result<(), SelectionError> {
    if cands.is_empty() {
        return Err(SelectionError::NoCandidates);
    }
    if cands.labels.len() != data.n() {
        return Err(SelectionError::Shape(format!(
            "{} labels for {} evaluation rows",
            cands.labels.len(),
            data.n()
        )));
    }
    Ok(())
}

/// `argmax_A min_{π ∈ Π(A)} F(π(A))`, ties to the lowest index.
pub fn robust_select(
    cands: &CandidateSet,
    policies: &PolicySet,
    weights: &ValueWeights,
    data: &Dataset,
) -> Result<RobustSelection, SelectionError> {
    check_shapes(cands, data)?;
    if policies.0.len() != cands.len() {
        return Err(SelectionError::Shape(format!(
            "{} policy sets for {} candidates",
            policies.0.len(),
            cands.len()
        )));
    }
    let mut rows = Vec::with_capacity(cands.len());
    let mut policy_labels = Vec::with_capacity(cands.len());
    for (i, (cand, pis)) in cands.candidates.iter().zip(&policies.0).enumerate() {
        if pis.is_empty() {
            return Err(SelectionError::EmptyPolicySet(i));
        }
        let row = pis
            .iter()
            .map(|pi| {
                let applied = pi.apply(&cand.decisions, &cands.labels)?;
                Ok(value_report(data, &applied.decisions, &cands.labels, weights)?.f)
            })
            .collect::<Result<Vec<f64>, SelectionError>>()?;
        rows.push(row);
        policy_labels.push(pis.iter().map(ToString::to_string).collect());
    }
    let matrix = ScoreMatrix {
        candidate_labels: cands.candidates.iter().map(|c| c.label.clone()).collect(),
        policy_labels,
        rows,
    };
    let worst_case = matrix.row_min();
    Ok(RobustSelection {
        winner: argmax(&worst_case),
        worst_case,
        matrix,
    })
}

/// Argmax of `F` on the recommendations themselves, ignoring the overseer.
pub fn naive_select(
    cands: &CandidateSet,
    weights: &ValueWeights,
    data: &Dataset,
) -> Result<usize, SelectionError> {
    check_shapes(cands, data)?;
    let f = cands
        .candidates
        .iter()
        .map(|c| Ok(value_report(data, &c.decisions, &cands.labels, weights)?.f))
        .collect::<Result<Vec<f64>, SelectionError>>()?;
    Ok(argmax(&f))
}

/// A constructed instance where ignoring an ε-budget overseer picks the
/// wrong algorithm.
#[derive(Debug, Clone)]
pub struct Observation2Instance {
    pub candidates: CandidateSet,
    pub policies: PolicySet,
    /// Evaluation rows without sensitive attributes, so `F` is accuracy.
    pub data: Dataset,
    pub epsilon: f64,
    pub delta: f64,
    /// Overseer budget `floor(ε·n)`.
    pub budget: usize,
    pub errors_a1: usize,
    pub errors_a2: usize,
}

impl Observation2Instance {
    pub fn n(&self) -> usize {
        self.candidates.labels.len()
    }

    pub fn weights(&self) -> ValueWeights {
        ValueWeights::zeros(0)
    }
}

/// Builds labels and two candidates with
/// `acc(A2) < acc(A1) < acc(A2) + δ` where the overseer can correct
/// `floor(ε·n)` of `A2`'s mistakes but none of `A1`'s.
///
/// The accuracy gap is `floor(δ·n/2)/n`, which keeps every inequality strict
/// with margin. `n` is raised to `ceil(2/δ)` when smaller so the gap is at
/// least one row; `A2` makes `max(floor(ε·n), floor(n/10))` errors.
pub fn build_observation2_instance(
    n: usize,
    epsilon: f64,
    delta: f64,
) -> Result<Observation2Instance, SelectionError> {
    if !(delta > 0.0 && delta < epsilon && epsilon <= 1.0) {
        return Err(SelectionError::InvalidParameters(format!(
            "need 0 < delta < epsilon <= 1, got epsilon = {epsilon}, delta = {delta}"
        )));
    }
    if n == 0 {
        return Err(SelectionError::InvalidParameters("n must be positive".into()));
    }
    let n = n.max((2.0 / delta).ceil() as usize);
    let budget = (epsilon * n as f64).floor() as usize;
    let gap = ((delta * n as f64) / 2.0).floor() as usize;
    let errors_a2 = budget.max(n / 10);
    let errors_a1 = errors_a2 - gap;
    debug_assert!(gap >= 1 && budget > gap);

    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    // A2 errs on the first rows, A1 on the last ones.
    let a2: Vec<u8> = (0..n)
        .map(|i| if i < errors_a2 { 1 - labels[i] } else { labels[i] })
        .collect();
    let a1: Vec<u8> = (0..n)
        .map(|i| if i >= n - errors_a1 { 1 - labels[i] } else { labels[i] })
        .collect();
    let candidates = CandidateSet::new(
        vec![
            Candidate {
                label: "A1".into(),
                decisions: a1,
            },
            Candidate {
                label: "A2".into(),
                decisions: a2,
            },
        ],
        labels.clone(),
    )?;
    let correct = PdmPolicy::new(PdmKind::EpsilonBudget {
        target: DecisionTarget::Labels,
        epsilon,
    })?;
    let policies = PolicySet(vec![vec![PdmPolicy::identity()], vec![correct]]);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let data = Dataset::from_raw(
        Matrix::from_rows(&rows).map_err(|e| SelectionError::Shape(e.to_string()))?,
        labels,
        Vec::new(),
        vec!["row".into()],
    )
    .map_err(|e| SelectionError::Shape(e.to_string()))?;
    Ok(Observation2Instance {
        candidates,
        policies,
        data,
        epsilon,
        delta,
        budget,
        errors_a1,
        errors_a2,
    })
}
