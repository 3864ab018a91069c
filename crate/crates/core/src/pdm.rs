//! Practical decision-maker override policies.
//!
//! A policy turns the algorithm's recommended decisions into the decisions
//! actually applied. Every policy here is a pure function of its inputs and
//! seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fairglm::ValueWeights;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdmError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid policy parameter: {0}")]
    InvalidParameter(String),
    #[error("policy `{0}` needs model refitting and cannot be applied to a fixed decision vector")]
    RequiresRefit(String),
    #[error("cannot parse policy `{0}`")]
    Parse(String),
}

/// Decisions after the overseer acted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedDecisions {
    pub decisions: Vec<u8>,
    /// Hamming distance to the recommendation.
    pub overrides: usize,
    pub seed_used: Option<u64>,
}

/// The decision vector a policy pushes toward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecisionTarget {
    /// Ground-truth labels.
    Labels,
    /// Complement of the labels: an adversarial overseer.
    InvertedLabels,
    Fixed(Vec<u8>),
}

impl DecisionTarget {
    pub fn resolve(&self, labels: &[u8]) -> Vec<u8> {
        match self {
            Self::Labels => labels.to_vec(),
            Self::InvertedLabels => labels.iter().map(|&v| 1 - v).collect(),
            Self::Fixed(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PdmKind {
    /// Applies the recommendation unchanged.
    Identity,
    Unconstrained(DecisionTarget),
    EpsilonBudget { target: DecisionTarget, epsilon: f64 },
    RandomCorrectGt { k: usize, seed: u64 },
    /// Subpopulation-local refit of the candidate; realized by the
    /// local-strategies experiment.
    LocalRefit {
        attr_index: usize,
        threshold: f64,
        weights: ValueWeights,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdmPolicy {
    pub kind: PdmKind,
    pub label: String,
}

impl PdmPolicy {
    pub fn new(kind: PdmKind) -> Result<Self, PdmError> {
        if let PdmKind::EpsilonBudget { epsilon, .. } = &kind {
            if !(0.0..=1.0).contains(epsilon) {
                return Err(PdmError::InvalidParameter(format!(
                    "epsilon must lie in [0, 1], got {epsilon}"
                )));
            }
        }
        if let PdmKind::Unconstrained(DecisionTarget::Fixed(t))
        | PdmKind::EpsilonBudget {
            target: DecisionTarget::Fixed(t),
            ..
        } = &kind
        {
            check_binary("target", t)?;
        }
        Ok(Self {
            kind,
            label: String::new(),
        })
    }

    pub fn identity() -> Self {
        Self {
            kind: PdmKind::Identity,
            label: String::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Applies the policy to `recommended` given ground-truth `labels`.
    pub fn apply(&self, recommended: &[u8], labels: &[u8]) -> Result<AppliedDecisions, PdmError> {
        same_len(recommended, labels)?;
        match &self.kind {
            PdmKind::Identity => Ok(AppliedDecisions {
                decisions: recommended.to_vec(),
                overrides: 0,
                seed_used: None,
            }),
            PdmKind::Unconstrained(t) => apply_unconstrained(recommended, &t.resolve(labels)),
            PdmKind::EpsilonBudget { target, epsilon } => {
                apply_epsilon_budget(recommended, &target.resolve(labels), *epsilon)
            }
            PdmKind::RandomCorrectGt { k, seed } => {
                correct_random_gt(recommended, labels, *k, *seed)
            }
            PdmKind::LocalRefit { .. } => Err(PdmError::RequiresRefit(self.to_string())),
        }
    }
}

fn fmt_target(t: &DecisionTarget) -> String {
    match t {
        DecisionTarget::Labels => "labels".into(),
        DecisionTarget::InvertedLabels => "inverted".into(),
        DecisionTarget::Fixed(v) => v.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect(),
    }
}

fn parse_target(s: &str) -> Result<DecisionTarget, PdmError> {
    match s {
        "labels" => Ok(DecisionTarget::Labels),
        "inverted" => Ok(DecisionTarget::InvertedLabels),
        bits if !bits.is_empty() && bits.chars().all(|c| c == '0' || c == '1') => Ok(
            DecisionTarget::Fixed(bits.bytes().map(|b| b - b'0').collect()),
        ),
        other => Err(PdmError::Parse(other.into())),
    }
}

/// One-line form used in logs and on the command line:
/// `identity`, `unconstrained:labels`, `eps:labels:0.05`,
/// `random-gt:10:7`, `local-refit:11:50:0.5;0.25`, optionally followed by
/// `@label`.
impl fmt::Display for PdmPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PdmKind::Identity => write!(f, "identity")?,
            PdmKind::Unconstrained(t) => write!(f, "unconstrained:{}", fmt_target(t))?,
            PdmKind::EpsilonBudget { target, epsilon } => {
                write!(f, "eps:{}:{}", fmt_target(target), epsilon)?
            }
            PdmKind::RandomCorrectGt { k, seed } => write!(f, "random-gt:{k}:{seed}")?,
            PdmKind::LocalRefit {
                attr_index,
                threshold,
                weights,
            } => write!(
                f,
                "local-refit:{attr_index}:{threshold}:{}",
                weights.to_string().replace(',', ";")
            )?,
        }
        if !self.label.is_empty() {
            write!(f, "@{}", self.label)?;
        }
        Ok(())
    }
}

impl FromStr for PdmPolicy {
    type Err = PdmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (body, label) = match s.split_once('@') {
            Some((b, l)) => (b, l.to_string()),
            None => (s, String::new()),
        };
        let parts: Vec<&str> = body.trim().split(':').collect();
        let bad = || PdmError::Parse(s.to_string());
        let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
        let kind = match parts.as_slice() {
            ["identity"] => PdmKind::Identity,
            ["unconstrained", t] => PdmKind::Unconstrained(parse_target(t)?),
            ["eps", t, e] => PdmKind::EpsilonBudget {
                target: parse_target(t)?,
                epsilon: num(e)?,
            },
            ["random-gt", k, seed] => PdmKind::RandomCorrectGt {
                k: k.parse().map_err(|_| bad())?,
                seed: seed.parse().map_err(|_| bad())?,
            },
            ["local-refit", a, t, w] => PdmKind::LocalRefit {
                attr_index: a.parse().map_err(|_| bad())?,
                threshold: num(t)?,
                weights: w.replace(';', ",").parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        Ok(Self::new(kind)?.with_label(label))
    }
}

fn check_binary(what: &str, v: &[u8]) -> Result<(), PdmError> {
    if v.iter().any(|&b| b > 1) {
        return Err(PdmError::InvalidParameter(format!("{what} must be binary")));
    }
    Ok(())
}

fn same_len(a: &[u8], b: &[u8]) -> Result<(), PdmError> {
    if a.len() != b.len() {
        return Err(PdmError::DimensionMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// The overseer applies `target` regardless of the recommendation.
pub fn apply_unconstrained(recommended: &[u8], target: &[u8]) -> Result<AppliedDecisions, PdmError> {
    same_len(recommended, target)?;
    Ok(AppliedDecisions {
        decisions: target.to_vec(),
        overrides: hamming(recommended, target),
        seed_used: None,
    })
}

/// Moves toward `target` on the first `floor(ε·n)` disagreeing indices in
/// ascending order.
pub fn apply_epsilon_budget(
    recommended: &[u8],
    target: &[u8],
    epsilon: f64,
) -> Result<AppliedDecisions, PdmError> {
    same_len(recommended, target)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(PdmError::InvalidParameter(format!(
            "epsilon must lie in [0, 1], got {epsilon}"
        )));
    }
    let budget = (epsilon * recommended.len() as f64).floor() as usize;
    let mut decisions = recommended.to_vec();
    let mut overrides = 0;
    for (d, t) in decisions.iter_mut().zip(target) {
        if overrides == budget {
            break;
        }
        if d != t {
            *d = *t;
            overrides += 1;
        }
    }
    Ok(AppliedDecisions {
        decisions,
        overrides,
        seed_used: None,
    })
}

/// Corrects `min(k, |E|)` misclassified decisions chosen uniformly without
/// replacement, where `E` is the set of indices disagreeing with `labels`.
pub fn correct_random_gt(
    recommended: &[u8],
    labels: &[u8],
    k: usize,
    seed: u64,
) -> Result<AppliedDecisions, PdmError> {
    same_len(recommended, labels)?;
    let errors: Vec<usize> = (0..recommended.len())
        .filter(|&i| recommended[i] != labels[i])
        .collect();
    let take = k.min(errors.len());
    let mut decisions = recommended.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pick in index::sample(&mut rng, errors.len(), take) {
        let i = errors[pick];
        decisions[i] = labels[i];
    }
    Ok(AppliedDecisions {
        decisions,
        overrides: take,
        seed_used: Some(seed),
    })
}

/// Normalized Hamming distance.
pub fn deviation_fraction(a: &[u8], b: &[u8]) -> Result<f64, PdmError> {
    same_len(a, b)?;
    if a.is_empty() {
        return Err(PdmError::DimensionMismatch("empty decision vectors".into()));
    }
    Ok(hamming(a, b) as f64 / a.len() as f64)
}
