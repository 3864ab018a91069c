use std::fmt;

use rayon::prelude::*;

use super::{derive_seed, mean_std, substream, ExperimentError};
use crate::dataset::{partition_by_attribute, split_train_test, Dataset, Partition};
use crate::fairglm::{fit, FitOptions, ValueWeights};
use crate::pdm::{correct_random_gt, DecisionTarget, PdmKind, PdmPolicy};
use crate::values::value_report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Decisions of the `w*` model fit on all training rows.
    GlobalOpt,
    /// `GlobalOpt`, then each subpopulation's overseer corrects `p%` of its
    /// rows toward the ground truth.
    LocalCorrectGt,
    /// A separate `w*` model per subpopulation.
    LocalOptSociety,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Self::GlobalOpt, Self::LocalCorrectGt, Self::LocalOptSociety];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::GlobalOpt => "GlobalOpt",
            Self::LocalCorrectGt => "LocalCorrectGT",
            Self::LocalOptSociety => "LocalOptSociety",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalConfig {
    /// Feature index the population is partitioned on.
    pub attr_index: usize,
    /// Raw-scale threshold; rows `≥ threshold` form the first subpopulation.
    pub threshold: f64,
    pub p_percent: f64,
    pub replications: usize,
    pub test_fraction: f64,
    pub base_seed: u64,
}

impl LocalConfig {
    /// Partition on `attr_index` at 50, 20% corrections, 100 replications of
    /// an 80/20 split.
    pub fn new(attr_index: usize) -> Self {
        Self {
            attr_index,
            threshold: 50.0,
            p_percent: 20.0,
            replications: 100,
            test_fraction: 0.2,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub split_seed: u64,
    pub strategy: Strategy,
    pub rho: Vec<f64>,
    pub accuracy: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRow {
    pub strategy: Strategy,
    pub rho_mean: Vec<f64>,
    /// Standard error over replications.
    pub rho_se: Vec<f64>,
    pub accuracy_mean: f64,
    pub accuracy_se: f64,
    pub f_mean: f64,
    pub f_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTable {
    pub rows: Vec<StrategyRow>,
    pub replications: usize,
    pub attributes: Vec<String>,
    pub records: Vec<ReplicationRecord>,
}

impl StrategyTable {
    pub fn row(&self, s: Strategy) -> &StrategyRow {
        self.rows
            .iter()
            .find(|r| r.strategy == s)
            .expect("every strategy has a row")
    }
}

/// Decisions on `eval` from separate `weights`-fits on each side of the
/// threshold, trained on the matching side of `train`. A side whose training
/// rows share one label decides that label.
pub fn local_refit_decisions(
    train: &Dataset,
    eval: &Dataset,
    attr_index: usize,
    threshold: f64,
    weights: &ValueWeights,
    opts: &FitOptions,
) -> Result<Vec<u8>, ExperimentError> {
    let train_parts = partition_by_attribute(train, attr_index, threshold)?;
    let eval_parts = partition_by_attribute(eval, attr_index, threshold)?;
    refit_parts(train, eval, &train_parts, &eval_parts, weights, opts)
}

/// Replaces a `local-refit` policy by the fixed decisions it realizes on
/// `eval`; other policies are returned unchanged.
pub fn realize_local_refit(
    policy: &PdmPolicy,
    train: &Dataset,
    eval: &Dataset,
    opts: &FitOptions,
) -> Result<PdmPolicy, ExperimentError> {
    let PdmKind::LocalRefit { attr_index, threshold, weights } = &policy.kind else {
        return Ok(policy.clone());
    };
    let decisions = local_refit_decisions(train, eval, *attr_index, *threshold, weights, opts)?;
    let label = if policy.label.is_empty() { policy.to_string() } else { policy.label.clone() };
    Ok(PdmPolicy::new(PdmKind::Unconstrained(DecisionTarget::Fixed(decisions)))?.with_label(label))
}

fn refit_parts(
    train: &Dataset,
    eval: &Dataset,
    train_parts: &Partition,
    eval_parts: &Partition,
    weights: &ValueWeights,
    opts: &FitOptions,
) -> Result<Vec<u8>, ExperimentError> {
    debug_assert_eq!(train.d(), eval.d());
    let mut local = vec![0u8; eval.n()];
    let parts = [
        ("upper", &eval_parts.upper_idx, &train_parts.upper),
        ("lower", &eval_parts.lower_idx, &train_parts.lower),
    ];
    for (name, eval_idx, train_part) in parts {
        if eval_idx.is_empty() {
            continue;
        }
        if train_part.is_empty() {
            return Err(ExperimentError::EmptySubpopulation {
                part: name.to_string(),
                replication: 0,
            });
        }
        let positives = train_part.y.iter().filter(|&&v| v == 1).count();
        if positives == 0 || positives == train_part.n() {
            // Single-class subpopulation: the constant decision is the local
            // optimum and has zero covariance with any attribute there.
            let c = train_part.y[0];
            for &i in eval_idx.iter() {
                local[i] = c;
            }
        } else {
            let model = fit(train_part, weights, opts)?;
            for &i in eval_idx.iter() {
                local[i] = model.decide(eval.x.row(i))?;
            }
        }
    }
    Ok(local)
}

fn run_replication(
    data: &Dataset,
    w_star: &ValueWeights,
    cfg: &LocalConfig,
    opts: &FitOptions,
    r: usize,
) -> Result<Vec<ReplicationRecord>, ExperimentError> {
    let split_seed = derive_seed(cfg.base_seed, r as u64);
    let split = split_train_test(data, cfg.test_fraction, split_seed)?;
    let (train, test) = (&split.train, &split.test);

    let global = fit(train, w_star, opts)?.decisions(test)?;

    let test_parts = partition_by_attribute(test, cfg.attr_index, cfg.threshold)?;
    let train_parts = partition_by_attribute(train, cfg.attr_index, cfg.threshold)?;
    let mut corrected = global.clone();
    for (tag, test_idx) in [&test_parts.upper_idx, &test_parts.lower_idx].into_iter().enumerate() {
        if test_idx.is_empty() {
            continue;
        }
        let rec: Vec<u8> = test_idx.iter().map(|&i| global[i]).collect();
        let labels: Vec<u8> = test_idx.iter().map(|&i| test.y[i]).collect();
        let k = (cfg.p_percent / 100.0 * test_idx.len() as f64).round() as usize;
        let applied = correct_random_gt(&rec, &labels, k, substream(split_seed, tag as u64 + 1))?;
        for (&i, &d) in test_idx.iter().zip(&applied.decisions) {
            corrected[i] = d;
        }
    }
    let local = refit_parts(train, test, &train_parts, &test_parts, w_star, opts).map_err(|e| match e {
        ExperimentError::EmptySubpopulation { part, .. } => {
            ExperimentError::EmptySubpopulation { part, replication: r }
        }
        e => e,
    })?;

    [(Strategy::GlobalOpt, &global), (Strategy::LocalCorrectGt, &corrected), (Strategy::LocalOptSociety, &local)]
        .into_iter()
        .map(|(strategy, decisions)| {
            let rep = value_report(test, decisions, &test.y, w_star)?;
            Ok(ReplicationRecord {
                replication: r,
                split_seed,
                strategy,
                rho: rep.rho,
                accuracy: rep.accuracy,
                f: rep.f,
            })
        })
        .collect()
}

/// Compares the three strategies over seeded train/test replications. `ρ`
/// and accuracy are measured on the full test set of each replication.
pub fn local_strategies_table(
    data: &Dataset,
    w_star: &ValueWeights,
    cfg: &LocalConfig,
    opts: &FitOptions,
) -> Result<StrategyTable, ExperimentError> {
    if !(0.0..=100.0).contains(&cfg.p_percent) {
        return Err(ExperimentError::InvalidConfig(format!(
            "p must lie in [0, 100], got {}",
            cfg.p_percent
        )));
    }
    if cfg.replications == 0 {
        return Err(ExperimentError::InvalidConfig("replications must be at least 1".into()));
    }
    if cfg.attr_index >= data.d() {
        return Err(ExperimentError::InvalidConfig(format!(
            "attribute index {} out of range",
            cfg.attr_index
        )));
    }
    let per_rep = (0..cfg.replications)
        .into_par_iter()
        .map(|r| run_replication(data, w_star, cfg, opts, r))
        .collect::<Result<Vec<_>, _>>()?;
    let records: Vec<ReplicationRecord> = per_rep.into_iter().flatten().collect();
    let m = data.sensitive.len();
    let se = |v: &[f64]| {
        let (mu, sd) = mean_std(v);
        (mu, sd / (v.len() as f64).sqrt())
    };
    let rows = Strategy::ALL
        .iter()
        .map(|&s| {
            let recs: Vec<&ReplicationRecord> = records.iter().filter(|r| r.strategy == s).collect();
            let (rho_mean, rho_se) = (0..m)
                .map(|a| se(&recs.iter().map(|r| r.rho[a]).collect::<Vec<_>>()))
                .unzip();
            let (accuracy_mean, accuracy_se) = se(&recs.iter().map(|r| r.accuracy).collect::<Vec<_>>());
            let (f_mean, f_se) = se(&recs.iter().map(|r| r.f).collect::<Vec<_>>());
            StrategyRow {
                strategy: s,
                rho_mean,
                rho_se,
                accuracy_mean,
                accuracy_se,
                f_mean,
                f_se,
            }
        })
        .collect();
    Ok(StrategyTable {
        rows,
        replications: cfg.replications,
        attributes: data
            .sensitive
            .iter()
            .map(|&s| data.feature_names[s].clone())
            .collect(),
        records,
    })
}
