use rayon::prelude::*;

use super::{derive_seed, mean_std, ExperimentError};
use crate::dataset::Dataset;
use crate::fairglm::{fit, FitOptions, ValueWeights};
use crate::pdm::correct_random_gt;
use crate::values::rho_decision;

/// Change of `ρ` per sensitive attribute as an overseer corrects `k` random
/// mistakes toward the ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationCurve {
    pub ks: Vec<usize>,
    pub attributes: Vec<String>,
    /// `mean[a][j]`: mean change of `ρ_a` at `ks[j]` relative to no
    /// corrections.
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
    /// `mean` min-max scaled to `[0, 1]` per attribute.
    pub normalized_mean: Vec<Vec<f64>>,
    /// `std` divided by the same range.
    pub normalized_std: Vec<Vec<f64>>,
    pub runs: usize,
    /// Mistakes of the fitted model, the largest meaningful `k`.
    pub error_count: usize,
    pub base_seed: u64,
}

/// Fits once with `w_star` on `data`, then for every `k` and run `r` corrects
/// `k` mistakes with seed `base_seed + r`.
pub fn degradation_curve(
    data: &Dataset,
    w_star: &ValueWeights,
    ks: &[usize],
    runs: usize,
    base_seed: u64,
    opts: &FitOptions,
) -> Result<DegradationCurve, ExperimentError> {
    if runs == 0 {
        return Err(ExperimentError::InvalidConfig("runs must be at least 1".into()));
    }
    if ks.first() != Some(&0) || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::InvalidConfig(
            "ks must start at 0 and be strictly increasing".into(),
        ));
    }
    let model = fit(data, w_star, opts)?;
    let recommended = model.decisions(data)?;
    let error_count = recommended.iter().zip(&data.y).filter(|(a, b)| a != b).count();
    let base_rho = data
        .sensitive
        .iter()
        .map(|&s| rho_decision(data, &recommended, s))
        .collect::<Result<Vec<_>, _>>()?;
    let m = data.sensitive.len();

    // changes[r][j][a]
    let changes: Vec<Vec<Vec<f64>>> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let seed = derive_seed(base_seed, r as u64);
            ks.iter()
                .map(|&k| {
                    let applied = correct_random_gt(&recommended, &data.y, k, seed)?;
                    data.sensitive
                        .iter()
                        .zip(&base_rho)
                        .map(|(&s, base)| Ok(rho_decision(data, &applied.decisions, s)? - base))
                        .collect::<Result<Vec<f64>, ExperimentError>>()
                })
                .collect::<Result<Vec<_>, ExperimentError>>()
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let mut mean = vec![vec![0.0; ks.len()]; m];
    let mut std = vec![vec![0.0; ks.len()]; m];
    for a in 0..m {
        for j in 0..ks.len() {
            let column: Vec<f64> = changes.iter().map(|run| run[j][a]).collect();
            let (mu, sd) = mean_std(&column);
            mean[a][j] = mu;
            std[a][j] = sd;
        }
    }
    let mut normalized_mean = mean.clone();
    let mut normalized_std = std.clone();
    for a in 0..m {
        let lo = mean[a].iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mean[a].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        for j in 0..ks.len() {
            if range > 0.0 {
                normalized_mean[a][j] = (mean[a][j] - lo) / range;
                normalized_std[a][j] = std[a][j] / range;
            } else {
                normalized_mean[a][j] = 0.0;
                normalized_std[a][j] = 0.0;
            }
        }
    }
    Ok(DegradationCurve {
        ks: ks.to_vec(),
        attributes: data
            .sensitive
            .iter()
            .map(|&s| data.feature_names[s].clone())
            .collect(),
        mean,
        std,
        normalized_mean,
        normalized_std,
        runs,
        error_count,
        base_seed,
    })
}

/// `points` values of `k` evenly spread over `0..=max_k` (deduplicated).
pub fn spread_ks(max_k: usize, points: usize) -> Vec<usize> {
    if points <= 1 || max_k == 0 {
        return vec![0];
    }
    let mut ks: Vec<usize> = (0..points)
        .map(|i| ((i as f64) * max_k as f64 / (points - 1) as f64).round() as usize)
        .collect();
    ks.dedup();
    ks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread() {
        assert_eq!(spread_ks(10, 3), vec![0, 5, 10]);
        assert_eq!(spread_ks(2, 5), vec![0, 1, 2]);
        assert_eq!(spread_ks(0, 5), vec![0]);
    }
}
