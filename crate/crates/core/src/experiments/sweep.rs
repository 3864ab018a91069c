use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::ExperimentError;
use crate::dataset::Dataset;
use crate::fairglm::{fit, FitOptions, ValueWeights};
use crate::pdm::deviation_fraction;

/// `steps` evenly spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + h * i as f64 })
            .collect()
    }

    fn nearest(&self, v: f64) -> usize {
        if self.steps == 1 || self.max == self.min {
            return 0;
        }
        let t = (v - self.min) / (self.max - self.min) * (self.steps - 1) as f64;
        // Halfway points round down so the choice is deterministic.
        let i = (t - 0.5).ceil().max(0.0) as usize;
        i.min(self.steps - 1)
    }
}

/// Cartesian weight grid, one axis per sensitive attribute. Text form:
/// `min:max:steps` per axis joined by `x`, e.g. `0:1:30x0:1:30`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec(pub Vec<GridAxis>);

impl GridSpec {
    pub fn shape(&self) -> Vec<usize> {
        self.0.iter().map(|a| a.steps).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of flat index `k` (first axis slowest).
    pub fn unravel(&self, mut k: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            idx[a] = k % shape[a];
            k /= shape[a];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(self.shape())
            .fold(0, |acc, (i, s)| acc * s + i)
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.0.iter().map(GridAxis::values).collect();
        (0..self.len())
            .map(|k| {
                self.unravel(k)
                    .iter()
                    .zip(&values)
                    .map(|(&i, v)| v[i])
                    .collect()
            })
            .collect()
    }

    /// Flat index of the grid point nearest to `w`, axis by axis.
    pub fn nearest_index(&self, w: &[f64]) -> usize {
        let idx: Vec<usize> = self.0.iter().zip(w).map(|(a, &v)| a.nearest(v)).collect();
        self.ravel(&idx)
    }

    /// Whether `set` is connected under axis-neighbour adjacency (4-connected
    /// in two dimensions). The empty set counts as connected.
    pub fn is_connected(&self, set: &[usize]) -> bool {
        let Some(&start) = set.first() else {
            return true;
        };
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some(k) = stack.pop() {
            let idx = self.unravel(k);
            for other in set {
                if seen.contains(other) {
                    continue;
                }
                let oi = self.unravel(*other);
                let dist: usize = idx.iter().zip(&oi).map(|(a, b)| a.abs_diff(*b)).sum();
                if dist == 1 {
                    seen.push(*other);
                    stack.push(*other);
                }
            }
        }
        seen.len() == set.len()
    }
}

impl FromStr for GridSpec {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExperimentError::InvalidConfig(format!("bad grid `{s}`, expected min:max:steps[x...]"));
        let axes = s
            .split('x')
            .map(|axis| {
                let parts: Vec<&str> = axis.trim().split(':').collect();
                let [min, max, steps] = parts.as_slice() else {
                    return Err(bad());
                };
                let axis = GridAxis {
                    min: min.parse().map_err(|_| bad())?,
                    max: max.parse().map_err(|_| bad())?,
                    steps: steps.parse().map_err(|_| bad())?,
                };
                if axis.steps == 0 || !(axis.min <= axis.max) || axis.min < 0.0 {
                    return Err(bad());
                }
                Ok(axis)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self(axes))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|a| format!("{}:{}:{}", a.min, a.max, a.steps))
            .collect();
        f.write_str(&parts.join("x"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid_spec: GridSpec,
    pub grid: Vec<Vec<f64>>,
    /// Fraction of rows whose decision differs from the `w*` model; `None`
    /// where the fit failed.
    pub deviation: Vec<Option<f64>>,
    pub failures: Vec<(usize, String)>,
    pub equivalent_set: Vec<usize>,
    pub w_star: ValueWeights,
    pub tau: f64,
}

impl SweepResult {
    /// The point nearest to `w*`.
    pub fn w_star_index(&self) -> usize {
        self.grid_spec.nearest_index(self.w_star.as_slice())
    }
}

/// Deviation of the model fitted at each point from `reference` decisions.
pub fn deviation_at_points(
    data: &Dataset,
    reference: &[u8],
    points: &[Vec<f64>],
    opts: &FitOptions,
) -> Vec<Result<f64, ExperimentError>> {
    points
        .par_iter()
        .map(|w| {
            let w = ValueWeights::new(w.clone())?;
            let model = fit(data, &w, opts)?;
            Ok(deviation_fraction(&model.decisions(data)?, reference)?)
        })
        .collect()
}

pub fn weight_equivalence_sweep(
    data: &Dataset,
    w_star: &ValueWeights,
    grid: &GridSpec,
    tau: f64,
    opts: &FitOptions,
) -> Result<SweepResult, ExperimentError> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(ExperimentError::InvalidConfig(format!("tau must lie in [0, 1], got {tau}")));
    }
    if grid.is_empty() || grid.0.len() != w_star.len() {
        return Err(ExperimentError::InvalidConfig(format!(
            "grid has {} axes for {} weights",
            grid.0.len(),
            w_star.len()
        )));
    }
    let reference = fit(data, w_star, opts)?.decisions(data)?;
    let grid_points = grid.points();
    let mut deviation = Vec::with_capacity(grid_points.len());
    let mut failures = Vec::new();
    for (k, r) in deviation_at_points(data, &reference, &grid_points, opts)
        .into_iter()
        .enumerate()
    {
        match r {
            Ok(v) => deviation.push(Some(v)),
            Err(e) => {
                failures.push((k, e.to_string()));
                deviation.push(None);
            }
        }
    }
    let equivalent_set = deviation
        .iter()
        .enumerate()
        .filter_map(|(k, d)| d.filter(|v| *v <= tau).map(|_| k))
        .collect();
    Ok(SweepResult {
        grid_spec: grid.clone(),
        grid: grid_points,
        deviation,
        failures,
        equivalent_set,
        w_star: w_star.clone(),
        tau,
    })
}
