//! Logistic regression with demographic-parity covariance penalties.
//!
//! The fitted objective (maximized) is
//!
//! ```text
//! L(θ) = Σ_i log p(y_i | x_i, θ) − Σ_l w_l |c_lᵀθ̃| − (ridge/2)‖θ̃‖²
//! c_l  = (1/n) Σ_i (x_raw[i, s_l] − mean_l) · x_i
//! ```
//!
//! where `θ̃` excludes the intercept (stored last) and `s_l` is the feature
//! index of the `l`-th sensitive attribute. `c_lᵀθ̃` is the covariance between
//! the raw sensitive attribute and the linear score, which keeps `L` concave.
//!
//! # Solver
//!
//! `L` is smooth except on the hyperplanes `c_lᵀθ̃ = 0`. The maximizer has one
//! of `3^m` sign patterns (each penalized covariance positive, negative or
//! exactly zero), and on each pattern the problem is smooth and strictly
//! concave: a linear term for signed attributes, an equality constraint for
//! zero ones. [`fit`] solves every pattern with projected Newton steps and
//! keeps the point with the largest true objective. The true maximizer is the
//! unique maximizer of its own pattern's problem, so it is always among the
//! candidates, including when it sits exactly on a kink.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training data must contain both classes")]
    SingleClassData,
    #[error("iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid fit options: {0}")]
    InvalidOptions(String),
    #[error("malformed model record: {0}")]
    Format(String),
}

/// Nonnegative weights, one per sensitive attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueWeights(Vec<f64>);

impl ValueWeights {
    pub fn new(w: Vec<f64>) -> Result<Self, FitError> {
        if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(FitError::InvalidWeights(format!(
                "weights must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(Self(w))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ValueWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for ValueWeights {
    type Err = FitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(Self(Vec::new()));
        }
        let w = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| FitError::InvalidWeights(format!("`{p}` is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Damped Newton step of fixed length `η`.
    Fixed(f64),
    /// Armijo backtracking on the pattern objective.
    Backtracking { shrink: f64, sufficient_increase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zeros,
    /// Standard normal entries scaled by 0.1, drawn from `FitOptions::seed`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Newton iterations allowed per sign pattern.
    pub max_iters: usize,
    /// Stop once the projected gradient norm is at most this.
    pub tolerance: f64,
    pub step_rule: StepRule,
    pub ridge: f64,
    pub init: Init,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tolerance: 1e-6,
            step_rule: StepRule::Backtracking {
                shrink: 0.5,
                sufficient_increase: 1e-4,
            },
            ridge: 1e-6,
            init: Init::Zeros,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.max_iters < 1 {
            return Err(FitError::InvalidOptions("max_iters must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(FitError::InvalidOptions("tolerance must be positive".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(FitError::InvalidOptions("ridge must be nonnegative".into()));
        }
        match self.step_rule {
            StepRule::Fixed(eta) if !(eta > 0.0 && eta <= 1.0) => Err(FitError::InvalidOptions(
                "fixed step must lie in (0, 1]".into(),
            )),
            StepRule::Backtracking {
                shrink,
                sufficient_increase,
            } if !(shrink > 0.0 && shrink < 1.0)
                || !(sufficient_increase > 0.0 && sufficient_increase < 0.5) =>
            {
                Err(FitError::InvalidOptions(
                    "backtracking needs shrink in (0,1) and sufficient_increase in (0,0.5)".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitInfo {
    pub iterations: usize,
    pub objective: f64,
    /// Norm of the minimum-norm supergradient at the returned point.
    pub subgradient_norm: f64,
    pub seed: u64,
    pub converged: bool,
}

/// A fitted candidate algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct FairGlmModel {
    /// `d` coefficients followed by the intercept.
    pub theta: Vec<f64>,
    pub weights: ValueWeights,
    pub fit_info: FitInfo,
    pub feature_names: Vec<String>,
}

pub(crate) fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^s)` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Covariance vectors `c_l` (one per sensitive attribute, length `d`) of the
/// raw sensitive attributes with the standardized features.
pub fn covariance_vectors(data: &Dataset) -> Vec<Vec<f64>> {
    let (n, d) = (data.n(), data.d());
    data.sensitive
        .iter()
        .map(|&s| {
            let raw = data.raw_column(s);
            let mean = raw.iter().sum::<f64>() / n as f64;
            let mut c = vec![0.0; d];
            for (i, r) in raw.iter().enumerate() {
                let dev = r - mean;
                for (cj, xj) in c.iter_mut().zip(data.x.row(i)) {
                    *cj += dev * xj;
                }
            }
            c.iter_mut().for_each(|v| *v /= n as f64);
            c
        })
        .collect()
}

fn check_shapes(theta: &[f64], data: &Dataset, weights: &ValueWeights) -> Result<(), FitError> {
    if theta.len() != data.d() + 1 {
        return Err(FitError::DimensionMismatch(format!(
            "theta has length {}, expected {}",
            theta.len(),
            data.d() + 1
        )));
    }
    if weights.len() != data.sensitive.len() {
        return Err(FitError::DimensionMismatch(format!(
            "{} weights for {} sensitive attributes",
            weights.len(),
            data.sensitive.len()
        )));
    }
    if data.is_empty() {
        return Err(FitError::DimensionMismatch("dataset is empty".into()));
    }
    Ok(())
}

/// Precomputed pieces of the objective for one dataset.
struct Problem<'a> {
    data: &'a Dataset,
    cov: Vec<Vec<f64>>,
    weights: &'a [f64],
    ridge: f64,
}

impl<'a> Problem<'a> {
    fn new(data: &'a Dataset, weights: &'a ValueWeights, ridge: f64) -> Self {
        Self {
            data,
            cov: covariance_vectors(data),
            weights: weights.as_slice(),
            ridge,
        }
    }

    fn d(&self) -> usize {
        self.data.d()
    }

    fn score(&self, theta: &[f64], i: usize) -> f64 {
        let d = self.d();
        dot(&theta[..d], self.data.x.row(i)) + theta[d]
    }

    fn log_likelihood(&self, theta: &[f64]) -> f64 {
        (0..self.data.n())
            .map(|i| {
                let s = self.score(theta, i);
                f64::from(self.data.y[i]) * s - softplus(s)
            })
            .sum()
    }

    fn ridge_term(&self, theta: &[f64]) -> f64 {
        0.5 * self.ridge * theta[..self.d()].iter().map(|v| v * v).sum::<f64>()
    }

    fn penalised_covariances(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.d();
        self.cov.iter().map(|c| dot(c, &theta[..d])).collect()
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let pen: f64 = self
            .penalised_covariances(theta)
            .iter()
            .zip(self.weights)
            .map(|(v, w)| w * v.abs())
            .sum();
        self.log_likelihood(theta) - pen - self.ridge_term(theta)
    }

    /// Gradient of log-likelihood minus ridge.
    fn smooth_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.d();
        let mut g = vec![0.0; d + 1];
        for i in 0..self.data.n() {
            let r = f64::from(self.data.y[i]) - sigmoid(self.score(theta, i));
            for (gj, xj) in g.iter_mut().zip(self.data.x.row(i)) {
                *gj += r * xj;
            }
            g[d] += r;
        }
        for j in 0..d {
            g[j] -= self.ridge * theta[j];
        }
        g
    }

    /// `signs[l]` multiplies `−w_l c_l`; zero drops the term.
    fn gradient_with_signs(&self, theta: &[f64], signs: &[f64]) -> Vec<f64> {
        let mut g = self.smooth_gradient(theta);
        for ((c, w), s) in self.cov.iter().zip(self.weights).zip(signs) {
            if *s != 0.0 {
                for (gj, cj) in g.iter_mut().zip(c) {
                    *gj -= w * s * cj;
                }
            }
        }
        g
    }

    /// Negative Hessian of the smooth part (positive semidefinite).
    fn neg_hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let d = self.d();
        let p = d + 1;
        let mut h = vec![0.0; p * p];
        let mut z = vec![0.0; p];
        for i in 0..self.data.n() {
            let pr = sigmoid(self.score(theta, i));
            let wt = pr * (1.0 - pr);
            if wt == 0.0 {
                continue;
            }
            z[..d].copy_from_slice(self.data.x.row(i));
            z[d] = 1.0;
            for a in 0..p {
                let za = wt * z[a];
                let row = &mut h[a * p..(a + 1) * p];
                for b in a..p {
                    row[b] += za * z[b];
                }
            }
        }
        let mut m = DMatrix::from_fn(p, p, |a, b| if a <= b { h[a * p + b] } else { h[b * p + a] });
        for j in 0..d {
            m[(j, j)] += self.ridge;
        }
        m
    }

    /// Value of the smooth objective of one sign pattern.
    fn pattern_objective(&self, theta: &[f64], signs: &[f64]) -> f64 {
        let lin: f64 = self
            .penalised_covariances(theta)
            .iter()
            .zip(self.weights)
            .zip(signs)
            .map(|((v, w), s)| w * s * v)
            .sum();
        self.log_likelihood(theta) - lin - self.ridge_term(theta)
    }

    fn constraint_row(&self, l: usize) -> Vec<f64> {
        let mut row = self.cov[l].clone();
        row.push(0.0);
        row
    }
}

/// Objective value at `theta` (to be maximized).
pub fn objective_value(
    theta: &[f64],
    data: &Dataset,
    weights: &ValueWeights,
    ridge: f64,
) -> Result<f64, FitError> {
    check_shapes(theta, data, weights)?;
    Ok(Problem::new(data, weights, ridge).objective(theta))
}

/// A supergradient of the objective; the sign of a penalty term exactly at
/// its kink is taken as zero.
pub fn objective_subgradient(
    theta: &[f64],
    data: &Dataset,
    weights: &ValueWeights,
    ridge: f64,
) -> Result<Vec<f64>, FitError> {
    check_shapes(theta, data, weights)?;
    let problem = Problem::new(data, weights, ridge);
    let signs: Vec<f64> = problem
        .penalised_covariances(theta)
        .iter()
        .map(|v| if *v > 0.0 { 1.0 } else if *v < 0.0 { -1.0 } else { 0.0 })
        .collect();
    Ok(problem.gradient_with_signs(theta, &signs))
}

/// Orthogonal projector onto the null space of the rows `constraints`.
fn null_space_projector(constraints: &[Vec<f64>], p: usize) -> DMatrix<f64> {
    let mut proj = DMatrix::<f64>::identity(p, p);
    if constraints.is_empty() {
        return proj;
    }
    let a = DMatrix::from_fn(constraints.len(), p, |r, c| constraints[r][c]);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return proj;
    }
    for (k, sv) in svd.singular_values.iter().enumerate() {
        if *sv > smax * 1e-12 {
            let v = v_t.row(k).transpose();
            proj -= &v * v.transpose();
        }
    }
    proj
}

struct PatternSolution {
    theta: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn solve_pattern(
    problem: &Problem<'_>,
    signs: &[f64],
    zero_set: &[usize],
    start: &[f64],
    opts: &FitOptions,
) -> Result<PatternSolution, FitError> {
    let p = problem.d() + 1;
    let rows: Vec<Vec<f64>> = zero_set.iter().map(|&l| problem.constraint_row(l)).collect();
    let proj = null_space_projector(&rows, p);
    let complement = DMatrix::<f64>::identity(p, p) - &proj;
    let mut theta = DVector::from_column_slice(start);
    theta = &proj * theta;
    let mut iterations = 0;
    let mut converged = false;
    let mut value = problem.pattern_objective(theta.as_slice(), signs);
    while iterations < opts.max_iters {
        let g = DVector::from_vec(problem.gradient_with_signs(theta.as_slice(), signs));
        let rg = &proj * g;
        if rg.norm() <= opts.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let h = problem.neg_hessian(theta.as_slice());
        let mut system = &proj * h * &proj + &complement;
        let mut damping = 0.0;
        let step = loop {
            if let Some(chol) = system.clone().cholesky() {
                break &proj * chol.solve(&rg);
            }
            damping = if damping == 0.0 { 1e-10 } else { damping * 100.0 };
            if damping > 1e6 {
                // Fall back to a plain gradient step.
                break rg.clone();
            }
            for j in 0..p {
                system[(j, j)] += damping;
            }
        };
        let slope = rg.dot(&step);
        let (next, next_value) = match opts.step_rule {
            StepRule::Fixed(eta) => {
                let next = &theta + eta * &step;
                let v = problem.pattern_objective(next.as_slice(), signs);
                (next, v)
            }
            StepRule::Backtracking {
                shrink,
                sufficient_increase,
            } => {
                let mut t = 1.0;
                loop {
                    let cand = &theta + t * &step;
                    let v = problem.pattern_objective(cand.as_slice(), signs);
                    if v.is_finite() && v >= value + sufficient_increase * t * slope {
                        break (cand, v);
                    }
                    t *= shrink;
                    if t < 1e-16 {
                        break (theta.clone(), value);
                    }
                }
            }
        };
        if next.iter().any(|v| !v.is_finite()) || !next_value.is_finite() {
            return Err(FitError::NonFiniteIterate { iteration: iterations });
        }
        if next == theta {
            // No representable ascent left along the Newton direction.
            converged = rg.norm() <= opts.tolerance.sqrt();
            break;
        }
        theta = next;
        value = next_value;
    }
    Ok(PatternSolution {
        theta: theta.as_slice().to_vec(),
        iterations,
        converged,
    })
}

/// Minimum-norm element of the superdifferential at `theta`. Penalty terms
/// within a relative `1e-9` of their kink are treated as sitting on it.
fn min_norm_supergradient(problem: &Problem<'_>, theta: &[f64]) -> f64 {
    let d = problem.d();
    let theta_norm = theta[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
    let covs = problem.penalised_covariances(theta);
    let mut signs = vec![0.0; covs.len()];
    let mut kinks = Vec::new();
    for (l, v) in covs.iter().enumerate() {
        let c_norm = problem.cov[l].iter().map(|c| c * c).sum::<f64>().sqrt();
        if v.abs() <= 1e-9 * (c_norm * theta_norm).max(1e-300) || c_norm == 0.0 {
            if problem.weights[l] > 0.0 && c_norm > 0.0 {
                kinks.push(l);
            }
        } else {
            signs[l] = v.signum();
        }
    }
    let g0 = DVector::from_vec(problem.gradient_with_signs(theta, &signs));
    if kinks.is_empty() {
        return g0.norm();
    }
    // min_t ‖g0 − Σ t_k w_k c_k‖ over t ∈ [−1, 1]^K: enumerate which
    // coordinates sit at a bound.
    let cols: Vec<DVector<f64>> = kinks
        .iter()
        .map(|&l| DVector::from_vec(problem.constraint_row(l)) * problem.weights[l])
        .collect();
    let k = cols.len();
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(k as u32) {
        let mut state = vec![0u8; k];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut t = vec![0.0; k];
        let mut rhs = g0.clone();
        let mut free = Vec::new();
        for (j, s) in state.iter().enumerate() {
            match s {
                1 => t[j] = -1.0,
                2 => t[j] = 1.0,
                _ => free.push(j),
            }
            if *s != 0 {
                rhs -= &cols[j] * t[j];
            }
        }
        if !free.is_empty() {
            let b = DMatrix::from_fn(d + 1, free.len(), |r, c| cols[free[c]][r]);
            let Ok(tf) = b.clone().svd(true, true).solve(&rhs, 1e-14) else {
                continue;
            };
            if tf.iter().any(|v| v.abs() > 1.0 + 1e-12) {
                continue;
            }
            rhs -= b * tf;
        }
        best = best.min(rhs.norm());
    }
    best
}

/// Fits the penalized logistic model. Deterministic in its inputs.
pub fn fit(
    data: &Dataset,
    weights: &ValueWeights,
    opts: &FitOptions,
) -> Result<FairGlmModel, FitError> {
    opts.validate()?;
    let p = data.d() + 1;
    check_shapes(&vec![0.0; p], data, weights)?;
    let positives = data.y.iter().filter(|&&v| v == 1).count();
    if data.n() < 2 || positives == 0 || positives == data.n() {
        return Err(FitError::SingleClassData);
    }
    let problem = Problem::new(data, weights, opts.ridge);
    let start: Vec<f64> = match opts.init {
        Init::Zeros => vec![0.0; p],
        Init::Gaussian => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..p)
                .map(|_| 0.1 * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect::<Vec<f64>>()
        }
    };

    // Attributes with zero weight contribute nothing; only the rest need
    // pattern enumeration.
    let active: Vec<usize> = (0..weights.len())
        .filter(|&l| weights.as_slice()[l] > 0.0)
        .collect();
    let mut best: Option<(f64, PatternSolution)> = None;
    for code in 0..3usize.pow(active.len() as u32) {
        let mut signs = vec![0.0; weights.len()];
        let mut zero_set = Vec::new();
        let mut c = code;
        for &l in &active {
            match c % 3 {
                0 => signs[l] = 1.0,
                1 => signs[l] = -1.0,
                _ => zero_set.push(l),
            }
            c /= 3;
        }
        let sol = solve_pattern(&problem, &signs, &zero_set, &start, opts)?;
        let value = problem.objective(&sol.theta);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, sol));
        }
    }
    let (objective, sol) = best.expect("at least one pattern");
    let subgradient_norm = min_norm_supergradient(&problem, &sol.theta);
    Ok(FairGlmModel {
        theta: sol.theta,
        weights: weights.clone(),
        fit_info: FitInfo {
            iterations: sol.iterations,
            objective,
            subgradient_norm,
            seed: opts.seed,
            converged: sol.converged || subgradient_norm <= opts.tolerance,
        },
        feature_names: data.feature_names.clone(),
    })
}

impl FairGlmModel {
    pub fn d(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn intercept(&self) -> f64 {
        self.theta[self.d()]
    }

    /// Linear score and logistic probability for a standardized feature row.
    pub fn predict_score(&self, x: &[f64]) -> Result<(f64, f64), FitError> {
        if x.len() != self.d() {
            return Err(FitError::DimensionMismatch(format!(
                "row has {} features, model expects {}",
                x.len(),
                self.d()
            )));
        }
        let s = dot(&self.theta[..self.d()], x) + self.intercept();
        Ok((s, sigmoid(s)))
    }

    /// Recommended treatment: 1 iff the score is nonnegative (probability ≥ ½).
    pub fn decide(&self, x: &[f64]) -> Result<u8, FitError> {
        self.predict_score(x).map(|(s, _)| u8::from(s >= 0.0))
    }

    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>, FitError> {
        (0..data.n())
            .map(|i| self.predict_score(data.x.row(i)).map(|(s, _)| s))
            .collect()
    }

    pub fn decisions(&self, data: &Dataset) -> Result<Vec<u8>, FitError> {
        (0..data.n()).map(|i| self.decide(data.x.row(i))).collect()
    }

    /// Flat `key = value` record; reals use 17 significant digits.
    pub fn to_text(&self) -> String {
        let fmt_list = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",");
        let mut out = String::from("# fairglm model\n");
        out += &format!("features = {}\n", self.feature_names.join(","));
        out += &format!("theta = {}\n", fmt_list(&self.theta));
        out += &format!("weights = {}\n", fmt_list(self.weights.as_slice()));
        out += &format!("iterations = {}\n", self.fit_info.iterations);
        out += &format!("objective = {:.16e}\n", self.fit_info.objective);
        out += &format!("subgradient_norm = {:.16e}\n", self.fit_info.subgradient_norm);
        out += &format!("seed = {}\n", self.fit_info.seed);
        out += &format!("converged = {}\n", self.fit_info.converged);
        out
    }

    pub fn from_text(text: &str) -> Result<Self, FitError> {
        let mut fields = std::collections::HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| FitError::Format(format!("expected `key = value`, got `{line}`")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| FitError::Format(format!("missing `{k}`")))
        };
        let reals = |s: String| -> Result<Vec<f64>, FitError> {
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|e| FitError::Format(e.to_string())))
                .collect()
        };
        let parse = |k: &str| -> Result<f64, FitError> {
            get(k)?.parse().map_err(|_| FitError::Format(format!("bad `{k}`")))
        };
        let features = get("features")?;
        let feature_names: Vec<String> = if features.is_empty() {
            Vec::new()
        } else {
            features.split(',').map(|s| s.trim().to_string()).collect()
        };
        let theta = reals(get("theta")?)?;
        if theta.len() != feature_names.len() + 1 {
            return Err(FitError::Format("theta length does not match features".into()));
        }
        Ok(Self {
            theta,
            weights: ValueWeights::new(reals(get("weights")?)?)?,
            fit_info: FitInfo {
                iterations: get("iterations")?
                    .parse()
                    .map_err(|_| FitError::Format("bad `iterations`".into()))?,
                objective: parse("objective")?,
                subgradient_norm: parse("subgradient_norm")?,
                seed: get("seed")?
                    .parse()
                    .map_err(|_| FitError::Format("bad `seed`".into()))?,
                converged: get("converged")? == "true",
            },
            feature_names,
        })
    }
}
