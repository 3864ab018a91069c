#![allow(dead_code)]

use oversight::dataset::{Dataset, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dataset from raw rows with the given sensitive feature indices.
pub fn dataset(rows: &[Vec<f64>], y: &[u8], sensitive: &[usize]) -> Dataset {
    let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
    Dataset::from_raw(Matrix::from_rows(rows).unwrap(), y.to_vec(), sensitive.to_vec(), names).unwrap()
}

/// Random `n × d` instance containing both classes.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, d: usize, sensitive: &[usize]) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    y[0] = 0;
    y[1] = 1;
    dataset(&rows, &y, sensitive)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Penalized log-likelihood evaluated from first principles on the raw
/// columns: population-variance standardization, covariance directions
/// `c_l = mean((s_l − mean s_l)·x_std)`, intercept last.
pub struct OracleObjective {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    c: Vec<Vec<f64>>,
    w: Vec<f64>,
    ridge: f64,
}

impl OracleObjective {
    pub fn new(raw: &[Vec<f64>], y: &[u8], sensitive: &[usize], w: &[f64], ridge: f64) -> Self {
        let (n, d) = (raw.len(), raw[0].len());
        let nf = n as f64;
        let mut x = vec![vec![0.0; d]; n];
        for j in 0..d {
            let mean = raw.iter().map(|r| r[j]).sum::<f64>() / nf;
            let sd = (raw.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nf).sqrt();
            for i in 0..n {
                x[i][j] = if sd > 0.0 { (raw[i][j] - mean) / sd } else { 0.0 };
            }
        }
        let c = sensitive
            .iter()
            .map(|&s| {
                let mean = raw.iter().map(|r| r[s]).sum::<f64>() / nf;
                (0..d)
                    .map(|j| (0..n).map(|i| (raw[i][s] - mean) * x[i][j]).sum::<f64>() / nf)
                    .collect()
            })
            .collect();
        Self {
            x,
            y: y.iter().map(|&v| f64::from(v)).collect(),
            c,
            w: w.to_vec(),
            ridge,
        }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let d = theta.len() - 1;
        let (coef, b) = (&theta[..d], theta[d]);
        let mut ll = 0.0;
        for (xi, yi) in self.x.iter().zip(&self.y) {
            let s: f64 = xi.iter().zip(coef).map(|(a, t)| a * t).sum::<f64>() + b;
            let softplus = if s > 0.0 { s + (-s).exp().ln_1p() } else { s.exp().ln_1p() };
            ll += yi * s - softplus;
        }
        let pen: f64 = self
            .c
            .iter()
            .zip(&self.w)
            .map(|(c, w)| w * c.iter().zip(coef).map(|(a, t)| a * t).sum::<f64>().abs())
            .sum();
        let ridge = 0.5 * self.ridge * coef.iter().map(|t| t * t).sum::<f64>();
        ll - pen - ridge
    }
}
