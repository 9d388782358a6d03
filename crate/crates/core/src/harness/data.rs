use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::bundle::{streams, Seed};
use crate::error::{Error, Result};

/// Row-major `n × ψ` table of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dims("data matrix (n*ψ)", rows * cols, values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(DataMatrix { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows)
            .map(|r| self.values[r * self.cols + c])
            .collect()
    }
}

/// Randomly permutes rows, then cuts them into `shards` contiguous blocks.
/// The first `n mod M` blocks get one extra row.
pub fn partition_rows(data: &DataMatrix, shards: usize, seed: Seed) -> Result<Vec<DataMatrix>> {
    if shards == 0 || shards > data.rows {
        return Err(Error::TooManyShards {
            rows: data.rows,
            shards,
        });
    }
    let mut order: Vec<usize> = (0..data.rows).collect();
    order.shuffle(&mut seed.rng(streams::PARTITION));
    let base = data.rows / shards;
    let extra = data.rows % shards;
    let mut out = Vec::with_capacity(shards);
    let mut start = 0;
    for s in 0..shards {
        let len = base + usize::from(s < extra);
        let mut values = Vec::with_capacity(len * data.cols);
        for &r in &order[start..start + len] {
            values.extend_from_slice(data.row(r));
        }
        out.push(DataMatrix {
            rows: len,
            cols: data.cols,
            values,
        });
        start += len;
    }
    Ok(out)
}

/// Covariates and binary outcomes of a logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticProblem {
    /// Row-major `n × p` design matrix.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub beta_true: Vec<f64>,
}

impl LogisticProblem {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn covariates(&self) -> usize {
        self.beta_true.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.covariates();
        &self.x[i * p..(i + 1) * p]
    }

    /// Rows as `[x_1, …, x_p, y]`.
    pub fn to_data_matrix(&self) -> DataMatrix {
        let p = self.covariates();
        let mut values = Vec::with_capacity(self.len() * (p + 1));
        for i in 0..self.len() {
            values.extend_from_slice(self.row(i));
            values.push(self.y[i]);
        }
        DataMatrix {
            rows: self.len(),
            cols: p + 1,
            values,
        }
    }

    pub fn from_data_matrix(data: &DataMatrix, beta_true: &[f64]) -> Result<Self> {
        let p = beta_true.len();
        if data.cols != p + 1 {
            return Err(Error::dims("logistic data columns", p + 1, data.cols));
        }
        let mut x = Vec::with_capacity(data.rows * p);
        let mut y = Vec::with_capacity(data.rows);
        for r in 0..data.rows {
            let row = data.row(r);
            x.extend_from_slice(&row[..p]);
            let outcome = row[p];
            if outcome != 0.0 && outcome != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "outcome {outcome} at row {r} is not 0 or 1"
                )));
            }
            y.push(outcome);
        }
        Ok(LogisticProblem {
            x,
            y,
            beta_true: beta_true.to_vec(),
        })
    }
}

pub const PAPER_BETA: [f64; 5] = [0.47, -1.70, 0.54, -0.90, 0.86];

/// Standard-normal covariates, Bernoulli outcomes with logit link.
pub fn simulate_logistic_data(n: usize, beta: &[f64], seed: Seed) -> Result<LogisticProblem> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    if beta.is_empty() {
        return Err(Error::InvalidArgument("empty coefficient vector".into()));
    }
    let p = beta.len();
    let mut rng = seed.rng(streams::SIMULATE);
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let start = x.len();
        x.extend((0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let eta: f64 = x[start..].iter().zip(beta).map(|(a, b)| a * b).sum();
        let prob = 1.0 / (1.0 + (-eta).exp());
        y.push(if rng.random::<f64>() < prob { 1.0 } else { 0.0 });
    }
    Ok(LogisticProblem {
        x,
        y,
        beta_true: beta.to_vec(),
    })
}

/// Positive observations with their generating shape/rate.
///
/// `lambda` and `delta` are the mean and standard deviation, so that
/// `α = λ²/δ²` and `β = λ/δ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaProblem {
    pub y: Vec<f64>,
    pub alpha_true: f64,
    pub beta_true: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl GammaProblem {
    pub fn to_data_matrix(&self) -> DataMatrix {
        DataMatrix {
            rows: self.y.len(),
            cols: 1,
            values: self.y.clone(),
        }
    }
}

pub fn simulate_gamma_data(n: usize, alpha: f64, beta: f64, seed: Seed) -> Result<GammaProblem> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma shape and rate must be positive, got ({alpha}, {beta})"
        )));
    }
    let dist = Gamma::new(alpha, 1.0 / beta).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = seed.rng(streams::SIMULATE);
    let y = (0..n).map(|_| dist.sample(&mut rng)).collect();
    Ok(GammaProblem {
        y,
        alpha_true: alpha,
        beta_true: beta,
        lambda: alpha / beta,
        delta: alpha.sqrt() / beta,
    })
}
