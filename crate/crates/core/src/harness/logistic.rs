//! Flat-prior Bayesian logistic regression.
//!
//! With `p(β) ∝ 1` the log posterior is the log likelihood, so the tempered
//! subposterior prior `p(β)^(1/M)` needs no adjustment.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::harness::data::LogisticProblem;
use crate::harness::mh::{random_walk_metropolis, LogTarget, MhChain, MhConfig};

const NEWTON_MAX_ITER: usize = 100;
/// Rows per partial product in [`LogisticPosterior::log_likelihood`].
const PRODUCT_BLOCK: usize = 256;

pub struct LogisticPosterior<'a> {
    problem: &'a LogisticProblem,
}

impl<'a> LogisticPosterior<'a> {
    pub fn new(problem: &'a LogisticProblem) -> Result<Self> {
        if problem.is_empty() {
            return Err(Error::InvalidArgument("empty logistic shard".into()));
        }
        Ok(LogisticPosterior { problem })
    }

    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        // softplus(η) = max(η, 0) + ln(1 + e^(−|η|)). The second factor lies
        // in (1, 2], so a block of them multiplies without overflow and one
        // logarithm per block replaces one per row.
        let p = self.problem.covariates();
        let mut linear = 0.0;
        let mut log_sum = 0.0;
        for (rows, ys) in self
            .problem
            .x
            .chunks(p * PRODUCT_BLOCK)
            .zip(self.problem.y.chunks(PRODUCT_BLOCK))
        {
            let mut product = 1.0;
            for (row, &y) in rows.chunks_exact(p).zip(ys) {
                let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
                linear += y * eta - eta.max(0.0);
                product *= 1.0 + (-eta.abs()).exp();
            }
            log_sum += product.ln();
        }
        linear - log_sum
    }

    /// Newton–Raphson maximum likelihood estimate and the inverse observed
    /// information at it.
    pub fn mode(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let p = self.problem.covariates();
        let n = self.problem.len();
        let x = DMatrix::from_row_slice(n, p, &self.problem.x);
        if (x.transpose() * &x).cholesky().is_none() {
            return Err(Error::RankDeficientDesign);
        }
        let y = DVector::from_column_slice(&self.problem.y);
        let mut beta = DVector::<f64>::zeros(p);
        for _ in 0..NEWTON_MAX_ITER {
            let eta = &x * &beta;
            let prob = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
            let grad = x.transpose() * (&y - &prob);
            let weights = prob.map(|q| q * (1.0 - q));
            let weighted = DMatrix::from_fn(n, p, |r, c| x[(r, c)] * weights[r]);
            let info = x.transpose() * weighted;
            let chol = info.cholesky().ok_or(Error::RankDeficientDesign)?;
            let step = chol.solve(&grad);
            beta += &step;
            if !beta.iter().all(|b| b.is_finite()) {
                break;
            }
            if step.amax() < 1e-10 {
                return Ok((beta.iter().copied().collect(), chol.inverse()));
            }
        }
        Err(Error::ModeSearchFailed(NEWTON_MAX_ITER))
    }
}

impl LogTarget for LogisticPosterior<'_> {
    fn dim(&self) -> usize {
        self.problem.covariates()
    }

    fn log_density(&self, beta: &[f64]) -> f64 {
        self.log_likelihood(beta)
    }
}

/// Random-walk Metropolis on `β`, started at the maximum likelihood estimate
/// with the inverse information as proposal shape.
pub fn sample_logistic_posterior(problem: &LogisticProblem, config: &MhConfig) -> Result<MhChain> {
    let target = LogisticPosterior::new(problem)?;
    let (mode, cov) = target.mode()?;
    random_walk_metropolis(&target, &mode, &cov, config)
}
