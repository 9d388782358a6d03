//! Gamma model sampled in its mean / standard-deviation parameterisation.
//!
//! The chain runs on `(λ, δ)` with independent `Uniform(0.0001, 10000)`
//! priors and reports `α = λ²/δ²`, `β = λ/δ²`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::harness::mh::{random_walk_metropolis, LogTarget, MhChain, MhConfig};

pub const PRIOR_LOWER: f64 = 0.0001;
pub const PRIOR_UPPER: f64 = 10_000.0;

/// Sufficient statistics of a positive sample.
pub struct GammaPosterior {
    n: f64,
    sum: f64,
    sum_log: f64,
}

impl GammaPosterior {
    pub fn new(y: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidArgument("empty gamma shard".into()));
        }
        if let Some((row, &value)) = y
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::NonPositiveData { row, value });
        }
        Ok(GammaPosterior {
            n: y.len() as f64,
            sum: y.iter().sum(),
            sum_log: y.iter().map(|v| v.ln()).sum(),
        })
    }

    pub fn in_prior_support(lambda: f64, delta: f64) -> bool {
        let inside = |v: f64| v > PRIOR_LOWER && v < PRIOR_UPPER;
        inside(lambda) && inside(delta)
    }

    pub fn log_likelihood(&self, alpha: f64, beta: f64) -> f64 {
        self.n * (alpha * beta.ln() - libm::lgamma(alpha)) + (alpha - 1.0) * self.sum_log
            - beta * self.sum
    }
}

/// `(α, β)` from mean `λ` and standard deviation `δ`.
#[inline]
pub fn shape_rate(lambda: f64, delta: f64) -> (f64, f64) {
    let var = delta * delta;
    (lambda * lambda / var, lambda / var)
}

impl LogTarget for GammaPosterior {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let (lambda, delta) = (x[0], x[1]);
        if !Self::in_prior_support(lambda, delta) {
            return f64::NEG_INFINITY;
        }
        let (alpha, beta) = shape_rate(lambda, delta);
        self.log_likelihood(alpha, beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaChain {
    /// Internal `(λ, δ)` chain.
    pub mean_sd: MhChain,
    /// Draw-major `T × 2` values of `(α, β)`.
    pub shape_rate: Vec<f64>,
}

impl GammaChain {
    pub fn len(&self) -> usize {
        self.mean_sd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_sd.is_empty()
    }
}

pub fn sample_gamma_posterior(y: &[f64], config: &MhConfig) -> Result<GammaChain> {
    let target = GammaPosterior::new(y)?;
    let n = y.len() as f64;
    let mean = target.sum / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    let alpha = mean * mean / var;
    // Large-sample variances of the sample mean and standard deviation.
    let proposal = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        var / n,
        var * (2.0 + 6.0 / alpha) / (4.0 * n),
    ]));
    let start = [
        mean.clamp(2.0 * PRIOR_LOWER, 0.5 * PRIOR_UPPER),
        sd.clamp(2.0 * PRIOR_LOWER, 0.5 * PRIOR_UPPER),
    ];
    let chain = random_walk_metropolis(&target, &start, &proposal, config)?;
    let mut out = Vec::with_capacity(chain.as_slice().len());
    for t in 0..chain.len() {
        let d = chain.draw(t);
        let (a, b) = shape_rate(d[0], d[1]);
        out.push(a);
        out.push(b);
    }
    Ok(GammaChain {
        mean_sd: chain,
        shape_rate: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::Seed;
    use crate::harness::data::simulate_gamma_data;

    #[test]
    fn prior_box_boundaries() {
        let y = [1.0, 2.0, 3.0];
        let t = GammaPosterior::new(&y).unwrap();
        assert_eq!(t.log_density(&[PRIOR_LOWER, 1.0]), f64::NEG_INFINITY);
        assert_eq!(t.log_density(&[0.5 * PRIOR_LOWER, 1.0]), f64::NEG_INFINITY);
        assert_eq!(t.log_density(&[1.0, PRIOR_UPPER]), f64::NEG_INFINITY);
        assert_eq!(t.log_density(&[-1.0, 1.0]), f64::NEG_INFINITY);
        assert!(t.log_density(&[2.0, 1.0]).is_finite());
    }

    #[test]
    fn rejects_non_positive_data() {
        assert!(matches!(
            GammaPosterior::new(&[1.0, 0.0, 2.0]),
            Err(Error::NonPositiveData { row: 1, .. })
        ));
    }

    #[test]
    fn likelihood_matches_direct_sum() {
        let y = [0.5, 1.5, 2.25, 4.0];
        let t = GammaPosterior::new(&y).unwrap();
        let (a, b): (f64, f64) = (2.5, 1.2);
        let direct: f64 = y
            .iter()
            .map(|v| a * b.ln() - libm::lgamma(a) + (a - 1.0) * v.ln() - b * v)
            .sum();
        assert!((t.log_likelihood(a, b) - direct).abs() < 1e-12);
    }

    #[test]
    fn posterior_covers_the_truth_and_algebra_holds() {
        let g = simulate_gamma_data(20_000, 4.0, 2.0, Seed(7)).unwrap();
        let chain = sample_gamma_posterior(&g.y, &MhConfig::new(5000, 1000, Seed(8))).unwrap();
        assert!(chain.mean_sd.convergence_warning().is_none());
        let alpha: Vec<f64> = chain.shape_rate.iter().step_by(2).copied().collect();
        let beta: Vec<f64> = chain
            .shape_rate
            .iter()
            .skip(1)
            .step_by(2)
            .copied()
            .collect();
        let stats = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
            (m, s)
        };
        let (ma, sa) = stats(&alpha);
        let (mb, sb) = stats(&beta);
        assert!((ma - 4.0).abs() < 3.0 * sa, "{ma} ± {sa}");
        assert!((mb - 2.0).abs() < 3.0 * sb, "{mb} ± {sb}");
        for t in 0..chain.len() {
            let ld = chain.mean_sd.draw(t);
            let (a, b) = (chain.shape_rate[2 * t], chain.shape_rate[2 * t + 1]);
            assert!((a / b - ld[0]).abs() < 1e-12 * ld[0]);
            assert!((a / (b * b) - ld[1] * ld[1]).abs() < 1e-12 * ld[1] * ld[1]);
        }
    }
}
