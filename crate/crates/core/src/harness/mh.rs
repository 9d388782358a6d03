//! Random-walk Metropolis with Gaussian proposals, tuned during burn-in.
//!
//! The proposal is `N(x, s² L Lᵀ)`. During burn-in the log step scale `s`
//! follows a Robbins–Monro recursion toward the target acceptance rate, and
//! halfway through burn-in the shape `L Lᵀ` is re-estimated from the
//! second quarter of burn-in draws. Both are frozen afterwards.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bundle::{streams, Seed};
use crate::error::{Error, Result};
use crate::linalg::cholesky;

pub trait LogTarget: Sync {
    fn dim(&self) -> usize;
    /// Unnormalised log density; `-inf` outside the support.
    fn log_density(&self, x: &[f64]) -> f64;
}

/// Acceptance band outside of which a chain is flagged as poorly mixed.
pub const ACCEPTANCE_BAND: (f64, f64) = (0.1, 0.6);

#[derive(Debug, Clone, PartialEq)]
pub struct MhConfig {
    /// Retained draws.
    pub iterations: usize,
    pub burnin: usize,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    pub seed: Seed,
    pub target_accept: f64,
}

impl MhConfig {
    pub fn new(iterations: usize, burnin: usize, seed: Seed) -> Self {
        MhConfig {
            iterations,
            burnin,
            thin: 1,
            seed,
            target_accept: 0.234,
        }
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_seed(mut self, seed: Seed) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.iterations < 2 {
            return Err(Error::InvalidArgument(
                "at least 2 iterations are required".into(),
            ));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument(
                "thinning interval must be at least 1".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "target acceptance {} outside (0, 1)",
                self.target_accept
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MhChain {
    dim: usize,
    /// Draw-major `T × d` values.
    draws: Vec<f64>,
    /// Post-burn-in acceptance rate.
    pub acceptance_rate: f64,
    pub step_scale: f64,
}

impl MhChain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.draws.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draw(&self, t: usize) -> &[f64] {
        &self.draws[t * self.dim..(t + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.draws
    }

    pub fn into_draws(self) -> Vec<f64> {
        self.draws
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.draws
            .iter()
            .skip(i)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|i| self.column(i).iter().sum::<f64>() / n)
            .collect()
    }

    pub fn sd(&self) -> Vec<f64> {
        let mean = self.mean();
        let n = self.len() as f64;
        (0..self.dim)
            .map(|i| {
                let ss: f64 = self.column(i).iter().map(|v| (v - mean[i]).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            })
            .collect()
    }

    /// Message when post-burn-in acceptance is outside [`ACCEPTANCE_BAND`].
    pub fn convergence_warning(&self) -> Option<String> {
        let (lo, hi) = ACCEPTANCE_BAND;
        (!(lo..=hi).contains(&self.acceptance_rate)).then(|| {
            format!(
                "acceptance rate {:.3} outside [{lo}, {hi}]; chain may not have converged",
                self.acceptance_rate
            )
        })
    }
}

fn empirical_covariance(draws: &[f64], dim: usize) -> DMatrix<f64> {
    let n = draws.len() / dim;
    let mut mean = DVector::<f64>::zeros(dim);
    for row in draws.chunks_exact(dim) {
        mean += DVector::from_column_slice(row);
    }
    mean /= n as f64;
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for row in draws.chunks_exact(dim) {
        let dev = DVector::from_column_slice(row) - &mean;
        cov.ger(1.0, &dev, &dev, 1.0);
    }
    cov / (n as f64 - 1.0)
}

/// Runs the chain from `start` with initial proposal covariance `proposal`.
pub fn random_walk_metropolis<T: LogTarget + ?Sized>(
    target: &T,
    start: &[f64],
    proposal: &DMatrix<f64>,
    config: &MhConfig,
) -> Result<MhChain> {
    config.validate()?;
    let d = target.dim();
    if start.len() != d {
        return Err(Error::dims("chain start", d, start.len()));
    }
    let mut current = start.to_vec();
    let mut current_lp = target.log_density(&current);
    if !current_lp.is_finite() {
        return Err(Error::InvalidArgument(
            "chain start has zero density".into(),
        ));
    }
    let mut factor = cholesky(proposal.clone(), "proposal covariance")?.l();
    let default_log_scale = (2.38 / (d as f64).sqrt()).ln();
    let mut log_scale = default_log_scale;
    let mut rng = config.seed.rng(streams::CHAIN);

    let shape_from = config.burnin / 4;
    let shape_at = config.burnin / 2;
    let mut warm = Vec::new();
    let mut adapt_step = 0usize;

    let total = config.burnin + config.iterations * config.thin;
    let mut draws = Vec::with_capacity(config.iterations * d);
    let mut accepted = 0usize;
    let mut proposal_point = vec![0.0; d];
    let mut z = DVector::<f64>::zeros(d);

    for it in 0..total {
        let in_burnin = it < config.burnin;
        if in_burnin && it == shape_at && warm.len() >= 10 * d * d {
            let cov = empirical_covariance(&warm, d);
            if let Ok(chol) = cholesky(cov, "warm-up covariance") {
                factor = chol.l();
                log_scale = default_log_scale;
                adapt_step = 0;
            }
        }
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let step = &factor * &z;
        let scale = log_scale.exp();
        for ((p, c), s) in proposal_point.iter_mut().zip(&current).zip(step.iter()) {
            *p = c + scale * s;
        }
        let lp = target.log_density(&proposal_point);
        let log_ratio = lp - current_lp;
        let u: f64 = rng.random();
        let accept = lp.is_finite() && (log_ratio >= 0.0 || u.ln() < log_ratio);
        if accept {
            current.copy_from_slice(&proposal_point);
            current_lp = lp;
        }
        if in_burnin {
            adapt_step += 1;
            let alpha = if lp.is_finite() {
                log_ratio.min(0.0).exp()
            } else {
                0.0
            };
            log_scale += (alpha - config.target_accept) / (adapt_step as f64).powf(0.6);
            if it >= shape_from && it < shape_at {
                warm.extend_from_slice(&current);
            }
        } else {
            accepted += usize::from(accept);
            if (it - config.burnin + 1).is_multiple_of(config.thin) {
                draws.extend_from_slice(&current);
            }
        }
    }
    Ok(MhChain {
        dim: d,
        draws,
        acceptance_rate: accepted as f64 / (config.iterations * config.thin) as f64,
        step_scale: log_scale.exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Normal2 {
        mean: [f64; 2],
        sd: [f64; 2],
    }

    impl LogTarget for Normal2 {
        fn dim(&self) -> usize {
            2
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            -0.5 * x
                .iter()
                .zip(&self.mean)
                .zip(&self.sd)
                .map(|((x, m), s)| ((x - m) / s).powi(2))
                .sum::<f64>()
        }
    }

    struct Shifted<'a, T>(&'a T, f64);

    impl<T: LogTarget> LogTarget for Shifted<'_, T> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn log_density(&self, x: &[f64]) -> f64 {
            self.0.log_density(x) + self.1
        }
    }

    fn target() -> Normal2 {
        Normal2 {
            mean: [1.0, -2.0],
            sd: [0.5, 3.0],
        }
    }

    #[test]
    fn recovers_gaussian_moments() {
        let t = target();
        let cfg = MhConfig::new(20_000, 2_000, Seed(1)).with_thin(2);
        let chain =
            random_walk_metropolis(&t, &[0.0, 0.0], &DMatrix::identity(2, 2), &cfg).unwrap();
        assert_eq!(chain.len(), 20_000);
        let mean = chain.mean();
        let sd = chain.sd();
        assert!((mean[0] - 1.0).abs() < 0.05, "{mean:?}");
        assert!((mean[1] + 2.0).abs() < 0.3, "{mean:?}");
        assert!((sd[0] / 0.5 - 1.0).abs() < 0.1, "{sd:?}");
        assert!((sd[1] / 3.0 - 1.0).abs() < 0.1, "{sd:?}");
        assert!(
            chain.convergence_warning().is_none(),
            "{}",
            chain.acceptance_rate
        );
    }

    #[test]
    fn seed_determinism() {
        let t = target();
        let cfg = MhConfig::new(500, 100, Seed(9));
        let a = random_walk_metropolis(&t, &[0.0, 0.0], &DMatrix::identity(2, 2), &cfg).unwrap();
        let b = random_walk_metropolis(&t, &[0.0, 0.0], &DMatrix::identity(2, 2), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_offsets_do_not_change_decisions() {
        let t = target();
        let shifted = Shifted(&t, 0.125);
        let cfg = MhConfig::new(3000, 300, Seed(4));
        let a = random_walk_metropolis(&t, &[0.0, 0.0], &DMatrix::identity(2, 2), &cfg).unwrap();
        let b =
            random_walk_metropolis(&shifted, &[0.0, 0.0], &DMatrix::identity(2, 2), &cfg).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn flags_poor_acceptance() {
        let chain = MhChain {
            dim: 1,
            draws: vec![0.0, 0.0],
            acceptance_rate: 0.02,
            step_scale: 1.0,
        };
        assert!(chain.convergence_warning().is_some());
    }

    #[test]
    fn rejects_bad_configuration() {
        let t = target();
        let id = DMatrix::identity(2, 2);
        assert!(
            random_walk_metropolis(&t, &[0.0, 0.0], &id, &MhConfig::new(1, 0, Seed(0))).is_err()
        );
        assert!(random_walk_metropolis(&t, &[0.0], &id, &MhConfig::new(10, 0, Seed(0))).is_err());
        let cfg = MhConfig::new(10, 0, Seed(0)).with_thin(0);
        assert!(random_walk_metropolis(&t, &[0.0, 0.0], &id, &cfg).is_err());
    }
}
