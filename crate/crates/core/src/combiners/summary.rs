//! Per-machine and pooled Gaussian moment estimates.

use nalgebra::{DMatrix, DVector};

use crate::bundle::SubposteriorBundle;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, RegularizedCovariance};

/// Sample mean and unbiased (divisor `T − 1`) sample covariance of one
/// machine's draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineSummary {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl MachineSummary {
    pub fn variances(&self) -> DVector<f64> {
        self.covariance.diagonal()
    }

    /// First parameter with exactly zero sample variance.
    pub fn degenerate_parameter(&self) -> Option<usize> {
        self.covariance.diagonal().iter().position(|&v| v == 0.0)
    }
}

/// Moments of one machine's chain.
///
/// Values are centred on the first draw before accumulating, so a constant
/// chain yields a variance of exactly zero.
pub fn compute_machine_summary(
    bundle: &SubposteriorBundle,
    machine: usize,
) -> Result<MachineSummary> {
    if machine >= bundle.machines() {
        return Err(Error::InvalidArgument(format!(
            "machine index {machine} out of range for {} machines",
            bundle.machines()
        )));
    }
    let d = bundle.dim();
    let t_count = bundle.draws();
    let origin = bundle.draw(machine, 0).to_vec();
    let mut shifted_sum = vec![0.0; d];
    for t in 0..t_count {
        for (acc, (x, o)) in shifted_sum
            .iter_mut()
            .zip(bundle.draw(machine, t).iter().zip(&origin))
        {
            *acc += x - o;
        }
    }
    let shifted_mean: Vec<f64> = shifted_sum.iter().map(|s| s / t_count as f64).collect();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut dev = vec![0.0; d];
    for t in 0..t_count {
        for (k, (x, o)) in bundle.draw(machine, t).iter().zip(&origin).enumerate() {
            dev[k] = (x - o) - shifted_mean[k];
        }
        for r in 0..d {
            for c in 0..=r {
                cov[(r, c)] += dev[r] * dev[c];
            }
        }
    }
    let denom = (t_count - 1) as f64;
    for r in 0..d {
        for c in 0..=r {
            let v = cov[(r, c)] / denom;
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    let mean = DVector::from_iterator(d, origin.iter().zip(&shifted_mean).map(|(o, s)| o + s));
    Ok(MachineSummary {
        mean,
        covariance: cov,
    })
}

pub fn compute_machine_summaries(bundle: &SubposteriorBundle) -> Result<Vec<MachineSummary>> {
    (0..bundle.machines())
        .map(|m| compute_machine_summary(bundle, m))
        .collect()
}

/// Precision-weighted pool of the machine Gaussians.
#[derive(Debug, Clone)]
pub struct PooledSummary {
    pub pooled_mean: DVector<f64>,
    pub pooled_covariance: DMatrix<f64>,
    /// Inverse of `pooled_covariance`.
    pub pooled_precision: DMatrix<f64>,
}

/// `Σ_M = (Σ_m Σ_m⁻¹)⁻¹`, `μ_M = Σ_M Σ_m Σ_m⁻¹ μ_m`, inverting through the
/// eigenvalue-floored route of [`RegularizedCovariance`].
pub fn compute_pooled_summary(summaries: &[MachineSummary]) -> Result<PooledSummary> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidArgument("no machine summaries".into()))?;
    let d = first.mean.len();
    let mut precision_sum = DMatrix::<f64>::zeros(d, d);
    let mut weighted_means = DVector::<f64>::zeros(d);
    for s in summaries {
        if s.mean.len() != d {
            return Err(Error::dims("machine summary", d, s.mean.len()));
        }
        let precision = RegularizedCovariance::new(&s.covariance)?.inverse();
        weighted_means += &precision * &s.mean;
        precision_sum += precision;
    }
    let pooled =
        RegularizedCovariance::new(&RegularizedCovariance::new(&precision_sum)?.inverse())?;
    let pooled_covariance = pooled.matrix();
    let pooled_precision = pooled.inverse();
    let pooled_mean = &pooled_covariance * weighted_means;
    Ok(PooledSummary {
        pooled_mean,
        pooled_covariance: symmetrize(pooled_covariance),
        pooled_precision,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle_1d(machines: &[&[f64]]) -> SubposteriorBundle {
        let data: Vec<Vec<Vec<f64>>> = machines
            .iter()
            .map(|m| m.iter().map(|&v| vec![v]).collect())
            .collect();
        SubposteriorBundle::from_machines(&data).unwrap()
    }

    #[test]
    fn two_point_chain() {
        let s = compute_machine_summary(&bundle_1d(&[&[0.0, 2.0]]), 0).unwrap();
        assert_eq!(s.mean[0], 1.0);
        assert_eq!(s.covariance[(0, 0)], 2.0);
        assert_eq!(s.degenerate_parameter(), None);
    }

    #[test]
    fn constant_chain_has_exactly_zero_variance() {
        let s = compute_machine_summary(&bundle_1d(&[&[5.0, 5.0, 5.0]]), 0).unwrap();
        assert_eq!(s.mean[0], 5.0);
        assert_eq!(s.covariance[(0, 0)], 0.0);
        assert_eq!(s.degenerate_parameter(), Some(0));
        let s = compute_machine_summary(&bundle_1d(&[&[0.1, 0.1, 0.1]]), 0).unwrap();
        assert_eq!(s.covariance[(0, 0)], 0.0);
    }

    #[test]
    fn bivariate_two_point_chain() {
        let b = SubposteriorBundle::from_machines(&[vec![vec![0.0, 0.0], vec![2.0, 2.0]]]).unwrap();
        let s = compute_machine_summary(&b, 0).unwrap();
        assert_eq!(
            s.covariance,
            DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0])
        );
    }

    #[test]
    fn pooled_scalar_precision_arithmetic() {
        let summaries = vec![
            MachineSummary {
                mean: DVector::from_vec(vec![0.0]),
                covariance: DMatrix::from_element(1, 1, 2.0),
            },
            MachineSummary {
                mean: DVector::from_vec(vec![4.0]),
                covariance: DMatrix::from_element(1, 1, 2.0),
            },
        ];
        let p = compute_pooled_summary(&summaries).unwrap();
        assert!((p.pooled_covariance[(0, 0)] - 1.0).abs() < 1e-14);
        assert!((p.pooled_mean[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_machine_pool_is_the_machine() {
        let s = MachineSummary {
            mean: DVector::from_vec(vec![1.0, -2.0]),
            covariance: DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.7]),
        };
        let p = compute_pooled_summary(std::slice::from_ref(&s)).unwrap();
        assert!((p.pooled_mean - &s.mean).abs().max() < 1e-12);
        assert!((p.pooled_covariance - &s.covariance).abs().max() < 1e-12);
    }
}
