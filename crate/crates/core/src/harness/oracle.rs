//! Exact products of Gaussian densities, and bundles drawn from known
//! Gaussian subposteriors.

use nalgebra::{DMatrix, DVector};

use crate::bundle::{streams, Seed, SubposteriorBundle};
use crate::error::{Error, Result};
use crate::linalg::Gaussian;

/// Mean and covariance of the normalised product `∏_m N(μ_m, Σ_m)`:
/// `Σ* = (Σ_m Σ_m⁻¹)⁻¹`, `μ* = Σ* Σ_m Σ_m⁻¹ μ_m`.
///
/// Uses plain LU inversion, independent of the regularised route taken by
/// the combiners.
pub fn gaussian_product_oracle(
    means: &[DVector<f64>],
    covs: &[DMatrix<f64>],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if means.is_empty() || means.len() != covs.len() {
        return Err(Error::dims("oracle inputs", means.len(), covs.len()));
    }
    let d = means[0].len();
    let mut precision = DMatrix::<f64>::zeros(d, d);
    let mut shift = DVector::<f64>::zeros(d);
    for (mean, cov) in means.iter().zip(covs) {
        if mean.len() != d || cov.nrows() != d || cov.ncols() != d {
            return Err(Error::dims("oracle component", d, mean.len()));
        }
        if cov.clone().cholesky().is_none() {
            return Err(Error::SingularCovariance(
                "oracle covariance is not positive definite".into(),
            ));
        }
        let inv = cov
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularCovariance("oracle covariance".into()))?;
        shift += &inv * mean;
        precision += inv;
    }
    let cov = precision
        .try_inverse()
        .ok_or_else(|| Error::SingularCovariance("oracle precision sum".into()))?;
    let mean = &cov * shift;
    Ok((mean, cov))
}

/// `T` i.i.d. draws from each `N(μ_m, Σ_m)`, machines drawn in order from
/// one stream.
pub fn simulate_gaussian_bundle(
    means: &[DVector<f64>],
    covs: &[DMatrix<f64>],
    draws: usize,
    seed: Seed,
) -> Result<SubposteriorBundle> {
    if means.is_empty() || means.len() != covs.len() {
        return Err(Error::dims(
            "gaussian bundle inputs",
            means.len(),
            covs.len(),
        ));
    }
    let d = means[0].len();
    let mut values = Vec::with_capacity(d * draws * means.len());
    let mut rng = seed.rng(streams::SIMULATE);
    for (mean, cov) in means.iter().zip(covs) {
        let g = Gaussian::new(mean.clone(), cov.clone())?;
        for _ in 0..draws {
            values.extend(g.sample(&mut rng).iter());
        }
    }
    SubposteriorBundle::new(values, d, draws, means.len())
}
