//! Small dense linear-algebra helpers on top of `nalgebra`.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative eigenvalue floor applied before any covariance inversion.
pub const EIGEN_FLOOR: f64 = 1e-10;

/// A covariance matrix made safely invertible.
///
/// The matrix is symmetrized, eigen-decomposed, and every eigenvalue is
/// floored at `EIGEN_FLOOR * trace / d`.
#[derive(Debug, Clone)]
pub struct RegularizedCovariance {
    eigenvectors: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl RegularizedCovariance {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let d = cov.nrows();
        if d == 0 || cov.ncols() != d {
            return Err(Error::dims("covariance (square)", d, cov.ncols()));
        }
        let sym = (cov + cov.transpose()) * 0.5;
        let scale = sym.trace() / d as f64;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::SingularCovariance(format!(
                "mean eigenvalue {scale} is not positive"
            )));
        }
        let floor = EIGEN_FLOOR * scale;
        let SymmetricEigen {
            eigenvectors,
            mut eigenvalues,
        } = SymmetricEigen::new(sym);
        for v in eigenvalues.iter_mut() {
            if !v.is_finite() {
                return Err(Error::SingularCovariance("non-finite eigenvalue".into()));
            }
            if *v < floor {
                *v = floor;
            }
        }
        Ok(RegularizedCovariance {
            eigenvectors,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The floored matrix `V Λ Vᵀ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.reconstruct(|l| l)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.reconstruct(|l| 1.0 / l)
    }

    fn reconstruct(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| {
            v[(r, c)] * f(self.eigenvalues[c])
        });
        let out = scaled * v.transpose();
        symmetrize(out)
    }
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m)
        .ok_or_else(|| Error::SingularCovariance(format!("{what} is not positive definite")))
}

/// Multivariate normal with a Cholesky-factored covariance.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::dims("gaussian covariance", mean.len(), cov.nrows()));
        }
        let chol = cholesky(cov, "gaussian covariance")?;
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let log_norm = -0.5 * (mean.len() as f64 * (2.0 * PI).ln() + log_det);
        Ok(Gaussian {
            mean,
            chol,
            log_norm,
        })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let diff =
            DVector::from_iterator(x.len(), x.iter().zip(self.mean.iter()).map(|(a, b)| a - b));
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + self.chol.l() * z
    }
}

/// Log-density of a normal with diagonal covariance `diag(variances)`.
#[inline]
pub fn diagonal_log_density(x: &[f64], mean: &[f64], variances: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((xi, mi), vi) in x.iter().zip(mean).zip(variances) {
        let r = xi - mi;
        acc += r * r / vi + (2.0 * PI * vi).ln();
    }
    -0.5 * acc
}
