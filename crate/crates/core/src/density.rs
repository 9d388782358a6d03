//! Gaussian kernel density estimates and the relative L2 distance between a
//! full-data posterior and a combined approximation.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of grid points used by [`relative_l2_distance`].
pub const GRID_POINTS: usize = 512;
/// Grid padding beyond the sample range, in units of the larger bandwidth.
pub const GRID_PADDING: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
}

impl DensityEstimate {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }
}

pub(crate) fn mean_and_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let origin = samples[0];
    let shifted_mean = samples.iter().map(|x| x - origin).sum::<f64>() / n;
    let ss: f64 = samples
        .iter()
        .map(|x| {
            let r = (x - origin) - shifted_mean;
            r * r
        })
        .sum();
    (origin + shifted_mean, (ss / (n - 1.0)).sqrt())
}

/// Silverman's rule for a sample count and standard deviation.
pub fn silverman_from_sd(sd: f64, count: usize, dim: usize) -> f64 {
    let d = dim as f64;
    (4.0 / (d + 2.0)).powf(1.0 / (d + 4.0)) * (count as f64).powf(-1.0 / (d + 4.0)) * sd
}

/// `(4/(d+2))^(1/(d+4)) · T^(−1/(d+4)) · σ̂` with `σ̂` the sample standard
/// deviation (divisor `T − 1`).
pub fn silverman_bandwidth(samples: &[f64], dim: usize) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(
            "at least two samples are required".into(),
        ));
    }
    let (_, sd) = mean_and_sd(samples);
    if sd == 0.0 || !sd.is_finite() {
        return Err(Error::ZeroSpread);
    }
    Ok(silverman_from_sd(sd, samples.len(), dim))
}

/// Gaussian-kernel density estimate evaluated on `grid`.
pub fn kde_1d(samples: &[f64], grid: &[f64], bandwidth: f64) -> Result<DensityEstimate> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::NonPositiveBandwidth(bandwidth));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::InvalidArgument(
            "grid must be strictly increasing".into(),
        ));
    }
    let inv_h = 1.0 / bandwidth;
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * PI).sqrt());
    let values = grid
        .iter()
        .map(|&g| {
            let s: f64 = samples
                .iter()
                .map(|&x| {
                    let u = (g - x) * inv_h;
                    (-0.5 * u * u).exp()
                })
                .sum();
            s * norm
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        bandwidth,
    })
}

pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Gridded densities and norms behind one relative L2 distance.
#[derive(Debug, Clone)]
pub struct L2Comparison {
    pub full: DensityEstimate,
    pub combined: DensityEstimate,
    /// `‖p̂_full − p̂_combined‖₂`
    pub distance: f64,
    pub full_norm: f64,
    pub combined_norm: f64,
}

impl L2Comparison {
    pub fn relative(&self) -> f64 {
        self.distance / self.full_norm
    }
}

pub fn compare_densities(full: &[f64], combined: &[f64]) -> Result<L2Comparison> {
    let h_full = silverman_bandwidth(full, 1)?;
    let h_comb = silverman_bandwidth(combined, 1)?;
    let h_max = h_full.max(h_comb);
    let (lo, hi) = full
        .iter()
        .chain(combined)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let (lo, hi) = (lo - GRID_PADDING * h_max, hi + GRID_PADDING * h_max);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|g| lo + step * g as f64).collect();
    let p = kde_1d(full, &grid, h_full)?;
    let q = kde_1d(combined, &grid, h_comb)?;
    let sq_diff: Vec<f64> = p
        .values
        .iter()
        .zip(&q.values)
        .map(|(a, b)| (a - b).powi(2))
        .collect();
    let sq_p: Vec<f64> = p.values.iter().map(|a| a * a).collect();
    let sq_q: Vec<f64> = q.values.iter().map(|a| a * a).collect();
    Ok(L2Comparison {
        distance: trapezoid(&grid, &sq_diff).sqrt(),
        full_norm: trapezoid(&grid, &sq_p).sqrt(),
        combined_norm: trapezoid(&grid, &sq_q).sqrt(),
        full: p,
        combined: q,
    })
}

/// `‖p̂_full − p̂_combined‖₂ / ‖p̂_full‖₂` on a shared 512-point grid, each
/// density using its own Silverman bandwidth.
pub fn relative_l2_distance(full: &[f64], combined: &[f64]) -> Result<f64> {
    Ok(compare_densities(full, combined)?.relative())
}
