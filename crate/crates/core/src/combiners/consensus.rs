//! Per-iteration averaging combiners: plain sample average and the two
//! consensus Monte Carlo weightings.

use nalgebra::{DMatrix, DVector};

use crate::bundle::{CombinedSamples, SubposteriorBundle};
use crate::combiners::summary::compute_machine_summaries;
use crate::error::Result;
use crate::linalg::{cholesky, RegularizedCovariance};

/// `θ_t = (1/M) Σ_m θ_t^m`.
pub fn sample_average(bundle: &SubposteriorBundle) -> CombinedSamples {
    let (d, t_count, m_count) = (bundle.dim(), bundle.draws(), bundle.machines());
    let mut out = vec![0.0; d * t_count];
    for t in 0..t_count {
        let row = &mut out[t * d..(t + 1) * d];
        for m in 0..m_count {
            for (acc, x) in row.iter_mut().zip(bundle.draw(m, t)) {
                *acc += x;
            }
        }
        for v in row.iter_mut() {
            *v /= m_count as f64;
        }
    }
    CombinedSamples::from_trusted(out, d, t_count)
}

/// Componentwise precision-weighted average, `W_mi = 1 / Var_m(θ_i)`.
///
/// Fails with `DegenerateChain` when any machine has a constant component.
pub fn consensus_independent(bundle: &SubposteriorBundle) -> Result<CombinedSamples> {
    bundle.ensure_no_degenerate()?;
    let (d, t_count, m_count) = (bundle.dim(), bundle.draws(), bundle.machines());
    let summaries = compute_machine_summaries(bundle)?;
    // weights[i * M + m]
    let mut weights = vec![0.0; d * m_count];
    for i in 0..d {
        let row = &mut weights[i * m_count..(i + 1) * m_count];
        for (m, w) in row.iter_mut().enumerate() {
            *w = 1.0 / summaries[m].covariance[(i, i)];
        }
        // Equal weights cancel; unit weights make that cancellation exact.
        if row.iter().all(|w| *w == row[0]) {
            row.fill(1.0);
        }
    }
    let totals: Vec<f64> = (0..d)
        .map(|i| weights[i * m_count..(i + 1) * m_count].iter().sum())
        .collect();
    let mut out = vec![0.0; d * t_count];
    for t in 0..t_count {
        let row = &mut out[t * d..(t + 1) * d];
        for m in 0..m_count {
            for (i, (acc, x)) in row.iter_mut().zip(bundle.draw(m, t)).enumerate() {
                *acc += weights[i * m_count + m] * x;
            }
        }
        for (v, total) in row.iter_mut().zip(&totals) {
            *v /= total;
        }
    }
    Ok(CombinedSamples::from_trusted(out, d, t_count))
}

/// Full-covariance weighting, `θ_t = (Σ_m W_m)⁻¹ Σ_m W_m θ_t^m` with
/// `W_m = Σ_m⁻¹`. The final step is a Cholesky solve per draw.
pub fn consensus_covariance(bundle: &SubposteriorBundle) -> Result<CombinedSamples> {
    bundle.ensure_no_degenerate()?;
    let (d, t_count, m_count) = (bundle.dim(), bundle.draws(), bundle.machines());
    if m_count == 1 {
        return Ok(CombinedSamples::from_trusted(
            bundle.as_slice().to_vec(),
            d,
            t_count,
        ));
    }
    let precisions = compute_machine_summaries(bundle)?
        .iter()
        .map(|s| RegularizedCovariance::new(&s.covariance).map(|r| r.inverse()))
        .collect::<Result<Vec<_>>>()?;
    let total = precisions
        .iter()
        .fold(DMatrix::<f64>::zeros(d, d), |acc, w| acc + w);
    let chol = cholesky(total, "total consensus precision")?;
    let mut out = Vec::with_capacity(d * t_count);
    let mut rhs = DVector::<f64>::zeros(d);
    for t in 0..t_count {
        rhs.fill(0.0);
        for (m, w) in precisions.iter().enumerate() {
            rhs.gemv(1.0, w, &DVector::from_column_slice(bundle.draw(m, t)), 1.0);
        }
        chol.solve_mut(&mut rhs);
        out.extend(rhs.iter());
    }
    Ok(CombinedSamples::from_trusted(out, d, t_count))
}
