//! Semiparametric density product estimator.
//!
//! Each subposterior is modelled as its Gaussian fit times a kernel
//! correction. The product over machines is a mixture of `T^M` Gaussian
//! components indexed by `t• = (t_1, …, t_M)`; this module samples from it
//! with an independent Metropolis-within-Gibbs chain over `t•`, emitting one
//! draw from the current component per iteration.
//!
//! The kernel covariance is `H = diag(h_1², …, h_d²)`. With annealing the
//! bandwidths shrink as `h_i(t) = bandw_i · t^(−1/(4+d))`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bundle::{streams, CombinedSamples, Seed, SubposteriorBundle};
use crate::combiners::summary::{compute_machine_summaries, compute_pooled_summary, PooledSummary};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, diagonal_log_density, Gaussian, RegularizedCovariance};

#[derive(Debug, Clone, PartialEq)]
pub struct DpeConfig {
    /// Starting bandwidth per parameter.
    pub bandw: Vec<f64>,
    pub anneal: bool,
    pub seed: Seed,
}

impl DpeConfig {
    /// Unit bandwidths with annealing.
    pub fn new(dim: usize, seed: Seed) -> Self {
        DpeConfig {
            bandw: vec![1.0; dim],
            anneal: true,
            seed,
        }
    }

    pub fn with_bandwidths(mut self, bandw: Vec<f64>) -> Self {
        self.bandw = bandw;
        self
    }

    pub fn with_anneal(mut self, anneal: bool) -> Self {
        self.anneal = anneal;
        self
    }
}

#[derive(Debug, Clone)]
pub struct BandwidthSchedule {
    base: Vec<f64>,
    exponent: Option<f64>,
}

impl BandwidthSchedule {
    pub fn new(base: Vec<f64>, anneal: bool) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::InvalidArgument("empty bandwidth vector".into()));
        }
        if let Some(&bad) = base.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::NonPositiveBandwidth(bad));
        }
        let d = base.len() as f64;
        Ok(BandwidthSchedule {
            base,
            exponent: anneal.then(|| -1.0 / (4.0 + d)),
        })
    }

    /// Bandwidths at 1-based iteration `t`.
    pub fn at(&self, t: usize) -> Vec<f64> {
        match self.exponent {
            Some(e) => {
                let factor = (t.max(1) as f64).powf(e);
                self.base.iter().map(|h| h * factor).collect()
            }
            None => self.base.clone(),
        }
    }

    pub fn is_annealed(&self) -> bool {
        self.exponent.is_some()
    }
}

/// Current mixture component and its derived quantities.
#[derive(Debug, Clone)]
pub struct DpeChainState {
    /// Selected draw per machine, 0-based.
    pub indices: Vec<usize>,
    /// Mean of the selected machine draws.
    pub theta_bar: Vec<f64>,
    /// Log kernel agreement term, `Σ_m log N(θ_{t_m}^m | θ̄, H)`.
    pub log_w: f64,
    /// Log mixture weight of the component.
    pub log_weight: f64,
    pub component_mean: Vec<f64>,
    pub component_cov: DMatrix<f64>,
    pub bandwidth: Vec<f64>,
}

/// Quantities that depend on the bandwidth only.
struct Geometry {
    bandwidth: Vec<f64>,
    kernel_var: Vec<f64>,
    /// `θ̄ ~ N(μ_M, Σ_M + H/M)`.
    theta_bar_density: Gaussian,
    /// Cholesky factor of the component precision `M H⁻¹ + Σ_M⁻¹`.
    component_precision: Cholesky<f64, Dyn>,
}

impl Geometry {
    fn new(bandwidth: Vec<f64>, pooled: &PooledSummary, machines: usize) -> Result<Self> {
        let d = bandwidth.len();
        let m = machines as f64;
        let kernel_var: Vec<f64> = bandwidth.iter().map(|h| h * h).collect();
        let mut marginal = pooled.pooled_covariance.clone();
        let mut precision = pooled.pooled_precision.clone();
        for i in 0..d {
            marginal[(i, i)] += kernel_var[i] / m;
            precision[(i, i)] += m / kernel_var[i];
        }
        Ok(Geometry {
            theta_bar_density: Gaussian::new(pooled.pooled_mean.clone(), marginal)?,
            component_precision: cholesky(precision, "mixture component precision")?,
            bandwidth,
            kernel_var,
        })
    }
}

/// Step-by-step sampler over mixture components.
pub struct DpeSampler<'a> {
    bundle: &'a SubposteriorBundle,
    schedule: BandwidthSchedule,
    pooled: PooledSummary,
    /// `log N(θ_t^m | μ_m, Σ_m)` at index `m * T + t`.
    log_fit: Vec<f64>,
    /// `Σ_M⁻¹ μ_M`, fixed.
    pooled_shift: DVector<f64>,
    rng: ChaCha8Rng,
    indices: Vec<usize>,
    theta_bar: Vec<f64>,
    iteration: usize,
    geometry: Option<Geometry>,
    accepted: usize,
}

impl<'a> DpeSampler<'a> {
    pub fn new(bundle: &'a SubposteriorBundle, config: &DpeConfig) -> Result<Self> {
        let d = bundle.dim();
        if config.bandw.len() != d {
            return Err(Error::dims("bandwidth vector", d, config.bandw.len()));
        }
        let schedule = BandwidthSchedule::new(config.bandw.clone(), config.anneal)?;
        let summaries = compute_machine_summaries(bundle)?;
        let pooled = compute_pooled_summary(&summaries)?;
        let (t_count, m_count) = (bundle.draws(), bundle.machines());
        let mut log_fit = Vec::with_capacity(t_count * m_count);
        for (m, s) in summaries.iter().enumerate() {
            let cov = RegularizedCovariance::new(&s.covariance)?.matrix();
            let fit = Gaussian::new(s.mean.clone(), cov)?;
            log_fit.extend((0..t_count).map(|t| fit.log_density(bundle.draw(m, t))));
        }
        let pooled_shift = &pooled.pooled_precision * &pooled.pooled_mean;
        let mut rng = config.seed.rng(streams::DPE);
        let indices: Vec<usize> = (0..m_count).map(|_| rng.random_range(0..t_count)).collect();
        let theta_bar = mean_of_selected(bundle, &indices);
        Ok(DpeSampler {
            bundle,
            schedule,
            pooled,
            log_fit,
            pooled_shift,
            rng,
            indices,
            theta_bar,
            iteration: 0,
            geometry: None,
            accepted: 0,
        })
    }

    pub fn pooled(&self) -> &PooledSummary {
        &self.pooled
    }

    /// Iterations completed so far.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.iteration == 0 {
            0.0
        } else {
            self.accepted as f64 / self.iteration as f64
        }
    }

    /// Takes the bandwidth-dependent geometry for iteration `t` out of the
    /// cache, rebuilding it when annealing. Callers put it back.
    fn take_geometry(&mut self, t: usize) -> Result<Geometry> {
        match self.geometry.take() {
            Some(g) if !self.schedule.is_annealed() || g.bandwidth == self.schedule.at(t) => Ok(g),
            _ => Geometry::new(self.schedule.at(t), &self.pooled, self.bundle.machines()),
        }
    }

    /// Returns `(log w, log W)` for the component with the given indices and
    /// selected-draw mean.
    fn log_weight(&self, geom: &Geometry, indices: &[usize], theta_bar: &[f64]) -> (f64, f64) {
        let t_count = self.bundle.draws();
        let mut log_w = 0.0;
        let mut log_fit = 0.0;
        for (m, &t) in indices.iter().enumerate() {
            log_w += diagonal_log_density(self.bundle.draw(m, t), theta_bar, &geom.kernel_var);
            log_fit += self.log_fit[m * t_count + t];
        }
        let log_weight = log_w + geom.theta_bar_density.log_density(theta_bar) - log_fit;
        (log_w, log_weight)
    }

    /// One propose/accept step followed by one draw from the current
    /// component.
    pub fn step(&mut self) -> Result<Vec<f64>> {
        let t = self.iteration + 1;
        let geom = self.take_geometry(t)?;
        let (t_count, m_count) = (self.bundle.draws(), self.bundle.machines());

        let machine = self.rng.random_range(0..m_count);
        let proposed_index = self.rng.random_range(0..t_count);
        let mut proposed = self.indices.clone();
        proposed[machine] = proposed_index;
        let old_draw = self.bundle.draw(machine, self.indices[machine]);
        let new_draw = self.bundle.draw(machine, proposed_index);
        let proposed_bar: Vec<f64> = self
            .theta_bar
            .iter()
            .zip(old_draw.iter().zip(new_draw))
            .map(|(bar, (o, n))| bar + (n - o) / m_count as f64)
            .collect();

        let (_, current) = self.log_weight(&geom, &self.indices, &self.theta_bar);
        let (_, candidate) = self.log_weight(&geom, &proposed, &proposed_bar);
        let u: f64 = self.rng.random();
        if accept(candidate - current, u) {
            self.indices = proposed;
            self.theta_bar = proposed_bar;
            self.accepted += 1;
        }

        let draw = self.sample_component(&geom);
        self.geometry = Some(geom);
        self.iteration = t;
        Ok(draw)
    }

    fn component_mean(&self, geom: &Geometry) -> DVector<f64> {
        let m = self.bundle.machines() as f64;
        let mut rhs = self.pooled_shift.clone();
        for (i, v) in rhs.iter_mut().enumerate() {
            *v += m / geom.kernel_var[i] * self.theta_bar[i];
        }
        geom.component_precision.solve(&rhs)
    }

    fn sample_component(&mut self, geom: &Geometry) -> Vec<f64> {
        let mean = self.component_mean(geom);
        // x = μ + L⁻ᵀ z has covariance (L Lᵀ)⁻¹.
        let z = DVector::from_fn(mean.len(), |_, _| self.rng.sample::<f64, _>(StandardNormal));
        let offset = geom
            .component_precision
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal");
        (mean + offset).iter().copied().collect()
    }

    /// Snapshot of the chain at the bandwidth of the most recent iteration
    /// (or of iteration 1 before any step).
    pub fn state(&mut self) -> Result<DpeChainState> {
        let geom = self.take_geometry(self.iteration.max(1))?;
        let (log_w, log_weight) = self.log_weight(&geom, &self.indices, &self.theta_bar);
        let component_mean = self.component_mean(&geom).iter().copied().collect();
        let state = DpeChainState {
            indices: self.indices.clone(),
            theta_bar: self.theta_bar.clone(),
            log_w,
            log_weight,
            component_mean,
            component_cov: geom.component_precision.inverse(),
            bandwidth: geom.bandwidth.clone(),
        };
        self.geometry = Some(geom);
        Ok(state)
    }
}

fn mean_of_selected(bundle: &SubposteriorBundle, indices: &[usize]) -> Vec<f64> {
    let mut bar = vec![0.0; bundle.dim()];
    for (m, &t) in indices.iter().enumerate() {
        for (acc, x) in bar.iter_mut().zip(bundle.draw(m, t)) {
            *acc += x;
        }
    }
    let m = indices.len() as f64;
    bar.iter_mut().for_each(|v| *v /= m);
    bar
}

/// Re-derives `θ̄` from an index vector.
pub fn theta_bar_from_indices(bundle: &SubposteriorBundle, indices: &[usize]) -> Vec<f64> {
    mean_of_selected(bundle, indices)
}

/// Metropolis test on a log weight difference with uniform draw `u`.
#[inline]
pub fn accept(log_ratio: f64, u: f64) -> bool {
    log_ratio >= 0.0 || u.ln() < log_ratio
}

/// Runs the sampler for `T` iterations and returns its draws.
pub fn semiparametric_dpe(
    bundle: &SubposteriorBundle,
    config: &DpeConfig,
) -> Result<CombinedSamples> {
    let mut sampler = DpeSampler::new(bundle, config)?;
    let (d, t_count) = (bundle.dim(), bundle.draws());
    let mut out = Vec::with_capacity(d * t_count);
    for _ in 0..t_count {
        out.extend(sampler.step()?);
    }
    CombinedSamples::new(out, d, t_count)
}
