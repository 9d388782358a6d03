//! Sample containers shared by every combiner.
//!
//! A [`SubposteriorBundle`] holds `M` machines' worth of `T` draws of a
//! `d`-dimensional parameter. The flat layout matches a column-major
//! `(d, T, M)` array: the parameter index varies fastest, then the draw,
//! then the machine, so each draw `θ_t^m` is a contiguous `d`-slice.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed for every randomized operation. Equal seeds and inputs give
/// bit-identical outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

impl Seed {
    /// Generator for one named purpose. Distinct streams under one seed are
    /// statistically independent.
    pub fn rng(self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    pub fn offset(self, by: u64) -> Seed {
        Seed(self.0.wrapping_add(by))
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

pub(crate) mod streams {
    pub const SHUFFLE: u64 = 1;
    pub const DPE: u64 = 2;
    pub const SIMULATE: u64 = 3;
    pub const PARTITION: u64 = 4;
    pub const CHAIN: u64 = 5;
}

/// A machine/parameter pair whose draws are all identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateComponent {
    pub machine: usize,
    pub parameter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubposteriorBundle {
    dim: usize,
    draws: usize,
    machines: usize,
    values: Vec<f64>,
    degenerate: Vec<DegenerateComponent>,
}

impl SubposteriorBundle {
    /// Validates a flat `(d, T, M)` column-major array.
    ///
    /// Zero-variance components are not an error here; they are recorded and
    /// exposed through [`degenerate_components`](Self::degenerate_components)
    /// so that only the methods dividing by the variance reject them.
    pub fn new(values: Vec<f64>, dim: usize, draws: usize, machines: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "parameter count must be at least 1".into(),
            ));
        }
        if draws < 2 {
            return Err(Error::InvalidArgument(
                "at least 2 draws per machine are required".into(),
            ));
        }
        if machines == 0 {
            return Err(Error::InvalidArgument(
                "machine count must be at least 1".into(),
            ));
        }
        let expected = dim * draws * machines;
        if values.len() != expected {
            return Err(Error::dims("bundle values (d*T*M)", expected, values.len()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                parameter: pos % dim,
                draw: (pos / dim) % draws,
                machine: pos / (dim * draws),
                value: values[pos],
            });
        }
        let mut bundle = SubposteriorBundle {
            dim,
            draws,
            machines,
            values,
            degenerate: Vec::new(),
        };
        bundle.degenerate = bundle.find_degenerate();
        Ok(bundle)
    }

    /// Builds a bundle from one `T × d` draw matrix per machine, each given as
    /// a list of draws.
    pub fn from_machines(machines: &[Vec<Vec<f64>>]) -> Result<Self> {
        let m_count = machines.len();
        let first = machines
            .first()
            .ok_or_else(|| Error::InvalidArgument("no machines supplied".into()))?;
        let draws = first.len();
        let dim = first.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(dim * draws * m_count);
        for (m, chain) in machines.iter().enumerate() {
            if chain.len() != draws {
                return Err(Error::dims(
                    format!("draw count of machine {m}"),
                    draws,
                    chain.len(),
                ));
            }
            for (t, draw) in chain.iter().enumerate() {
                if draw.len() != dim {
                    return Err(Error::dims(
                        format!("parameter count of machine {m}, draw {t}"),
                        dim,
                        draw.len(),
                    ));
                }
                values.extend_from_slice(draw);
            }
        }
        Self::new(values, dim, draws, m_count)
    }

    fn find_degenerate(&self) -> Vec<DegenerateComponent> {
        let mut out = Vec::new();
        for m in 0..self.machines {
            for i in 0..self.dim {
                let first = self.get(i, 0, m);
                if (1..self.draws).all(|t| self.get(i, t, m) == first) {
                    out.push(DegenerateComponent {
                        machine: m,
                        parameter: i,
                    });
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn machines(&self) -> usize {
        self.machines
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, parameter: usize, draw: usize, machine: usize) -> f64 {
        self.values[parameter + self.dim * (draw + self.draws * machine)]
    }

    /// The `d`-vector `θ_t^m`.
    #[inline]
    pub fn draw(&self, machine: usize, draw: usize) -> &[f64] {
        let start = self.dim * (draw + self.draws * machine);
        &self.values[start..start + self.dim]
    }

    /// All of one machine's draws, `T` consecutive `d`-slices.
    pub fn machine(&self, machine: usize) -> &[f64] {
        let len = self.dim * self.draws;
        &self.values[machine * len..(machine + 1) * len]
    }

    pub fn degenerate_components(&self) -> &[DegenerateComponent] {
        &self.degenerate
    }

    pub(crate) fn ensure_no_degenerate(&self) -> Result<()> {
        match self.degenerate.first() {
            Some(c) => Err(Error::DegenerateChain {
                machine: c.machine,
                parameter: c.parameter,
            }),
            None => Ok(()),
        }
    }
}

/// Permutes draw positions independently within each machine. Each draw
/// vector moves as a unit, so per-machine multisets are unchanged.
pub fn shuffle_within_machines(bundle: &SubposteriorBundle, seed: Seed) -> SubposteriorBundle {
    let mut rng = seed.rng(streams::SHUFFLE);
    let (d, t_count) = (bundle.dim, bundle.draws);
    let mut values = Vec::with_capacity(bundle.values.len());
    let mut order: Vec<usize> = (0..t_count).collect();
    for m in 0..bundle.machines {
        for (slot, idx) in order.iter_mut().enumerate() {
            *idx = slot;
        }
        order.shuffle(&mut rng);
        for &t in &order {
            values.extend_from_slice(bundle.draw(m, t));
        }
    }
    debug_assert_eq!(values.len(), d * t_count * bundle.machines);
    SubposteriorBundle {
        dim: d,
        draws: t_count,
        machines: bundle.machines,
        values,
        degenerate: bundle.degenerate.clone(),
    }
}

/// Pooled posterior draws, a `d × T` matrix stored draw by draw.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedSamples {
    dim: usize,
    draws: usize,
    values: Vec<f64>,
}

impl CombinedSamples {
    pub fn new(values: Vec<f64>, dim: usize, draws: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "parameter count must be at least 1".into(),
            ));
        }
        if values.len() != dim * draws {
            return Err(Error::dims(
                "combined samples (d*T)",
                dim * draws,
                values.len(),
            ));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                parameter: pos % dim,
                draw: pos / dim,
                machine: 0,
                value: values[pos],
            });
        }
        Ok(CombinedSamples { dim, draws, values })
    }

    pub(crate) fn from_trusted(values: Vec<f64>, dim: usize, draws: usize) -> Self {
        debug_assert_eq!(values.len(), dim * draws);
        CombinedSamples { dim, draws, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, parameter: usize, draw: usize) -> f64 {
        self.values[parameter + self.dim * draw]
    }

    pub fn draw(&self, draw: usize) -> &[f64] {
        &self.values[draw * self.dim..(draw + 1) * self.dim]
    }

    /// Marginal draws of one parameter.
    pub fn parameter(&self, parameter: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(parameter)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    /// Drops the first `count` draws.
    pub fn discard_leading(&self, count: usize) -> Result<Self> {
        if count >= self.draws {
            return Err(Error::InvalidArgument(format!(
                "cannot discard {count} of {} draws",
                self.draws
            )));
        }
        Ok(CombinedSamples {
            dim: self.dim,
            draws: self.draws - count,
            values: self.values[count * self.dim..].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_machine(bundle: &SubposteriorBundle, m: usize) -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> = (0..bundle.draws())
            .map(|t| bundle.draw(m, t).to_vec())
            .collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows
    }

    #[test]
    fn accepts_well_formed_input() {
        let values: Vec<f64> = (0..12).map(f64::from).collect();
        let b = SubposteriorBundle::new(values, 2, 3, 2).unwrap();
        assert_eq!((b.dim(), b.draws(), b.machines()), (2, 3, 2));
        assert_eq!(b.draw(1, 2), &[10.0, 11.0]);
        assert_eq!(b.get(1, 0, 1), 7.0);
    }

    #[test]
    fn rejects_wrong_length() {
        let values: Vec<f64> = (0..11).map(f64::from).collect();
        let err = SubposteriorBundle::new(values, 2, 3, 2).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 12,
                found: 11,
                ..
            }
        ));
    }

    #[test]
    fn reports_first_non_finite_index() {
        let mut values: Vec<f64> = (0..12).map(f64::from).collect();
        values[9] = f64::NAN;
        values[11] = f64::INFINITY;
        match SubposteriorBundle::new(values, 2, 3, 2).unwrap_err() {
            Error::NonFiniteValue {
                parameter,
                draw,
                machine,
                ..
            } => {
                assert_eq!((parameter, draw, machine), (1, 1, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flags_constant_components() {
        let machines = vec![
            vec![vec![5.0, 1.0], vec![5.0, 2.0], vec![5.0, 3.0]],
            vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]],
        ];
        let b = SubposteriorBundle::from_machines(&machines).unwrap();
        assert_eq!(
            b.degenerate_components(),
            &[DegenerateComponent {
                machine: 0,
                parameter: 0
            }]
        );
        assert!(matches!(
            b.ensure_no_degenerate(),
            Err(Error::DegenerateChain {
                machine: 0,
                parameter: 0
            })
        ));
    }

    #[test]
    fn shuffle_of_two_draws_is_a_permutation() {
        let b = SubposteriorBundle::from_machines(&[vec![vec![1.0, 2.0], vec![3.0, 4.0]]]).unwrap();
        let s = shuffle_within_machines(&b, Seed(3));
        let out = s.as_slice();
        assert!(out == [1.0, 2.0, 3.0, 4.0] || out == [3.0, 4.0, 1.0, 2.0]);
    }

    #[test]
    fn shuffle_preserves_per_machine_multisets() {
        let values: Vec<f64> = (0..2 * 5 * 3)
            .map(|k| ((k * 37) % 11) as f64 + 0.1 * k as f64)
            .collect();
        let b = SubposteriorBundle::new(values, 2, 5, 3).unwrap();
        let s = shuffle_within_machines(&b, Seed(99));
        for m in 0..3 {
            assert_eq!(sorted_machine(&b, m), sorted_machine(&s, m));
        }
        assert_eq!(s, shuffle_within_machines(&b, Seed(99)));
    }

    #[test]
    fn distinct_seeds_usually_give_distinct_orders() {
        let values: Vec<f64> = (0..40).map(f64::from).collect();
        let b = SubposteriorBundle::new(values, 1, 40, 1).unwrap();
        let distinct = (0..10)
            .map(|k| {
                shuffle_within_machines(&b, Seed(k))
                    .into_values()
                    .into_iter()
                    .map(f64::to_bits)
                    .collect::<Vec<_>>()
            })
            .collect::<std::collections::HashSet<_>>();
        // 40! orderings; a collision among ten draws would be astonishing.
        assert!(distinct.len() >= 9);
    }

    #[test]
    fn combined_marginals_and_discard() {
        let c = CombinedSamples::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, 3).unwrap();
        assert_eq!(c.parameter(1), vec![2.0, 4.0, 6.0]);
        let tail = c.discard_leading(1).unwrap();
        assert_eq!(tail.draws(), 2);
        assert_eq!(tail.draw(0), &[3.0, 4.0]);
        assert!(c.discard_leading(3).is_err());
    }
}
