//! Combining subposterior MCMC draws from independently sampled data shards
//! into approximate full-data posterior draws.
//!
//! Four combiners are provided: [`sample_average`], [`consensus_independent`],
//! [`consensus_covariance`] and the semiparametric density product estimator
//! [`semiparametric_dpe`]. [`relative_l2_distance`] scores a combined sample
//! against a full-data chain, and [`harness`] generates the test problems.

pub mod bundle;
pub mod cli;
pub mod combiners;
pub mod density;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;

pub use bundle::{shuffle_within_machines, CombinedSamples, Seed, SubposteriorBundle};
pub use combiners::{
    consensus_covariance, consensus_independent, sample_average, semiparametric_dpe, DpeConfig,
};
pub use density::{relative_l2_distance, silverman_bandwidth};
pub use error::{Error, Result};
