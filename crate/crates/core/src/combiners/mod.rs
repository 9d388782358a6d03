//! The four subposterior combination methods.

mod consensus;
mod dpe;
mod summary;

pub use consensus::{consensus_covariance, consensus_independent, sample_average};
pub use dpe::{
    accept, semiparametric_dpe, theta_bar_from_indices, BandwidthSchedule, DpeChainState,
    DpeConfig, DpeSampler,
};
pub use summary::{
    compute_machine_summaries, compute_machine_summary, compute_pooled_summary, MachineSummary,
    PooledSummary,
};
