//! Maximum Doppler spread estimation for comb-pilot OFDM receivers.
//!
//! The crate contains a fading channel simulator, batch correlation-ratio
//! estimators (Frobenius norm and signal-subspace projection), a streaming
//! subspace tracker with MDL rank detection, and an experiment harness that
//! drives all of them and writes CSV results.

pub mod channel;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod math;
pub mod seed;
pub mod tracker;

pub use error::{Error, Result};
pub use estimators::{
    accumulate_corr, estimate_batch, estimate_fd, eta_frobenius, eta_subspace_evd, BatchMethod,
    CorrPair, DopplerEstimate, RankChoice,
};
pub use math::{bessel_j0, bessel_j0_inv, xi, xi_ratio, TimingParams};
pub use tracker::{TrackerConfig, TrackerState};
