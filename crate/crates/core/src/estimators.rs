//! Batch Doppler estimation from sample autocorrelation matrices.
//!
//! Two ratio estimators are provided. The Frobenius variant compares the
//! full `P x P` lag-`beta` and lag-0 matrices; the subspace variant first
//! projects both onto the dominant eigenvectors of the lag-0 matrix, which
//! discards most of the white-noise floor. Either ratio is then mapped to a
//! Doppler spread through the inverse of J0.

use std::collections::VecDeque;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::{noise_variance, ChannelProfile, OfdmConfig, PilotObservation};
use crate::error::{Error, Result};
use crate::math::{bessel_j0, bessel_j0_inv, TimingParams};
use crate::tracker::mdl_rank;

/// Largest symbol lag for which `J0` stays invertible at `fd Ts <= 0.1`.
pub const MAX_BETA: usize = 3;

/// Sample lag-0 and lag-`beta` autocorrelation matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrPair {
    pub r0: DMatrix<Complex64>,
    pub rbeta: DMatrix<Complex64>,
    pub beta: usize,
    /// Symbols averaged into `r0`; `rbeta` averages `count - beta` pairs.
    pub count: usize,
}

/// Streaming accumulator for [`CorrPair`].
///
/// Accumulators over contiguous pieces of one symbol stream can be merged in
/// stream order; the result equals accumulating the concatenation. The first
/// and last `beta` observations of each piece are retained so lag pairs that
/// straddle a boundary are not lost.
#[derive(Debug, Clone)]
pub struct CorrAccumulator {
    beta: usize,
    dim: usize,
    sum0: DMatrix<Complex64>,
    sumb: DMatrix<Complex64>,
    count: usize,
    head: Vec<DVector<Complex64>>,
    tail: VecDeque<DVector<Complex64>>,
}

impl CorrAccumulator {
    pub fn new(dim: usize, beta: usize) -> Result<Self> {
        check_beta(beta)?;
        if dim == 0 {
            return Err(Error::InvalidConfig("pilot count must be positive".into()));
        }
        Ok(Self {
            beta,
            dim,
            sum0: DMatrix::zeros(dim, dim),
            sumb: DMatrix::zeros(dim, dim),
            count: 0,
            head: Vec::with_capacity(beta),
            tail: VecDeque::with_capacity(beta + 1),
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, h: &DVector<Complex64>) -> Result<()> {
        if h.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: h.len(),
            });
        }
        let one = Complex64::new(1.0, 0.0);
        self.sum0.gerc(one, h, h, one);
        if self.tail.len() == self.beta {
            let lagged = &self.tail[0];
            self.sumb.gerc(one, h, lagged, one);
        }
        if self.head.len() < self.beta {
            self.head.push(h.clone());
        }
        self.tail.push_back(h.clone());
        if self.tail.len() > self.beta {
            self.tail.pop_front();
        }
        self.count += 1;
        Ok(())
    }

    /// Appends `later`, which must directly follow `self` in the stream.
    pub fn merge(mut self, later: &CorrAccumulator) -> Result<Self> {
        if later.beta != self.beta || later.dim != self.dim {
            return Err(Error::InvalidConfig(
                "cannot merge accumulators of different shape".into(),
            ));
        }
        let one = Complex64::new(1.0, 0.0);
        self.sum0 += &later.sum0;
        self.sumb += &later.sumb;
        // Pairs (earlier in self, j-th of later) with j < beta.
        for (j, h) in later.head.iter().enumerate() {
            let back = self.beta - j;
            if back <= self.tail.len() {
                let lagged = &self.tail[self.tail.len() - back];
                self.sumb.gerc(one, h, lagged, one);
            }
        }
        for h in &later.head {
            if self.head.len() < self.beta {
                self.head.push(h.clone());
            }
        }
        for h in &later.tail {
            self.tail.push_back(h.clone());
            if self.tail.len() > self.beta {
                self.tail.pop_front();
            }
        }
        self.count += later.count;
        Ok(self)
    }

    pub fn finish(&self) -> Result<CorrPair> {
        if self.count <= self.beta {
            return Err(Error::InsufficientData {
                needed: self.beta,
                got: self.count,
            });
        }
        let m = self.count as f64;
        let pairs = (self.count - self.beta) as f64;
        Ok(CorrPair {
            r0: self.sum0.map(|v| v / m),
            rbeta: self.sumb.map(|v| v / pairs),
            beta: self.beta,
            count: self.count,
        })
    }
}

fn check_beta(beta: usize) -> Result<()> {
    if !(1..=MAX_BETA).contains(&beta) {
        return Err(Error::InvalidConfig(format!(
            "symbol lag must be in 1..={MAX_BETA}, got {beta}"
        )));
    }
    Ok(())
}

/// Sample autocorrelation matrices of an observation sequence.
pub fn accumulate_corr(observations: &[PilotObservation], beta: usize) -> Result<CorrPair> {
    check_beta(beta)?;
    let first = observations.first().ok_or(Error::InsufficientData {
        needed: beta,
        got: 0,
    })?;
    let mut acc = CorrAccumulator::new(first.len(), beta)?;
    for obs in observations {
        acc.push(&obs.values)?;
    }
    acc.finish()
}

/// `||R(beta)||_F / ||R(0)||_F`.
pub fn eta_frobenius(corr: &CorrPair) -> Result<f64> {
    let den = corr.r0.norm();
    if den == 0.0 {
        return Err(Error::Degenerate("lag-0 correlation is the zero matrix"));
    }
    Ok(corr.rbeta.norm() / den)
}

/// Eigen-decomposition of the lag-0 matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SignalEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl SignalEigen {
    pub fn of(r0: &DMatrix<Complex64>) -> Self {
        let herm = (r0 + r0.adjoint()).map(|v| v * 0.5);
        let eig = SymmetricEigen::new(herm);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        // stable: ties keep their original order
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = eig.eigenvectors.select_columns(order.iter());
        Self { values, vectors }
    }

    /// Dominant `rank` eigenvectors.
    pub fn signal_subspace(&self, rank: usize) -> DMatrix<Complex64> {
        self.vectors.columns(0, rank).into_owned()
    }
}

/// Frobenius ratio after projecting onto the `rank` dominant eigenvectors of
/// `R(0)`.
pub fn eta_subspace_evd(corr: &CorrPair, rank: usize) -> Result<f64> {
    eta_subspace_with(corr, &SignalEigen::of(&corr.r0), rank)
}

fn eta_subspace_with(corr: &CorrPair, eig: &SignalEigen, rank: usize) -> Result<f64> {
    let dim = corr.r0.nrows();
    if rank == 0 || rank > dim {
        return Err(Error::RankTooLarge { rank, dim });
    }
    let us = eig.signal_subspace(rank);
    let ush = us.adjoint();
    let num = (&ush * &corr.rbeta * &us).norm();
    let den = (&ush * &corr.r0 * &us).norm();
    if den == 0.0 {
        return Err(Error::Degenerate("projected lag-0 correlation is zero"));
    }
    Ok(num / den)
}

/// Number of dominant eigenvalues of `R(0)` chosen by MDL, with the symbol
/// count as the snapshot count.
pub fn mdl_signal_rank(corr: &CorrPair) -> usize {
    mdl_from_eigen(&SignalEigen::of(&corr.r0), corr.count)
}

fn mdl_from_eigen(eig: &SignalEigen, count: usize) -> usize {
    let vals: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    match mdl_rank(&vals, count.max(2) as f64) {
        Ok(r) => r.rank,
        Err(_) => 1,
    }
}

/// A Doppler spread estimate with the ratio it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DopplerEstimate {
    pub eta: f64,
    pub fd_hz: f64,
    /// Signal rank used (pilot count for the full-matrix estimator).
    pub rank: usize,
    /// False when the ratio fell outside the invertible range and had to
    /// be clamped, or could not be formed.
    pub valid: bool,
}

impl DopplerEstimate {
    pub fn invalid(eta: f64, rank: usize) -> Self {
        Self {
            eta,
            fd_hz: f64::NAN,
            rank,
            valid: false,
        }
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }
}

/// Ratio overshoot above 1 tolerated as finite-averaging noise.
pub const ETA_OVERSHOOT: f64 = 0.02;
/// Argument at which the invertible branch is cut for clamping.
pub const ETA_FLOOR_ARG: f64 = 2.40;

/// `fd = J0^{-1}(eta) / (2 pi beta Ts)`.
///
/// `eta` is clamped into `[J0(2.40) + 1e-6, 1]`. The estimate is flagged
/// invalid when `eta` exceeds `1 + 0.02`, drops below `J0(2.40)`, or is NaN.
/// The returned rank is 1; callers attach their own with [`DopplerEstimate::with_rank`].
pub fn estimate_fd(eta: f64, beta: usize, timing: &TimingParams) -> DopplerEstimate {
    let floor = bessel_j0(ETA_FLOOR_ARG);
    if eta.is_nan() || beta == 0 {
        return DopplerEstimate::invalid(eta, 1);
    }
    let valid = eta <= 1.0 + ETA_OVERSHOOT && eta >= floor;
    let clamped = eta.clamp(floor + 1e-6, 1.0);
    let x = bessel_j0_inv(clamped).expect("clamped into the invertible branch");
    DopplerEstimate {
        eta,
        fd_hz: x / (2.0 * std::f64::consts::PI * beta as f64 * timing.symbol_duration()),
        rank: 1,
        valid,
    }
}

/// How the subspace estimator picks its rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankChoice {
    Fixed(usize),
    Mdl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMethod {
    Frobenius,
    SubspaceEvd(RankChoice),
}

/// Runs a batch estimator over a whole observation record.
pub fn estimate_batch(
    observations: &[PilotObservation],
    beta: usize,
    timing: &TimingParams,
    method: BatchMethod,
) -> Result<DopplerEstimate> {
    let corr = accumulate_corr(observations, beta)?;
    estimate_from_corr(&corr, timing, method)
}

pub fn estimate_from_corr(
    corr: &CorrPair,
    timing: &TimingParams,
    method: BatchMethod,
) -> Result<DopplerEstimate> {
    let (eta, rank) = match method {
        BatchMethod::Frobenius => (eta_frobenius(corr)?, corr.r0.nrows()),
        BatchMethod::SubspaceEvd(choice) => {
            let eig = SignalEigen::of(&corr.r0);
            let rank = match choice {
                RankChoice::Fixed(r) => r,
                RankChoice::Mdl => mdl_from_eigen(&eig, corr.count),
            };
            (eta_subspace_with(corr, &eig, rank)?, rank)
        }
    };
    Ok(estimate_fd(eta, corr.beta, timing).with_rank(rank))
}

/// Closed-form noise-bias terms of the two ratio estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasDiagnostics {
    /// Full-matrix bias `sigma_n^2 / sqrt(P sum sigma_l^4)`.
    pub rho: f64,
    /// Subspace bias `rho sqrt(L / P)`.
    pub rho_r: f64,
    /// `1 / (sqrt(P) SNR)`, attained by a single-tap channel.
    pub rho_lower_bound: f64,
}

pub fn bias_diagnostics(
    cfg: &OfdmConfig,
    profile: &ChannelProfile,
    snr_db: f64,
) -> BiasDiagnostics {
    let p = cfg.pilots() as f64;
    let var = noise_variance(snr_db);
    let rho = var / (p * profile.power_sq_sum()).sqrt();
    BiasDiagnostics {
        rho,
        rho_r: rho * (profile.taps() as f64 / p).sqrt(),
        rho_lower_bound: var / p.sqrt(),
    }
}

/// Relative shortfall of the biased ratio, `1 - xi0 / sqrt(xi0^2 + rho^2)`.
pub fn relative_eta_deviation(xi0: f64, rho: f64) -> f64 {
    1.0 - xi0 / (xi0 * xi0 + rho * rho).sqrt()
}
