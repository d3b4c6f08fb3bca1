//! Pilot-domain WSSUS Rayleigh channel simulation.
//!
//! Observations are synthesized directly on the comb pilots under the
//! diagonal (ICI-free) channel model: each pilot sees the symbol-averaged
//! frequency response `H_p = (1/N) sum_n sum_l gamma_l(n) e^{-j 2 pi k_p tau_l / N}`
//! plus circular Gaussian LS-estimation noise.

mod fading;
pub mod obs_io;
mod observe;

pub use fading::{FadingProcess, DEFAULT_SINUSOIDS};
pub use observe::{noise_variance, observe_ls, simulate_frame, true_pilot_cfr, PilotObservation};

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::TimingParams;

/// Static OFDM parameters with an equispaced comb pilot pattern
/// `k_p = offset + p * interval`, `p = 0..pilots`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    timing: TimingParams,
    pilots: usize,
    interval: usize,
    offset: usize,
}

impl OfdmConfig {
    pub fn new(timing: TimingParams, pilots: usize, offset: usize) -> Result<Self> {
        let n = timing.n_fft();
        if pilots == 0 || !n.is_multiple_of(pilots) {
            return Err(Error::InvalidConfig(format!(
                "pilot count {pilots} must divide the FFT size {n}"
            )));
        }
        let interval = n / pilots;
        if offset >= interval {
            return Err(Error::InvalidConfig(format!(
                "pilot offset {offset} must be below the pilot interval {interval}"
            )));
        }
        Ok(Self {
            timing,
            pilots,
            interval,
            offset,
        })
    }

    /// N = 512, Lcp = 64, T = 200 ns, 64 pilots every 8th tone from tone 0.
    pub fn lte_5mhz() -> Self {
        Self::new(TimingParams::lte_5mhz(), 64, 0).expect("valid preset")
    }

    pub fn timing(&self) -> &TimingParams {
        &self.timing
    }

    pub fn pilots(&self) -> usize {
        self.pilots
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn pilot_tone(&self, p: usize) -> usize {
        self.offset + p * self.interval
    }
}

/// Tapped-delay-line power profile. Delays are in samples and may be
/// fractional; powers are linear and normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProfile {
    delays: Vec<f64>,
    powers: Vec<f64>,
}

impl ChannelProfile {
    /// Builds a profile and rescales `powers` to unit sum.
    pub fn new(delays: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        if delays.is_empty() || delays.len() != powers.len() {
            return Err(Error::InvalidConfig(format!(
                "profile needs matching non-empty delay/power lists ({} vs {})",
                delays.len(),
                powers.len()
            )));
        }
        if delays.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidConfig(
                "tap delays must be finite and >= 0".into(),
            ));
        }
        if delays.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "tap delays must be strictly increasing".into(),
            ));
        }
        if powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidConfig("tap powers must be positive".into()));
        }
        let total: f64 = powers.iter().sum();
        let powers = powers.into_iter().map(|p| p / total).collect();
        Ok(Self { delays, powers })
    }

    /// Builds a profile from delays in seconds and powers in dB.
    pub fn from_db(delays_s: &[f64], powers_db: &[f64], sample_period: f64) -> Result<Self> {
        Self::new(
            delays_s.iter().map(|d| d / sample_period).collect(),
            powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect(),
        )
    }

    pub fn taps(&self) -> usize {
        self.delays.len()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Sum of squared tap powers.
    pub fn power_sq_sum(&self) -> f64 {
        self.powers.iter().map(|p| p * p).sum()
    }

    /// Checks the CP and pilot-count constraints against a configuration.
    pub fn validate_for(&self, cfg: &OfdmConfig) -> Result<()> {
        let max_delay = *self.delays.last().expect("non-empty");
        if max_delay > cfg.timing().cp_len() as f64 {
            return Err(Error::InvalidConfig(format!(
                "max tap delay {max_delay} exceeds CP length {}",
                cfg.timing().cp_len()
            )));
        }
        if self.taps() > cfg.pilots() {
            return Err(Error::InvalidConfig(format!(
                "{} taps exceed {} pilots",
                self.taps(),
                cfg.pilots()
            )));
        }
        Ok(())
    }
}

const VEH_A_DELAYS_NS: [f64; 6] = [0.0, 310.0, 710.0, 1090.0, 1730.0, 2510.0];
const VEH_A_POWERS_DB: [f64; 6] = [0.0, -1.0, -9.0, -10.0, -15.0, -20.0];

/// ITU Vehicular A: six taps, delays resampled to the given sample period.
pub fn itu_veh_a(sample_period: f64) -> Result<ChannelProfile> {
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return Err(Error::InvalidConfig(
            "sample period must be positive".into(),
        ));
    }
    let delays: Vec<f64> = VEH_A_DELAYS_NS.iter().map(|d| d * 1e-9).collect();
    ChannelProfile::from_db(&delays, &VEH_A_POWERS_DB, sample_period)
}

/// `P x L` matrix with entries `exp(-j 2 pi k_p tau_l / N)`.
pub fn pilot_fourier_matrix(cfg: &OfdmConfig, profile: &ChannelProfile) -> DMatrix<Complex64> {
    let n = cfg.timing().n_fft() as f64;
    DMatrix::from_fn(cfg.pilots(), profile.taps(), |p, l| {
        let k = cfg.pilot_tone(p) as f64;
        Complex64::from_polar(1.0, -2.0 * PI * k * profile.delays()[l] / n)
    })
}
