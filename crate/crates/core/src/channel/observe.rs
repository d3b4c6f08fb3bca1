use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::{pilot_fourier_matrix, ChannelProfile, FadingProcess, OfdmConfig};
use crate::error::Result;
use crate::seed;

const FADING_STREAM: u64 = 0xFAD1;
const NOISE_STREAM: u64 = 0x0A15E;

/// One symbol's pilot-tone channel response, true or LS-estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub symbol_index: u64,
    pub values: DVector<Complex64>,
}

impl PilotObservation {
    pub fn new(symbol_index: u64, values: DVector<Complex64>) -> Self {
        Self {
            symbol_index,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Noise-free pilot response of symbol `m`.
///
/// Tap gains are averaged over the `N` data samples of the symbol, which
/// start `Lcp` samples after the symbol boundary at `m (N + Lcp)`.
pub fn true_pilot_cfr(
    cfg: &OfdmConfig,
    profile: &ChannelProfile,
    fading: &FadingProcess,
    m: u64,
) -> PilotObservation {
    let f = pilot_fourier_matrix(cfg, profile);
    synth(cfg, &f, fading, m)
}

fn synth(
    cfg: &OfdmConfig,
    f: &DMatrix<Complex64>,
    fading: &FadingProcess,
    m: u64,
) -> PilotObservation {
    let t = cfg.timing();
    let start = (m as f64 * t.symbol_samples() as f64 + t.cp_len() as f64) * t.sample_period();
    let g = DVector::from_fn(f.ncols(), |l, _| {
        fading.average_gain(l, start, t.n_fft(), t.sample_period())
    });
    PilotObservation::new(m, f * g)
}

/// Per-pilot noise variance for a per-tone SNR in dB; zero for `+inf`.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Adds circular complex Gaussian noise `CN(0, 10^(-snr_db/10))` per pilot.
///
/// The noise stream is keyed on `(seed, symbol_index)`, so any symbol can be
/// regenerated independently of the others.
pub fn observe_ls(truth: &PilotObservation, snr_db: f64, seed: u64) -> PilotObservation {
    let var = noise_variance(snr_db);
    if var == 0.0 {
        return truth.clone();
    }
    let sd = (0.5 * var).sqrt();
    let mut rng = seed::rng_from(seed::derive(seed, &[truth.symbol_index]));
    let values = truth.values.map(|h| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        h + Complex64::new(re * sd, im * sd)
    });
    PilotObservation::new(truth.symbol_index, values)
}

/// Simulates `symbols` consecutive LS pilot observations starting at symbol 0.
pub fn simulate_frame(
    cfg: &OfdmConfig,
    profile: &ChannelProfile,
    fd: f64,
    snr_db: f64,
    seed: u64,
    symbols: usize,
) -> Result<Vec<PilotObservation>> {
    profile.validate_for(cfg)?;
    let fading = FadingProcess::new(profile, fd, seed::derive(seed, &[FADING_STREAM]));
    let noise_seed = seed::derive(seed, &[NOISE_STREAM]);
    let f = pilot_fourier_matrix(cfg, profile);
    Ok((0..symbols as u64)
        .map(|m| observe_ls(&synth(cfg, &f, &fading, m), snr_db, noise_seed))
        .collect())
}
