use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use super::ChannelProfile;
use crate::seed;

/// Sinusoids per tap, split evenly between the in-phase and quadrature rails.
pub const DEFAULT_SINUSOIDS: usize = 64;

/// Per-tap sum-of-sinusoids Rayleigh fading with a Clarke/Jakes spectrum.
///
/// Each tap is
///
/// ```text
/// gamma(t) = sigma / sqrt(M) * sum_n [ cos(2 pi fd cos(a_n) t + phi_n)
///                                  + j cos(2 pi fd sin(a_n) t + psi_n) ]
/// a_n = (2 pi n - pi + theta) / (4 M),  n = 1..M
/// ```
///
/// with `theta`, `phi_n`, `psi_n` uniform and drawn independently per tap.
/// The arrival angles sample a quarter circle on an equispaced grid, so for
/// every `theta` the time-averaged autocorrelation equals
/// `sigma^2 J0(2 pi fd tau)` up to a `J_{4M}` residual. The process can be
/// evaluated at any real time, and its average over a block of samples has a
/// closed form.
#[derive(Debug, Clone)]
pub struct FadingProcess {
    fd: f64,
    seed: u64,
    taps: Vec<TapBank>,
}

#[derive(Debug, Clone)]
struct TapBank {
    scale: f64,
    freq_i: Vec<f64>,
    phase_i: Vec<f64>,
    freq_q: Vec<f64>,
    phase_q: Vec<f64>,
}

impl FadingProcess {
    pub fn new(profile: &ChannelProfile, fd: f64, seed: u64) -> Self {
        Self::with_sinusoids(profile, fd, seed, DEFAULT_SINUSOIDS)
    }

    /// `sinusoids` is the total per tap; it is rounded up to an even count.
    pub fn with_sinusoids(profile: &ChannelProfile, fd: f64, seed: u64, sinusoids: usize) -> Self {
        assert!(fd.is_finite() && fd >= 0.0, "Doppler spread must be >= 0");
        let m = sinusoids.div_ceil(2).max(1);
        let taps = profile
            .powers()
            .iter()
            .enumerate()
            .map(|(l, &power)| {
                let mut rng = seed::rng_from(seed::derive(seed, &[l as u64]));
                let theta = rng.random_range(-PI..PI);
                let mut bank = TapBank {
                    scale: (power / m as f64).sqrt(),
                    freq_i: Vec::with_capacity(m),
                    phase_i: Vec::with_capacity(m),
                    freq_q: Vec::with_capacity(m),
                    phase_q: Vec::with_capacity(m),
                };
                for n in 1..=m {
                    let a = (2.0 * PI * n as f64 - PI + theta) / (4.0 * m as f64);
                    bank.freq_i.push(fd * a.cos());
                    bank.freq_q.push(fd * a.sin());
                    bank.phase_i.push(rng.random_range(0.0..2.0 * PI));
                    bank.phase_q.push(rng.random_range(0.0..2.0 * PI));
                }
                bank
            })
            .collect();
        Self { fd, seed, taps }
    }

    pub fn doppler(&self) -> f64 {
        self.fd
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn taps(&self) -> usize {
        self.taps.len()
    }

    /// Complex gain of tap `tap` at time `t` (seconds).
    pub fn gain(&self, tap: usize, t: f64) -> Complex64 {
        let b = &self.taps[tap];
        let re: f64 = b
            .freq_i
            .iter()
            .zip(&b.phase_i)
            .map(|(f, p)| (2.0 * PI * f * t + p).cos())
            .sum();
        let im: f64 = b
            .freq_q
            .iter()
            .zip(&b.phase_q)
            .map(|(f, p)| (2.0 * PI * f * t + p).cos())
            .sum();
        Complex64::new(re, im) * b.scale
    }

    /// Mean of `gain(tap, start + n * period)` over `n = 0..samples`.
    pub fn average_gain(&self, tap: usize, start: f64, samples: usize, period: f64) -> Complex64 {
        let b = &self.taps[tap];
        let rail = |freqs: &[f64], phases: &[f64]| -> f64 {
            freqs
                .iter()
                .zip(phases)
                .map(|(f, p)| {
                    let w = 2.0 * PI * f * period;
                    let (dm, dp) = dirichlet(w, samples);
                    // Re{ e^{j(2 pi f start + p)} * dm e^{j dp} }
                    dm * (2.0 * PI * f * start + p + dp).cos()
                })
                .sum()
        };
        Complex64::new(rail(&b.freq_i, &b.phase_i), rail(&b.freq_q, &b.phase_q)) * b.scale
    }
}

/// `(1/N) sum_{n<N} e^{j w n}` as (real amplitude, phase).
fn dirichlet(w: f64, n: usize) -> (f64, f64) {
    let half = 0.5 * w;
    let s = half.sin();
    if s == 0.0 {
        return (1.0, 0.0);
    }
    let nf = n as f64;
    ((nf * half).sin() / (nf * s), half * (nf - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_tap() -> ChannelProfile {
        ChannelProfile::new(vec![0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn zero_doppler_is_frozen() {
        let f = FadingProcess::new(&single_tap(), 0.0, 5);
        let g0 = f.gain(0, 0.0);
        for t in [1e-3, 0.5, 17.0] {
            assert_eq!(f.gain(0, t), g0);
        }
        assert_eq!(g0, FadingProcess::new(&single_tap(), 0.0, 5).gain(0, 3.0));
        assert!((f.average_gain(0, 2.0, 512, 2e-7) - g0).norm() < 1e-12);
    }

    #[test]
    fn block_average_matches_direct_sum() {
        let prof = ChannelProfile::new(vec![0.0, 2.0], vec![0.7, 0.3]).unwrap();
        let f = FadingProcess::new(&prof, 900.0, 42);
        let period = 2e-7;
        for tap in 0..2 {
            for start in [0.0, 1.3e-3, 0.77] {
                let direct: Complex64 = (0..512)
                    .map(|n| f.gain(tap, start + n as f64 * period))
                    .sum::<Complex64>()
                    / 512.0;
                let closed = f.average_gain(tap, start, 512, period);
                assert!((direct - closed).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let prof = ChannelProfile::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let a = FadingProcess::new(&prof, 400.0, 9);
        let b = FadingProcess::new(&prof, 400.0, 9);
        let c = FadingProcess::new(&prof, 400.0, 10);
        assert_eq!(a.gain(1, 0.123).re.to_bits(), b.gain(1, 0.123).re.to_bits());
        assert_ne!(a.gain(1, 0.123), c.gain(1, 0.123));
    }
}
