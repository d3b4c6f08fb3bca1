//! Streaming Doppler estimation by bi-iteration subspace tracking.
//!
//! Two trackers run side by side. The lag-0 tracker follows the dominant
//! subspace of the exponentially weighted `E[h(n) h(n)^H]`; the lag-`beta`
//! tracker runs the same recursion on `E[h(n) h(n-beta)^H]`. The diagonal
//! of each tracker's R factor approximates the dominant spectrum of its
//! matrix, so the ratio of their leading energies (over the MDL-detected
//! rank) is the subspace-projected correlation ratio. Each step costs
//! `O(P Lm^2)`; no `P x P` matrix is formed.

mod mdl;
mod qr;

pub use mdl::{mdl_rank, MdlRank};
pub use qr::thin_qr;

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::PilotObservation;
use crate::error::{Error, Result};
use crate::estimators::{estimate_fd, DopplerEstimate, MAX_BETA};
use crate::math::TimingParams;

pub const DEFAULT_ALPHA: f64 = 0.995;
pub const DEFAULT_MAX_RANK: usize = 10;
pub const DEFAULT_HOLD_OFF: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub pilots: usize,
    /// Largest rank tested by MDL; also the tracked subspace dimension.
    pub max_rank: usize,
    pub beta: usize,
    /// Exponential forgetting factor in (0, 1).
    pub alpha: f64,
    /// Estimates are withheld for the first `max(beta, hold_off)` symbols.
    pub hold_off: usize,
    pub timing: TimingParams,
}

impl TrackerConfig {
    /// `alpha = 0.995`, `Lm = min(10, P)`, `beta = 1`, hold-off 30 symbols.
    pub fn new(pilots: usize, timing: TimingParams) -> Self {
        Self {
            pilots,
            max_rank: DEFAULT_MAX_RANK.min(pilots),
            beta: 1,
            alpha: DEFAULT_ALPHA,
            hold_off: DEFAULT_HOLD_OFF,
            timing,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pilots == 0 || self.max_rank == 0 || self.max_rank > self.pilots {
            return Err(Error::InvalidConfig(format!(
                "tracked rank {} must be in 1..={}",
                self.max_rank, self.pilots
            )));
        }
        if !(1..=MAX_BETA).contains(&self.beta) {
            return Err(Error::InvalidConfig(format!(
                "symbol lag must be in 1..={MAX_BETA}, got {}",
                self.beta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "forgetting factor must be in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// Exponential window length `1 / (1 - alpha)`.
    pub fn window(&self) -> f64 {
        1.0 / (1.0 - self.alpha)
    }
}

/// Bi-iteration state for one correlation lag.
#[derive(Debug, Clone)]
pub struct LagTracker {
    q: DMatrix<Complex64>,
    a: DMatrix<Complex64>,
    c: DMatrix<Complex64>,
    rdiag: Vec<f64>,
}

impl LagTracker {
    fn new(pilots: usize, rank: usize) -> Self {
        Self {
            q: DMatrix::identity(pilots, rank),
            a: DMatrix::zeros(pilots, rank),
            c: DMatrix::identity(rank, rank),
            rdiag: vec![0.0; rank],
        }
    }

    /// `A <- alpha A C + (1 - alpha) x (Q^H y)^H`, then `A = Q R`,
    /// `C = Q_old^H Q`. Returns false (and keeps `Q`) if `A` vanished.
    fn update(&mut self, x: &DVector<Complex64>, y: &DVector<Complex64>, alpha: f64) -> bool {
        let z = self.q.adjoint() * y;
        let mut a = &self.a * &self.c;
        a.gerc(
            Complex64::new(1.0 - alpha, 0.0),
            x,
            &z,
            Complex64::new(alpha, 0.0),
        );
        self.a = a;
        if self.a.norm() <= f64::MIN_POSITIVE {
            let r = self.rdiag.len();
            self.rdiag.iter_mut().for_each(|v| *v = 0.0);
            self.c = DMatrix::identity(r, r);
            return false;
        }
        let (q, rdiag) = thin_qr(&self.a);
        self.c = self.q.adjoint() * &q;
        self.q = q;
        self.rdiag = rdiag;
        true
    }

    /// Tracked orthonormal basis, `P x Lm`.
    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.q
    }

    /// `|diag(R)|` of the latest QR factorization.
    pub fn rdiag(&self) -> &[f64] {
        &self.rdiag
    }

    pub fn orthonormality_error(&self) -> f64 {
        let r = self.q.ncols();
        (self.q.adjoint() * &self.q - DMatrix::<Complex64>::identity(r, r)).norm()
    }
}

/// Streaming tracker. Feed observations in symbol order with [`step`](Self::step).
#[derive(Debug, Clone)]
pub struct TrackerState {
    cfg: TrackerConfig,
    lag0: LagTracker,
    lagb: LagTracker,
    ring: VecDeque<DVector<Complex64>>,
    n: u64,
    rank: usize,
    latest: Option<DopplerEstimate>,
}

impl TrackerState {
    pub fn new(cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            lag0: LagTracker::new(cfg.pilots, cfg.max_rank),
            lagb: LagTracker::new(cfg.pilots, cfg.max_rank),
            ring: VecDeque::with_capacity(cfg.beta + 1),
            n: 0,
            rank: 1,
            latest: None,
            cfg,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Symbols consumed so far.
    pub fn symbols(&self) -> u64 {
        self.n
    }

    /// Latest MDL rank.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn lag0(&self) -> &LagTracker {
        &self.lag0
    }

    pub fn lag_beta(&self) -> &LagTracker {
        &self.lagb
    }

    /// Number of buffered past observations, `min(n, beta)`.
    pub fn buffered(&self) -> usize {
        self.ring.len()
    }

    /// Most recent estimate, including ones withheld by the hold-off.
    pub fn latest(&self) -> Option<DopplerEstimate> {
        self.latest
    }

    pub fn step_observation(&mut self, obs: &PilotObservation) -> Result<Option<DopplerEstimate>> {
        self.step(&obs.values)
    }

    /// Consumes one pilot observation.
    ///
    /// Returns `None` until a lag-`beta` pair exists and for the hold-off
    /// period; afterwards every step returns an estimate, which may be
    /// flagged invalid.
    pub fn step(&mut self, h: &DVector<Complex64>) -> Result<Option<DopplerEstimate>> {
        if h.len() != self.cfg.pilots {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.pilots,
                got: h.len(),
            });
        }
        let alpha = self.cfg.alpha;
        self.n += 1;

        let live0 = self.lag0.update(h, h, alpha);
        if live0 && self.n >= 2 {
            let samples = (self.n as f64).min(self.cfg.window());
            if let Ok(r) = mdl_rank(self.lag0.rdiag(), samples) {
                self.rank = r.rank;
            }
        }

        let mut fresh = None;
        if self.ring.len() == self.cfg.beta {
            let lagged = self.ring.front().expect("ring is full");
            let liveb = self.lagb.update(h, lagged, alpha);
            let est = if live0 && liveb {
                self.ratio_estimate()
            } else {
                DopplerEstimate::invalid(f64::NAN, self.rank)
            };
            self.latest = Some(est);
            fresh = Some(est);
        }
        self.ring.push_back(h.clone());
        if self.ring.len() > self.cfg.beta {
            self.ring.pop_front();
        }

        let hold = self.cfg.beta.max(self.cfg.hold_off) as u64;
        Ok(if self.n > hold { fresh } else { None })
    }

    fn ratio_estimate(&self) -> DopplerEstimate {
        let l = self.rank;
        let num: f64 = self.lagb.rdiag[..l].iter().map(|v| v * v).sum();
        let den: f64 = self.lag0.rdiag[..l].iter().map(|v| v * v).sum();
        if den == 0.0 {
            return DopplerEstimate::invalid(f64::NAN, l);
        }
        estimate_fd((num / den).sqrt(), self.cfg.beta, &self.cfg.timing).with_rank(l)
    }

    /// Dumps the tracked bases, R diagonals and rank as CSV blocks, each
    /// preceded by a `# name rows x cols` header line. Complex entries are
    /// written as `re,im` pairs.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# symbols {}", self.n)?;
        for (name, t) in [("lag0", &self.lag0), ("lagB", &self.lagb)] {
            let q = &t.q;
            writeln!(w, "# {name}.Q {}x{}", q.nrows(), q.ncols())?;
            for i in 0..q.nrows() {
                let row: Vec<String> = (0..q.ncols())
                    .map(|j| format!("{},{}", q[(i, j)].re, q[(i, j)].im))
                    .collect();
                writeln!(w, "{}", row.join(","))?;
            }
            writeln!(w, "# {name}.Rdiag 1x{}", t.rdiag.len())?;
            let row: Vec<String> = t.rdiag.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        writeln!(w, "# rank 1x1")?;
        writeln!(w, "{}", self.rank)?;
        Ok(())
    }
}

/// Runs a fresh tracker over a whole record; returns every emitted estimate
/// and the final state.
pub fn track_all(
    cfg: TrackerConfig,
    observations: &[PilotObservation],
) -> Result<(Vec<(u64, DopplerEstimate)>, TrackerState)> {
    let mut state = TrackerState::new(cfg)?;
    let mut out = Vec::new();
    for obs in observations {
        if let Some(est) = state.step(&obs.values)? {
            out.push((state.symbols(), est));
        }
    }
    Ok((out, state))
}
