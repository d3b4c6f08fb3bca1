//! Experiment runner: analytic tables, Monte-Carlo sweeps, convergence
//! traces and estimation from observation files, all written as CSV.

mod config;
mod run;

pub use config::parse_config;
pub use run::{
    run, run_converge, run_estimate, run_simulate, run_sweep_snr, run_table1, trial_seed,
};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::channel::{itu_veh_a, ChannelProfile, OfdmConfig};
use crate::error::{Error, Result};
use crate::estimators::{BatchMethod, RankChoice, MAX_BETA};
use crate::math::TimingParams;
use crate::tracker::{TrackerConfig, DEFAULT_ALPHA, DEFAULT_HOLD_OFF, DEFAULT_MAX_RANK};

/// 20 ms of 115.2 us symbols.
pub const FRAME_20MS: usize = 174;
/// Alternate 20 ms frame length quoted for the same numerology.
pub const FRAME_20MS_ALT: usize = 194;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Table1,
    SweepSnr,
    Converge,
    Estimate,
    Simulate,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Table1,
        Scenario::SweepSnr,
        Scenario::Converge,
        Scenario::Estimate,
        Scenario::Simulate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Table1 => "table1",
            Scenario::SweepSnr => "sweep-snr",
            Scenario::Converge => "converge",
            Scenario::Estimate => "estimate",
            Scenario::Simulate => "simulate",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scenario {s:?}")))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Frobenius,
    SubspaceEvd,
    Tracker,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Frobenius => "frobenius",
            EstimatorKind::SubspaceEvd => "subspace-evd",
            EstimatorKind::Tracker => "tracker",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frobenius" => Ok(EstimatorKind::Frobenius),
            "subspace-evd" => Ok(EstimatorKind::SubspaceEvd),
            "tracker" => Ok(EstimatorKind::Tracker),
            _ => Err(Error::InvalidConfig(format!("unknown estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    VehA,
    /// Tap delays in nanoseconds and powers in dB.
    Custom {
        delays_ns: Vec<f64>,
        powers_db: Vec<f64>,
    },
}

/// Everything needed to run one scenario. Every field can be set from a
/// config file or the command line through [`ExperimentSpec::set`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub n_fft: usize,
    pub cp_len: usize,
    pub sample_period_ns: f64,
    pub pilots: usize,
    pub pilot_offset: usize,
    pub profile: ProfileSpec,
    pub fd: Vec<f64>,
    pub snr: Vec<f64>,
    pub beta: usize,
    pub frame_symbols: usize,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub rank: RankChoice,
    pub alpha: f64,
    pub max_rank: usize,
    pub hold_off: usize,
    /// Extra `fd * Ts` rows for `table1`.
    pub table_rows: Vec<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn defaults(scenario: Scenario) -> Self {
        let (snr, frame, estimators) = match scenario {
            Scenario::Converge => (vec![15.0], 1000, vec![EstimatorKind::Tracker]),
            Scenario::Estimate => (vec![15.0], FRAME_20MS, vec![EstimatorKind::Tracker]),
            Scenario::Simulate => (vec![15.0], 2000, vec![EstimatorKind::Tracker]),
            _ => (
                vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
                FRAME_20MS,
                vec![EstimatorKind::Frobenius, EstimatorKind::SubspaceEvd],
            ),
        };
        let fd = match scenario {
            Scenario::Simulate => vec![400.0],
            _ => vec![200.0, 400.0, 600.0],
        };
        Self {
            scenario,
            n_fft: 512,
            cp_len: 64,
            sample_period_ns: 200.0,
            pilots: 64,
            pilot_offset: 0,
            profile: ProfileSpec::VehA,
            fd,
            snr,
            beta: 1,
            frame_symbols: frame,
            trials: if scenario == Scenario::Simulate {
                1
            } else {
                50
            },
            seed: 1,
            estimators,
            rank: RankChoice::Mdl,
            alpha: DEFAULT_ALPHA,
            max_rank: DEFAULT_MAX_RANK,
            hold_off: DEFAULT_HOLD_OFF,
            table_rows: vec![0.02, 0.04, 0.06, 0.08],
            input: None,
            output: None,
        }
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = |e: &dyn fmt::Display| Error::InvalidConfig(format!("{key}: {e}"));
        match key {
            "n_fft" => self.n_fft = value.parse().map_err(|e| bad(&e))?,
            "cp_len" => self.cp_len = value.parse().map_err(|e| bad(&e))?,
            "sample_period_ns" => self.sample_period_ns = value.parse().map_err(|e| bad(&e))?,
            "pilots" => self.pilots = value.parse().map_err(|e| bad(&e))?,
            "pilot_offset" => self.pilot_offset = value.parse().map_err(|e| bad(&e))?,
            "profile" => {
                self.profile = match value {
                    "veh-a" => ProfileSpec::VehA,
                    "custom" => match &self.profile {
                        ProfileSpec::Custom { .. } => self.profile.clone(),
                        ProfileSpec::VehA => ProfileSpec::Custom {
                            delays_ns: vec![],
                            powers_db: vec![],
                        },
                    },
                    other => return Err(bad(&format!("unknown profile {other:?}"))),
                }
            }
            "delays_ns" | "powers_db" => {
                let list = parse_list::<f64>(value).map_err(|e| bad(&e))?;
                if let ProfileSpec::VehA = self.profile {
                    self.profile = ProfileSpec::Custom {
                        delays_ns: vec![],
                        powers_db: vec![],
                    };
                }
                if let ProfileSpec::Custom {
                    delays_ns,
                    powers_db,
                } = &mut self.profile
                {
                    if key == "delays_ns" {
                        *delays_ns = list;
                    } else {
                        *powers_db = list;
                    }
                }
            }
            "fd" => self.fd = parse_list(value).map_err(|e| bad(&e))?,
            "snr" => self.snr = parse_list(value).map_err(|e| bad(&e))?,
            "beta" => self.beta = value.parse().map_err(|e| bad(&e))?,
            "frame_symbols" => self.frame_symbols = value.parse().map_err(|e| bad(&e))?,
            "trials" => self.trials = value.parse().map_err(|e| bad(&e))?,
            "seed" => self.seed = value.parse().map_err(|e| bad(&e))?,
            "estimator" => {
                self.estimators = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<_>>()?
            }
            "rank" => {
                self.rank = if value == "mdl" {
                    RankChoice::Mdl
                } else {
                    RankChoice::Fixed(value.parse().map_err(|e| bad(&e))?)
                }
            }
            "alpha" => self.alpha = value.parse().map_err(|e| bad(&e))?,
            "max_rank" => self.max_rank = value.parse().map_err(|e| bad(&e))?,
            "hold_off" => self.hold_off = value.parse().map_err(|e| bad(&e))?,
            "table_rows" => self.table_rows = parse_list(value).map_err(|e| bad(&e))?,
            "input" => self.input = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        let ofdm = self.ofdm()?;
        let profile = self.channel_profile()?;
        if self.scenario != Scenario::Table1 && self.scenario != Scenario::Estimate {
            profile.validate_for(&ofdm)?;
        }
        if !(1..=MAX_BETA).contains(&self.beta) {
            return fail(format!("beta must be in 1..={MAX_BETA}, got {}", self.beta));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.frame_symbols <= self.beta {
            return fail(format!(
                "frame_symbols ({}) must exceed beta ({})",
                self.frame_symbols, self.beta
            ));
        }
        if self.fd.is_empty() || self.fd.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return fail("fd must be a non-empty list of finite values >= 0".into());
        }
        if self.snr.is_empty()
            || self
                .snr
                .iter()
                .any(|s| s.is_nan() || *s == f64::NEG_INFINITY)
        {
            return fail("snr must be a non-empty list of dB values or inf".into());
        }
        if self.estimators.is_empty() {
            return fail("at least one estimator is required".into());
        }
        if self.scenario == Scenario::Converge && self.estimators != [EstimatorKind::Tracker] {
            return fail("converge runs the tracker only".into());
        }
        if self.scenario == Scenario::Estimate && self.input.is_none() {
            return fail("estimate needs an input file".into());
        }
        if let RankChoice::Fixed(r) = self.rank {
            if r == 0 || r > self.pilots {
                return fail(format!("rank must be in 1..={}", self.pilots));
            }
        }
        if self
            .table_rows
            .iter()
            .any(|r| !(r.is_finite() && *r >= 0.0))
        {
            return fail("table_rows must be finite and >= 0".into());
        }
        if self.scenario != Scenario::Table1 {
            self.tracker_config(self.pilots).validate()?;
        }
        Ok(())
    }

    pub fn timing(&self) -> Result<TimingParams> {
        TimingParams::new(self.n_fft, self.cp_len, self.sample_period_ns * 1e-9)
    }

    pub fn ofdm(&self) -> Result<OfdmConfig> {
        OfdmConfig::new(self.timing()?, self.pilots, self.pilot_offset)
    }

    pub fn channel_profile(&self) -> Result<ChannelProfile> {
        let t = self.sample_period_ns * 1e-9;
        match &self.profile {
            ProfileSpec::VehA => itu_veh_a(t),
            ProfileSpec::Custom {
                delays_ns,
                powers_db,
            } => {
                let delays: Vec<f64> = delays_ns.iter().map(|d| d * 1e-9).collect();
                ChannelProfile::from_db(&delays, powers_db, t)
            }
        }
    }

    pub fn batch_method(&self, kind: EstimatorKind) -> Option<BatchMethod> {
        match kind {
            EstimatorKind::Frobenius => Some(BatchMethod::Frobenius),
            EstimatorKind::SubspaceEvd => Some(BatchMethod::SubspaceEvd(self.rank)),
            EstimatorKind::Tracker => None,
        }
    }

    pub fn tracker_config(&self, pilots: usize) -> TrackerConfig {
        TrackerConfig {
            pilots,
            max_rank: self.max_rank.min(pilots),
            beta: self.beta,
            alpha: self.alpha,
            hold_off: self.hold_off,
            timing: self.timing().unwrap_or_else(|_| TimingParams::lte_5mhz()),
        }
    }

    /// All settings as `key=value` pairs in a fixed order; feeding them
    /// back through [`set`](Self::set) reproduces the same settings.
    pub fn settings(&self) -> Vec<(&'static str, String)> {
        let mut kv = vec![
            ("n_fft", self.n_fft.to_string()),
            ("cp_len", self.cp_len.to_string()),
            ("sample_period_ns", self.sample_period_ns.to_string()),
            ("pilots", self.pilots.to_string()),
            ("pilot_offset", self.pilot_offset.to_string()),
        ];
        match &self.profile {
            ProfileSpec::VehA => kv.push(("profile", "veh-a".into())),
            ProfileSpec::Custom {
                delays_ns,
                powers_db,
            } => {
                kv.push(("profile", "custom".into()));
                kv.push(("delays_ns", join(delays_ns)));
                kv.push(("powers_db", join(powers_db)));
            }
        }
        kv.extend([
            ("fd", join(&self.fd)),
            ("snr", join(&self.snr)),
            ("beta", self.beta.to_string()),
            ("frame_symbols", self.frame_symbols.to_string()),
            ("trials", self.trials.to_string()),
            ("seed", self.seed.to_string()),
            (
                "estimator",
                self.estimators
                    .iter()
                    .map(|e| e.name())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            (
                "rank",
                match self.rank {
                    RankChoice::Mdl => "mdl".into(),
                    RankChoice::Fixed(r) => r.to_string(),
                },
            ),
            ("alpha", self.alpha.to_string()),
            ("max_rank", self.max_rank.to_string()),
            ("hold_off", self.hold_off.to_string()),
            ("table_rows", join(&self.table_rows)),
        ]);
        if let Some(p) = &self.input {
            kv.push(("input", p.display().to_string()));
        }
        kv
    }

    /// The `#` comment line written at the top of every CSV.
    pub fn comment_line(&self) -> String {
        let body: Vec<String> = self
            .settings()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("# doppler-track {} {}", self.scenario, body.join(" "))
    }
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
