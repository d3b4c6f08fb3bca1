use std::fs::File;
use std::io::{BufReader, Write};

use rayon::prelude::*;

use super::{EstimatorKind, ExperimentSpec, Scenario};
use crate::channel::obs_io::{read_observations, write_observations};
use crate::channel::{simulate_frame, PilotObservation};
use crate::error::{Error, Result};
use crate::estimators::{accumulate_corr, estimate_from_corr, DopplerEstimate};
use crate::math::{bessel_j0, xi_ratio, TimingParams};
use crate::seed;
use crate::tracker::{track_all, TrackerState};

/// Seed of one Monte-Carlo trial: `seed ^ hash(trial, fd, snr)`.
pub fn trial_seed(seed: u64, trial: usize, fd: f64, snr_db: f64) -> u64 {
    seed::derive(seed, &[trial as u64, fd.to_bits(), snr_db.to_bits()])
}

/// Runs the configured scenario, writing its output to `out`.
pub fn run<W: Write>(spec: &ExperimentSpec, out: &mut W) -> Result<()> {
    spec.validate()?;
    match spec.scenario {
        Scenario::Table1 => run_table1(spec, out),
        Scenario::SweepSnr => run_sweep_snr(spec, out),
        Scenario::Converge => run_converge(spec, out),
        Scenario::Estimate => {
            let line = run_estimate(spec)?;
            writeln!(out, "{line}")?;
            Ok(())
        }
        Scenario::Simulate => run_simulate(spec, out),
    }
}

/// Analytic rows `fd_ts, J0(2 pi beta fd Ts), xi(beta)/xi(0), J0 / ratio`.
pub fn run_table1<W: Write>(spec: &ExperimentSpec, out: &mut W) -> Result<()> {
    let timing = spec.timing()?;
    writeln!(out, "{}", spec.comment_line())?;
    writeln!(out, "fd_ts,j0,xi_ratio,ratio")?;
    for &fd_ts in &spec.table_rows {
        let (j0, eta) = table_row(fd_ts, spec.beta, &timing);
        writeln!(out, "{fd_ts},{j0},{eta},{}", j0 / eta)?;
    }
    Ok(())
}

fn table_row(fd_ts: f64, beta: usize, timing: &TimingParams) -> (f64, f64) {
    let fd = fd_ts / timing.symbol_duration();
    let j0 = bessel_j0(2.0 * std::f64::consts::PI * beta as f64 * fd_ts);
    (j0, xi_ratio(beta, timing, fd))
}

/// One row per `(fd, snr, trial, estimator)`. All estimators of a trial
/// see the same simulated frame.
pub fn run_sweep_snr<W: Write>(spec: &ExperimentSpec, out: &mut W) -> Result<()> {
    let cfg = spec.ofdm()?;
    let profile = spec.channel_profile()?;
    let jobs = grid(spec);
    let blocks: Vec<String> = jobs
        .par_iter()
        .map(|&(fd, snr, trial)| {
            let mut block = String::new();
            let frame = simulate_frame(
                &cfg,
                &profile,
                fd,
                snr,
                trial_seed(spec.seed, trial, fd, snr),
                spec.frame_symbols,
            );
            for &kind in &spec.estimators {
                let result = frame
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|obs| estimate_with(spec, kind, obs));
                let row = match result {
                    Ok(e) => format!("{},{},{},{},", e.eta, e.fd_hz, e.rank, e.valid),
                    Err(err) => format!("NaN,NaN,0,false,{}", csv_safe(&err.to_string())),
                };
                block.push_str(&format!("{fd},{snr},{trial},{},{row}\n", kind.name()));
            }
            block
        })
        .collect();
    writeln!(out, "{}", spec.comment_line())?;
    writeln!(
        out,
        "fd_true,snr_db,trial,estimator,eta,fd_hat,rank,valid,error"
    )?;
    for b in blocks {
        out.write_all(b.as_bytes())?;
    }
    Ok(())
}

fn estimate_with(
    spec: &ExperimentSpec,
    kind: EstimatorKind,
    obs: &[PilotObservation],
) -> Result<DopplerEstimate> {
    let timing = spec.timing()?;
    match spec.batch_method(kind) {
        Some(method) => estimate_from_corr(&accumulate_corr(obs, spec.beta)?, &timing, method),
        None => {
            let pilots = obs.first().map_or(spec.pilots, |o| o.len());
            let (_, state) = track_all(spec.tracker_config(pilots), obs)?;
            final_estimate(&state, obs.len())
        }
    }
}

fn final_estimate(state: &TrackerState, symbols: usize) -> Result<DopplerEstimate> {
    state.latest().ok_or(Error::InsufficientData {
        needed: state.config().beta,
        got: symbols,
    })
}

/// Tracker trajectories: one row per emitted estimate per trial.
pub fn run_converge<W: Write>(spec: &ExperimentSpec, out: &mut W) -> Result<()> {
    let cfg = spec.ofdm()?;
    let profile = spec.channel_profile()?;
    let jobs = grid(spec);
    let blocks: Vec<Result<String>> = jobs
        .par_iter()
        .map(|&(fd, snr, trial)| {
            let obs = simulate_frame(
                &cfg,
                &profile,
                fd,
                snr,
                trial_seed(spec.seed, trial, fd, snr),
                spec.frame_symbols,
            )?;
            let (trace, _) = track_all(spec.tracker_config(cfg.pilots()), &obs)?;
            let mut block = String::new();
            for (n, e) in trace {
                block.push_str(&format!(
                    "{fd},{snr},{trial},{n},{},{},{},{}\n",
                    e.fd_hz, e.rank, e.eta, e.valid
                ));
            }
            Ok(block)
        })
        .collect();
    writeln!(out, "{}", spec.comment_line())?;
    writeln!(out, "fd_true,snr_db,trial,n,fd_hat,l_hat,eta,valid")?;
    for b in blocks {
        out.write_all(b?.as_bytes())?;
    }
    Ok(())
}

/// Runs the first selected estimator over the observation file and returns
/// `fd_hat=.. eta=.. l_hat=.. symbols=..`.
pub fn run_estimate(spec: &ExperimentSpec) -> Result<String> {
    let path = spec
        .input
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("estimate needs an input file".into()))?;
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let obs = read_observations(BufReader::new(file))?;
    if obs.len() <= spec.beta {
        return Err(Error::InsufficientData {
            needed: spec.beta,
            got: obs.len(),
        });
    }
    let e = estimate_with(spec, spec.estimators[0], &obs)?;
    Ok(format!(
        "fd_hat={} eta={} l_hat={} symbols={}",
        e.fd_hz,
        e.eta,
        e.rank,
        obs.len()
    ))
}

/// Writes one simulated observation record (first fd, first snr, trial 0)
/// in the text format read by `estimate`.
pub fn run_simulate<W: Write>(spec: &ExperimentSpec, out: &mut W) -> Result<()> {
    let (fd, snr) = (spec.fd[0], spec.snr[0]);
    let obs = simulate_frame(
        &spec.ofdm()?,
        &spec.channel_profile()?,
        fd,
        snr,
        trial_seed(spec.seed, 0, fd, snr),
        spec.frame_symbols,
    )?;
    writeln!(out, "{}", spec.comment_line())?;
    write_observations(out, &obs)
}

fn grid(spec: &ExperimentSpec) -> Vec<(f64, f64, usize)> {
    let mut jobs = Vec::new();
    for &fd in &spec.fd {
        for &snr in &spec.snr {
            for trial in 0..spec.trials {
                jobs.push((fd, snr, trial));
            }
        }
    }
    jobs
}

fn csv_safe(s: &str) -> String {
    s.replace([',', '\n'], ";")
}
