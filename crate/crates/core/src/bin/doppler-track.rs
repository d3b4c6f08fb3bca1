use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use doppler_track::harness::{self, ExperimentSpec, Scenario};

const SEED_ENV: &str = "DOPPLER_TRACK_SEED";

/// Doppler spread estimation experiments for comb-pilot OFDM.
///
/// Settings are applied in order: scenario defaults, config file,
/// DOPPLER_TRACK_SEED, then command-line flags.
#[derive(Parser, Debug)]
#[command(version)]
struct Cli {
    /// table1 | sweep-snr | converge | estimate | simulate
    scenario: String,
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maximum Doppler spreads in Hz, comma separated.
    #[arg(long)]
    fd: Option<String>,
    /// SNRs in dB, comma separated; `inf` for noiseless.
    #[arg(long)]
    snr: Option<String>,
    /// Symbol lag.
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// frobenius | subspace-evd | tracker, comma separated.
    #[arg(long)]
    estimator: Option<String>,
    /// Symbols per simulated record.
    #[arg(long)]
    frame: Option<String>,
    /// Observation file for `estimate`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other setting, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

enum Failure {
    Config(String),
    Data(String),
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec, String> {
    let scenario: Scenario = cli.scenario.parse().map_err(|e| format!("{e}"))?;
    let mut spec = ExperimentSpec::defaults(scenario);
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        harness::parse_config(&text, &mut spec).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Ok(seed) = std::env::var(SEED_ENV) {
        spec.set("seed", &seed)
            .map_err(|e| format!("{SEED_ENV}: {e}"))?;
    }
    let flags = [
        ("fd", &cli.fd),
        ("snr", &cli.snr),
        ("beta", &cli.beta),
        ("trials", &cli.trials),
        ("seed", &cli.seed),
        ("estimator", &cli.estimator),
        ("frame_symbols", &cli.frame),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            spec.set(key, v).map_err(|e| e.to_string())?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        spec.set(k.trim(), v).map_err(|e| e.to_string())?;
    }
    if let Some(p) = &cli.input {
        spec.input = Some(p.clone());
    }
    if let Some(p) = &cli.out {
        spec.output = Some(p.clone());
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let spec = build_spec(cli).map_err(Failure::Config)?;
    let data = |e: &dyn std::fmt::Display| Failure::Data(e.to_string());
    match &spec.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| data(&format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            harness::run(&spec, &mut w).map_err(|e| data(&e))?;
            w.flush().map_err(|e| data(&e))
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            harness::run(&spec, &mut w).map_err(|e| data(&e))?;
            w.flush().map_err(|e| data(&e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("doppler-track: config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("doppler-track: {msg}");
            ExitCode::from(3)
        }
    }
}
