//! `tetron`: batch runner for the tetron simulator.
//!
//! Every run writes its result files plus `manifest.json` into the output
//! directory. Exit codes: 0 ok, 1 configuration error, 2 numerical
//! invariant failure, 3 regression check failure.

mod checks;
mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;
use tetron_core::channels::derive_noise;

use config::{
    physical_from_pairs, resolve_noise, BraidSection, FileConfig, LifetimeSection, QedSection, TgateSection,
};
use experiments::{Mode, Outcome};
use output::{json, Artifacts};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical invariant failed: {0}")]
    Numerical(String),
    #[error("regression check failed: {0}")]
    Regression(String),
}

impl CliError {
    pub fn from_core(e: tetron_core::Error) -> CliError {
        use tetron_core::Error as E;
        match e {
            E::Numerical(_) | E::ZeroAcceptance | E::NotTracePreserving(_) | E::Fit(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Regression(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tetron", version, about = "Exact simulation experiments for measurement-based tetron qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for sampled modes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for grid scans and shot batches.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Exact probabilities (the default).
    #[arg(long, global = true, conflicts_with = "shots")]
    exact: bool,
    /// Sample with this many shots instead of computing exactly.
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also run the embedded regression checks for this experiment.
    #[arg(long, global = true)]
    check: bool,
    /// Noise override, e.g. `--noise p_a=0.05`; repeatable.
    #[arg(long = "noise", global = true, value_name = "KEY=VALUE")]
    noise: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Operational assignment error and bias of the two instruments, plus
    /// rebit tomography of their outcome maps.
    Mbqb {
        /// Independent random streams in sampled mode.
        #[arg(long)]
        batches: Option<usize>,
    },
    /// Average gate fidelity of a measurement-based Clifford over (p1, p_a).
    Braid {
        #[arg(long)]
        class: Option<String>,
        #[arg(long)]
        p2: Option<f64>,
        /// `default` (21 points on [0, 0.2]) or a number of points per axis.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Logical improvement of the ladder code over a (p1, p2) grid.
    Qed {
        #[arg(long)]
        pa: Option<f64>,
        /// `default` (25 log-spaced points on [1e-4, 0.1]) or a number of points.
        #[arg(long)]
        scan: Option<String>,
        /// Comma-separated numbers of rounds for the decay fits.
        #[arg(long, value_delimiter = ',')]
        rounds: Option<Vec<usize>>,
    },
    /// Repeated-measurement contrast against idle time.
    Lifetime {
        #[arg(long)]
        basis: Option<String>,
        /// Comma-separated idle lengths.
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
    },
    /// T-state preparation by a timed coupling pulse.
    Tgate {
        /// Comma-separated phase errors.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        delta: Option<Vec<f64>>,
    },
    /// Noise rates from device parameters.
    DeriveNoise {
        /// Device parameter, e.g. `--set snr=3.7`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// All embedded regression checks.
    Check,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Mbqb { .. } => "mbqb",
            Command::Braid { .. } => "braid",
            Command::Qed { .. } => "qed",
            Command::Lifetime { .. } => "lifetime",
            Command::Tgate { .. } => "tgate",
            Command::DeriveNoise { .. } => "derive-noise",
            Command::Check => "check",
        }
    }
}

fn grid_points(arg: &Option<String>, default: usize) -> Result<Option<usize>, CliError> {
    match arg.as_deref() {
        None => Ok(None),
        Some("default") => Ok(Some(default)),
        Some(n) => n
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("grid must be `default` or a number of points, got {n:?}"))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let name = cli.command.name();
    if let Some(e) = &file.experiment {
        if e != name {
            return Err(CliError::Config(format!("config selects experiment {e:?} but the command is {name:?}")));
        }
    }
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let out = cli.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let workers = cli.workers.or(file.workers);
    if workers == Some(0) {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    let mbqb_section = file.mbqb.clone().unwrap_or_default();
    let mode = match (cli.exact, cli.shots) {
        (_, Some(0)) => return Err(CliError::Config("shots must be positive".into())),
        (_, Some(n)) => Mode::Shots(n),
        (true, None) => Mode::Exact,
        (false, None) => match (name, mbqb_section.exact, mbqb_section.shots) {
            ("mbqb", Some(false), Some(n)) | ("mbqb", None, Some(n)) => Mode::Shots(n),
            _ => Mode::Exact,
        },
    };
    let physical = match &cli.command {
        Command::DeriveNoise { params } => physical_from_pairs(file.physical, params)?,
        _ => file.physical,
    };
    let resolved = resolve_noise(&file, physical, &cli.noise)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers:?} workers: {e}")))?;

    let outcome: Outcome = pool.install(|| -> Result<Outcome, CliError> {
        match &cli.command {
            Command::Mbqb { batches } => {
                let mut section = mbqb_section.clone();
                section.batches = batches.or(section.batches);
                experiments::mbqb(&resolved.noise, mode, seed, &section)
            }
            Command::Braid { class, p2, grid } => {
                let mut s: BraidSection = file.braid.clone().unwrap_or_default();
                s.class = class.clone().or(s.class);
                s.p2 = p2.or(s.p2);
                s.points = grid_points(grid, 21)?.or(s.points);
                experiments::braid(&s, mode)
            }
            Command::Qed { pa, scan, rounds } => {
                let mut s: QedSection = file.qed.clone().unwrap_or_default();
                s.p_a = pa.or(s.p_a);
                s.points = grid_points(scan, 25)?.or(s.points);
                s.rounds = rounds.clone().or(s.rounds);
                experiments::qed(&s, mode)
            }
            Command::Lifetime { basis, lengths } => {
                let mut s: LifetimeSection = file.lifetime.clone().unwrap_or_default();
                s.basis = basis.clone().or(s.basis);
                s.lengths = lengths.clone().or(s.lengths);
                experiments::lifetime(&resolved.noise, &s, mode)
            }
            Command::Tgate { delta } => {
                let mut s: TgateSection = file.tgate.clone().unwrap_or_default();
                s.deltas = delta.clone().or(s.deltas);
                experiments::tgate(&s, mode)
            }
            Command::DeriveNoise { .. } => {
                let phys = resolved
                    .physical
                    .ok_or_else(|| CliError::Config("derive-noise needs a [physical] section or --set KEY=VALUE".into()))?;
                let noise = derive_noise(&phys).map_err(CliError::from_core)?;
                let mut artifacts = Artifacts::default();
                artifacts.add("noise.json", json(&json!({ "physical": phys, "noise": noise })));
                Ok(Outcome {
                    artifacts,
                    params: json!({}),
                    summary: format!(
                        "p_a = {:.4e}, p1 = {:.4e}, p2 = {:.4e}, theta = {:.4e}",
                        noise.p_a, noise.p1, noise.p2, noise.theta
                    ),
                })
            }
            Command::Check => Ok(Outcome {
                artifacts: Artifacts::default(),
                params: json!({}),
                summary: String::new(),
            }),
        }
    })?;

    let mut artifacts = outcome.artifacts;
    let check_results = match (&cli.command, cli.check) {
        (Command::Check, _) => Some(checks::run(None)),
        (_, true) => Some(checks::run(Some(name))),
        _ => None,
    };
    if let Some(results) = &check_results {
        artifacts.add("check.json", json(results));
    }
    let mut files = artifacts.names();
    files.push("manifest.json".into());
    let manifest = json!({
        "tool": "tetron",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": name,
        "config_file": cli.config,
        "config": file,
        "command_line": std::env::args().skip(1).collect::<Vec<_>>(),
        "seed": seed,
        "workers": workers,
        "mode": match mode { Mode::Exact => json!("exact"), Mode::Shots(n) => json!({ "shots": n }) },
        "noise": resolved.noise,
        "derived_noise": resolved.derived,
        "physical": resolved.physical,
        "parameters": outcome.params,
        "files": files,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    artifacts.add("manifest.json", json(&manifest));
    artifacts.write(&out)?;

    if !outcome.summary.is_empty() {
        println!("{name}: {}", outcome.summary);
    }
    if let Some(results) = check_results {
        for r in &results {
            println!("{} {} [{}] {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.module, r.detail);
        }
        let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
        if !failed.is_empty() {
            return Err(CliError::Regression(failed.join(", ")));
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tetron: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        use tetron_core::Error as E;
        assert_eq!(CliError::from_core(E::Numerical("trace".into())).code(), 2);
        assert_eq!(CliError::from_core(E::ZeroAcceptance).code(), 2);
        assert_eq!(CliError::from_core(E::Invalid("x".into())).code(), 1);
        assert_eq!(CliError::Regression("pin".into()).code(), 3);
    }
}
