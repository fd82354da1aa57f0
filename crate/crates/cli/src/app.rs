//! Command-line surface: argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ConfigFile, DefectSweepSection, NoiseSweepSection, FULL_REPETITIONS};
use crate::error::CliError;
use crate::experiments::{
    run_decompose_check, run_defect_sweep, run_noise_sweep, run_shot_noise_tvd, run_train, write_decompose_check,
    write_defect_sweep, write_noise_sweep, write_shot_noise_tvd, write_train, SweepPoint,
};
use crate::output::sig12;

#[derive(Debug, Parser)]
#[command(
    name = "qgan",
    version,
    about = "Adversarial learning of two-ququart entangled states on a simulated photonic chip"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with one table per command and a shared [training] table.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path; overrides the config file. Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Use 100 repetitions per sweep point instead of the configured count.
    #[arg(long, global = true)]
    pub full: bool,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train once and write the per-half-turn trace.
    Train,
    /// Final fidelity versus phase-noise level.
    NoiseSweep,
    /// Final fidelity versus defect rate.
    DefectSweep,
    /// Total variation distance of Poisson-sampled uniform distributions.
    ShotNoiseTvd,
    /// Decompose-and-rebuild round trips of random unitaries.
    DecomposeCheck,
}

/// Summary lines go to stdout unless stdout already carries the CSV.
fn report(to_file: bool, line: &str) {
    if to_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn report_sweep(to_file: bool, axis: &str, points: &[SweepPoint]) {
    for p in points {
        let a = &p.aggregate;
        report(
            to_file,
            &format!(
                "{axis}={} mean_fidelity={} std={} mean_rounds={} n={}",
                sig12(p.value),
                sig12(a.mean_fidelity),
                sig12(a.std_fidelity),
                sig12(a.mean_rounds),
                a.n
            ),
        );
    }
}

/// Runs one parsed invocation.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let base = file.training.resolve()?;
    let reps = |configured: usize| {
        if cli.full {
            FULL_REPETITIONS
        } else {
            configured
        }
    };

    match cli.command {
        Command::Train => {
            let s = &file.train;
            let out = cli.out.as_deref().or(s.out.as_deref());
            let result = run_train(s, &base, cli.seed.or(s.seed).unwrap_or(0))?;
            write_train(&result, s.wall_time, out)?;
            report(
                out.is_some(),
                &format!(
                    "final_fidelity={} rounds={} termination={}",
                    sig12(result.trace.final_fidelity()),
                    result.trace.rounds,
                    result.trace.termination.label()
                ),
            );
        }
        Command::NoiseSweep => {
            let s = NoiseSweepSection { repetitions: reps(file.noise_sweep.repetitions), ..file.noise_sweep };
            let out = cli.out.as_deref().or(s.out.as_deref());
            let points = run_noise_sweep(&s, &base, cli.seed.or(s.seed).unwrap_or(0), cli.workers)?;
            write_noise_sweep(&points, out)?;
            report_sweep(out.is_some(), "sigma_over_pi", &points);
        }
        Command::DefectSweep => {
            let s = DefectSweepSection { repetitions: reps(file.defect_sweep.repetitions), ..file.defect_sweep };
            let out = cli.out.as_deref().or(s.out.as_deref());
            let points = run_defect_sweep(&s, &base, cli.seed.or(s.seed).unwrap_or(0), cli.workers)?;
            write_defect_sweep(&points, out)?;
            report_sweep(out.is_some(), "defect_rate", &points);
        }
        Command::ShotNoiseTvd => {
            let s = &file.shot_noise_tvd;
            let out = cli.out.as_deref().or(s.out.as_deref());
            let points = run_shot_noise_tvd(s, cli.seed.or(s.seed).unwrap_or(0), cli.workers)?;
            write_shot_noise_tvd(&points, out)?;
            for p in &points {
                report(out.is_some(), &format!("total_count={} mean_tvd={}", sig12(p.total_count), sig12(p.mean)));
            }
        }
        Command::DecomposeCheck => {
            let s = &file.decompose_check;
            let out = cli.out.as_deref().or(s.out.as_deref());
            let r = run_decompose_check(s, cli.seed.or(s.seed).unwrap_or(0))?;
            write_decompose_check(&r, out)?;
            report(
                out.is_some(),
                &format!(
                    "samples={} max_distance={} tolerance={} {}",
                    r.distances.len(),
                    sig12(r.max_distance),
                    sig12(r.tolerance),
                    if r.passed() { "PASS" } else { "FAIL" }
                ),
            );
            if !r.passed() {
                return Err(CliError::CheckFailed { max_distance: r.max_distance, tolerance: r.tolerance });
            }
        }
    }
    Ok(())
}
