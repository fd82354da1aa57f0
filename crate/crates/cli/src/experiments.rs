//! Experiment runners. Each returns structured results; the `write_*`
//! functions render them to CSV.
//!
//! Repetition `r` of every sweep point shares its target state, training
//! seed and defect stream with repetition `r` of the other points, so
//! differences between points are not masked by different targets.

use std::path::Path;

use qgan_core::noise::{empirical_distribution, sample_counts, tvd};
use qgan_core::{
    clements_decompose, distance_up_to_global_phase, haar_random_unitary, mesh_unitary, random_true_state, train,
    DefectMask, NoiseModel, TrainingConfig, TrainingTrace, TwoQuquartState, Unitary,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{
    defects_per_arm, noise_model, DecomposeCheckSection, DefectSweepSection, NoiseSweepSection, ShotNoiseTvdSection,
    TrainSection,
};
use crate::error::CliError;
use crate::output::{sig12, CsvSink};
use crate::seeds::{derive, Purpose};

/// How broken shifters are drawn for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DefectSpec {
    PerArm(usize),
    Total(usize),
}

impl DefectSpec {
    pub fn total(&self) -> usize {
        match *self {
            DefectSpec::PerArm(n) => 2 * n,
            DefectSpec::Total(n) => n,
        }
    }

    fn draw(&self, seed: u64) -> Result<DefectMask, CliError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(match *self {
            DefectSpec::PerArm(0) | DefectSpec::Total(0) => DefectMask::empty(),
            DefectSpec::PerArm(n) => DefectMask::random(n, &mut rng)?,
            DefectSpec::Total(n) => DefectMask::random_total(n, &mut rng)?,
        })
    }
}

/// Target state of repetition `index` under `master`.
pub fn target_state(master: u64, index: u64) -> TwoQuquartState {
    random_true_state(&mut ChaCha8Rng::seed_from_u64(derive(master, index, Purpose::Target)))
}

/// Everything that fixes one training run.
pub fn run_config(
    base: &TrainingConfig,
    noise: NoiseModel,
    defects: DefectSpec,
    master: u64,
    index: u64,
) -> Result<TrainingConfig, CliError> {
    Ok(TrainingConfig {
        noise,
        defects: defects.draw(derive(master, index, Purpose::Defects))?,
        seed: derive(master, index, Purpose::Training),
        ..base.clone()
    })
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    if workers == Some(0) {
        return Err(CliError::Config("--workers must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

/// Runs `jobs` on `workers` threads; results come back in job order.
fn run_parallel<J, T, F>(jobs: &[J], workers: Option<usize>, f: F) -> Result<Vec<T>, CliError>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T, CliError> + Sync + Send,
{
    worker_pool(workers)?.install(|| jobs.par_iter().map(&f).collect())
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub trace: TrainingTrace,
    pub config: TrainingConfig,
}

pub fn run_train(section: &TrainSection, base: &TrainingConfig, master: u64) -> Result<TrainResult, CliError> {
    section.validate()?;
    let noise = noise_model(section.sigma_over_pi, section.total_count, base.noise.sample_reference)?;
    let config = run_config(base, noise, DefectSpec::PerArm(defects_per_arm(section.defect_rate)), master, 0)?;
    let tau = target_state(master, 0);
    let trace = train(&config, &tau)?;
    Ok(TrainResult { trace, config })
}

pub const TRAIN_HEADER: [&str; 6] = ["round", "phase", "d", "fidelity", "empty_counts", "wall_time"];

pub fn write_train(result: &TrainResult, wall_time: bool, out: Option<&Path>) -> Result<(), CliError> {
    let mut sink = CsvSink::open(out, &TRAIN_HEADER)?;
    for (rec, &t) in result.trace.records.iter().zip(&result.trace.wall_times) {
        sink.row([
            rec.round.to_string(),
            rec.player.label().to_string(),
            sig12(rec.d),
            sig12(rec.fidelity),
            u8::from(rec.empty_counts).to_string(),
            if wall_time { sig12(t) } else { String::new() },
        ])?;
    }
    sink.finish()
}

// ---------------------------------------------------------------- sweeps

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub repetition: usize,
    pub final_fidelity: f64,
    pub rounds: usize,
    pub converged: bool,
}

impl RunOutcome {
    fn from_trace(repetition: usize, trace: &TrainingTrace) -> Self {
        Self { repetition, final_fidelity: trace.final_fidelity(), rounds: trace.rounds, converged: trace.converged() }
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub n: usize,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub mean_rounds: f64,
    pub converged_fraction: f64,
}

impl Aggregate {
    pub fn of(runs: &[RunOutcome]) -> Self {
        let fids: Vec<f64> = runs.iter().map(|r| r.final_fidelity).collect();
        let (mean_fidelity, std_fidelity) = mean_std(&fids);
        let n = runs.len();
        Self {
            n,
            mean_fidelity,
            std_fidelity,
            mean_rounds: runs.iter().map(|r| r.rounds as f64).sum::<f64>() / n as f64,
            converged_fraction: runs.iter().filter(|r| r.converged).count() as f64 / n as f64,
        }
    }
}

/// All repetitions at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    /// Swept value: sigma in units of pi, or defect rate.
    pub value: f64,
    pub defects: DefectSpec,
    pub runs: Vec<RunOutcome>,
    pub aggregate: Aggregate,
}

struct SweepJob {
    repetition: usize,
    noise: NoiseModel,
    defects: DefectSpec,
}

fn run_sweep(
    values: &[f64],
    setting: impl Fn(usize) -> Result<(NoiseModel, DefectSpec), CliError>,
    repetitions: usize,
    base: &TrainingConfig,
    master: u64,
    workers: Option<usize>,
) -> Result<Vec<SweepPoint>, CliError> {
    let mut jobs = Vec::with_capacity(values.len() * repetitions);
    let mut specs = Vec::with_capacity(values.len());
    for point in 0..values.len() {
        let (noise, defects) = setting(point)?;
        specs.push(defects);
        jobs.extend((0..repetitions).map(|repetition| SweepJob { repetition, noise, defects }));
    }
    let outcomes = run_parallel(&jobs, workers, |job| {
        let r = job.repetition as u64;
        let config = run_config(base, job.noise, job.defects, master, r)?;
        let trace = train(&config, &target_state(master, r))?;
        Ok(RunOutcome::from_trace(job.repetition, &trace))
    })?;
    Ok(outcomes
        .chunks(repetitions)
        .zip(values.iter().zip(specs))
        .map(|(runs, (&value, defects))| SweepPoint {
            value,
            defects,
            runs: runs.to_vec(),
            aggregate: Aggregate::of(runs),
        })
        .collect())
}

pub fn run_noise_sweep(
    section: &NoiseSweepSection,
    base: &TrainingConfig,
    master: u64,
    workers: Option<usize>,
) -> Result<Vec<SweepPoint>, CliError> {
    section.validate()?;
    let sr = base.noise.sample_reference;
    run_sweep(
        &section.sigmas_over_pi,
        |i| Ok((noise_model(section.sigmas_over_pi[i], section.total_count, sr)?, DefectSpec::PerArm(0))),
        section.repetitions,
        base,
        master,
        workers,
    )
}

pub fn run_defect_sweep(
    section: &DefectSweepSection,
    base: &TrainingConfig,
    master: u64,
    workers: Option<usize>,
) -> Result<Vec<SweepPoint>, CliError> {
    section.validate()?;
    let noise = noise_model(section.sigma_over_pi, section.total_count, base.noise.sample_reference)?;
    let (values, specs): (Vec<f64>, Vec<DefectSpec>) = match &section.total_defects {
        Some(totals) => totals.iter().map(|&t| (t as f64 / 30.0, DefectSpec::Total(t))).unzip(),
        None => section.rates.iter().map(|&r| (r, DefectSpec::PerArm(defects_per_arm(r)))).unzip(),
    };
    run_sweep(&values, |i| Ok((noise, specs[i])), section.repetitions, base, master, workers)
}

pub const NOISE_SWEEP_HEADER: [&str; 11] = [
    "kind",
    "sigma_over_pi",
    "repetition",
    "final_fidelity",
    "rounds",
    "converged",
    "n",
    "mean_fidelity",
    "std_fidelity",
    "mean_rounds",
    "converged_fraction",
];

pub const DEFECT_SWEEP_HEADER: [&str; 12] = [
    "kind",
    "defect_rate",
    "defects_total",
    "repetition",
    "final_fidelity",
    "rounds",
    "converged",
    "n",
    "mean_fidelity",
    "std_fidelity",
    "mean_rounds",
    "converged_fraction",
];

/// Per-run rows of every point first, then one aggregate row per point.
/// Run rows leave the aggregate columns blank and vice versa.
fn write_sweep(
    points: &[SweepPoint],
    header: &[&str],
    key: impl Fn(&SweepPoint) -> Vec<String>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let blank = |n| std::iter::repeat_n(String::new(), n);
    let mut sink = CsvSink::open(out, header)?;
    for p in points {
        for r in &p.runs {
            let mut row = vec!["run".to_string()];
            row.extend(key(p));
            row.extend([
                r.repetition.to_string(),
                sig12(r.final_fidelity),
                r.rounds.to_string(),
                u8::from(r.converged).to_string(),
            ]);
            row.extend(blank(5));
            sink.row(row)?;
        }
    }
    for p in points {
        let a = &p.aggregate;
        let mut row = vec!["aggregate".to_string()];
        row.extend(key(p));
        row.extend(blank(4));
        row.extend([
            a.n.to_string(),
            sig12(a.mean_fidelity),
            sig12(a.std_fidelity),
            sig12(a.mean_rounds),
            sig12(a.converged_fraction),
        ]);
        sink.row(row)?;
    }
    sink.finish()
}

pub fn write_noise_sweep(points: &[SweepPoint], out: Option<&Path>) -> Result<(), CliError> {
    write_sweep(points, &NOISE_SWEEP_HEADER, |p| vec![sig12(p.value)], out)
}

pub fn write_defect_sweep(points: &[SweepPoint], out: Option<&Path>) -> Result<(), CliError> {
    write_sweep(points, &DEFECT_SWEEP_HEADER, |p| vec![sig12(p.value), p.defects.total().to_string()], out)
}

// ---------------------------------------------------------------- shot-noise TVD

#[derive(Debug, Clone, PartialEq)]
pub struct TvdPoint {
    pub total_count: f64,
    pub tvds: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// TVD between the uniform 16-outcome distribution and its Poisson-sampled
/// estimate, `repetitions` draws per count level.
pub fn run_shot_noise_tvd(
    section: &ShotNoiseTvdSection,
    master: u64,
    workers: Option<usize>,
) -> Result<Vec<TvdPoint>, CliError> {
    section.validate()?;
    let uniform = [1.0 / 16.0; 16];
    let indexed: Vec<(usize, f64)> = section.counts.iter().copied().enumerate().collect();
    run_parallel(&indexed, workers, |&(i, total_count)| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(master, i as u64, Purpose::Sampling));
        let tvds: Vec<f64> = (0..section.repetitions)
            .map(|_| tvd(&uniform, &empirical_distribution(&sample_counts(&uniform, total_count, &mut rng))))
            .collect();
        let (mean, std) = mean_std(&tvds);
        Ok(TvdPoint { total_count, tvds, mean, std })
    })
}

pub const TVD_HEADER: [&str; 6] = ["kind", "total_count", "repetition", "tvd", "mean_tvd", "std_tvd"];

pub fn write_shot_noise_tvd(points: &[TvdPoint], out: Option<&Path>) -> Result<(), CliError> {
    let mut sink = CsvSink::open(out, &TVD_HEADER)?;
    for p in points {
        for (r, &t) in p.tvds.iter().enumerate() {
            sink.row(["run".to_string(), sig12(p.total_count), r.to_string(), sig12(t), String::new(), String::new()])?;
        }
    }
    for p in points {
        sink.row([
            "aggregate".to_string(),
            sig12(p.total_count),
            String::new(),
            String::new(),
            sig12(p.mean),
            sig12(p.std),
        ])?;
    }
    sink.finish()
}

// ---------------------------------------------------------------- decompose check

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeReport {
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub tolerance: f64,
}

impl DecomposeReport {
    pub fn passed(&self) -> bool {
        self.max_distance < self.tolerance
    }
}

/// Decomposes and rebuilds `samples` unitaries, recording the
/// distance up to global phase of each round trip.
pub fn run_decompose_check(section: &DecomposeCheckSection, master: u64) -> Result<DecomposeReport, CliError> {
    section.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive(master, 0, Purpose::Sampling));
    let mut distances = Vec::with_capacity(section.samples);
    for _ in 0..section.samples {
        let u = if section.identity { Unitary::identity(4) } else { haar_random_unitary(4, &mut rng) };
        // A failed decomposition counts as a maximal miss rather than aborting.
        let d = match clements_decompose(u.matrix()) {
            Ok(phases) => distance_up_to_global_phase(&u, &mesh_unitary(&phases)),
            Err(_) => f64::INFINITY,
        };
        distances.push(d);
    }
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(DecomposeReport { distances, max_distance, tolerance: section.tolerance })
}

pub const DECOMPOSE_HEADER: [&str; 6] = ["kind", "sample", "distance", "max_distance", "tolerance", "pass"];

pub fn write_decompose_check(report: &DecomposeReport, out: Option<&Path>) -> Result<(), CliError> {
    let mut sink = CsvSink::open(out, &DECOMPOSE_HEADER)?;
    for (i, &d) in report.distances.iter().enumerate() {
        sink.row(["run".to_string(), i.to_string(), sig12(d), String::new(), String::new(), String::new()])?;
    }
    sink.row([
        "aggregate".to_string(),
        String::new(),
        String::new(),
        sig12(report.max_distance),
        sig12(report.tolerance),
        u8::from(report.passed()).to_string(),
    ])?;
    sink.finish()
}
