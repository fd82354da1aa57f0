//! The adversarial game between generator and discriminator.
//!
//! Payoff is the measurement difference
//! `d = |tr[M(theta_D) rho(theta_G)] - tr[M(theta_D) tau]|`. The
//! discriminator ascends it, the generator descends it, each for a few
//! parameter-shift gradient steps per round.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::noise::{
    apply_defects, estimate_probability, perturb_phases, sample_counts, DefectMask, NoiseModel, ShotNoise,
};
use crate::projector::{projection_phases, BasisParams};
use crate::state::{
    expectation, fidelity, generate_state, outcome_distribution, DiscriminatorParams, GeneratorParams, TwoQuquartState,
    COINCIDENCE_OUTCOME, DISCRIMINATOR_PHASES, GENERATOR_PHASES,
};

/// Below this the measured difference carries no usable sign.
const SIGN_DEADBAND: f64 = 1e-12;

/// How a measurement setting is read out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasurementChannel {
    /// Exact probabilities at the nominal phases.
    Exact,
    /// Fresh phase noise on all 42 phases and optional shot noise per evaluation.
    Noisy(NoiseModel),
}

impl MeasurementChannel {
    pub fn from_model(model: NoiseModel) -> Self {
        if model.sigma == 0.0 && model.shots == ShotNoise::Exact && !model.sample_reference {
            Self::Exact
        } else {
            Self::Noisy(model)
        }
    }
}

/// One readout of the generated and reference expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub generated: f64,
    pub reference: f64,
    /// Shot sampling produced no counts at all.
    pub empty: bool,
}

impl Measurement {
    /// Signed difference inside the payoff.
    pub fn signed(&self) -> f64 {
        self.generated - self.reference
    }

    pub fn difference(&self) -> f64 {
        self.signed().abs()
    }
}

fn read_out<R: Rng + ?Sized>(
    state: &TwoQuquartState,
    d: &DiscriminatorParams,
    shots: ShotNoise,
    rng: &mut R,
) -> (f64, bool) {
    match shots {
        ShotNoise::Exact => (expectation(state, d), false),
        ShotNoise::Poisson { total_count } => {
            let counts = sample_counts(&outcome_distribution(state, d), total_count, rng);
            let est = estimate_probability(&counts, COINCIDENCE_OUTCOME);
            (est.probability, est.empty)
        }
    }
}

/// Measures both expectations of `M(d)` through `ch`. `g` is taken as the
/// phases actually programmed (defects already pinned).
pub fn measure<R: Rng + ?Sized>(
    g: &GeneratorParams,
    d: &DiscriminatorParams,
    tau: &TwoQuquartState,
    ch: &MeasurementChannel,
    rng: &mut R,
) -> Measurement {
    match ch {
        MeasurementChannel::Exact => {
            Measurement { generated: expectation(&generate_state(g), d), reference: expectation(tau, d), empty: false }
        }
        MeasurementChannel::Noisy(model) => {
            let g_noisy =
                GeneratorParams::from_flat(&perturb_phases(&g.to_flat(), model.sigma, rng)).expect("length preserved");
            let d_noisy = DiscriminatorParams::from_flat(&perturb_phases(&d.to_flat(), model.sigma, rng))
                .expect("length preserved");
            let (generated, empty) = read_out(&generate_state(&g_noisy), &d_noisy, model.shots, rng);
            let (reference, ref_empty) = if model.sample_reference {
                read_out(tau, &d_noisy, model.shots, rng)
            } else {
                (expectation(tau, d), false)
            };
            Measurement { generated, reference, empty: empty || ref_empty }
        }
    }
}

/// `|E_ch[M(d) on rho(g)] - <tau|M(d)|tau>|`.
pub fn measurement_difference<R: Rng + ?Sized>(
    g: &GeneratorParams,
    d: &DiscriminatorParams,
    tau: &TwoQuquartState,
    ch: &MeasurementChannel,
    rng: &mut R,
) -> f64 {
    measure(g, d, tau, ch, rng).difference()
}

/// Parameter-shift gradient: `[f(theta_k + pi/2) - f(theta_k - pi/2)] / 2`.
///
/// Exact whenever `objective` is a first-order trigonometric polynomial in
/// each phase, which every circuit expectation here is.
pub fn param_shift_grad<F>(objective: F, phases: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    param_shift_grad_where(objective, phases, |_| true)
}

/// Like [`param_shift_grad`], but components with `active(k) == false` are
/// left at zero without evaluating the objective.
pub fn param_shift_grad_where<F, A>(mut objective: F, phases: &[f64], active: A) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
    A: Fn(usize) -> bool,
{
    let mut shifted = phases.to_vec();
    (0..phases.len())
        .map(|k| {
            if !active(k) {
                return 0.0;
            }
            shifted[k] = phases[k] + FRAC_PI_2;
            let plus = objective(&shifted);
            shifted[k] = phases[k] - FRAC_PI_2;
            let minus = objective(&shifted);
            shifted[k] = phases[k];
            (plus - minus) / 2.0
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRule {
    /// Post-discriminator difference regarded as indistinguishable.
    pub epsilon_d: f64,
    /// Consecutive rounds below `epsilon_d` needed to stop.
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub max_rounds: usize,
    pub inner_steps_d: usize,
    pub inner_steps_g: usize,
    pub lr_d: f64,
    pub lr_g: f64,
    /// Both learning rates are multiplied by this once per round.
    pub lr_decay: f64,
    pub noise: NoiseModel,
    pub defects: DefectMask,
    pub convergence: ConvergenceRule,
    pub seed: u64,
    pub record_snapshots: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_rounds: 300,
            // Tuned: a weaker discriminator stalls where both expectations vanish.
            inner_steps_d: 20,
            inner_steps_g: 10,
            lr_d: 1.5,
            lr_g: 0.5,
            lr_decay: 1.0,
            noise: NoiseModel::noiseless(),
            defects: DefectMask::empty(),
            convergence: ConvergenceRule { epsilon_d: 0.02, patience: 30 },
            seed: 0,
            record_snapshots: false,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.max_rounds < 1 {
            return bad("max_rounds must be >= 1".into());
        }
        // Zero rates are allowed: they freeze a player, which the trace
        // sanity checks rely on.
        if !(self.lr_d >= 0.0 && self.lr_g >= 0.0 && self.lr_d.is_finite() && self.lr_g.is_finite()) {
            return bad(format!("learning rates must be finite and >= 0, got {} and {}", self.lr_d, self.lr_g));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad(format!("lr_decay must lie in (0, 1], got {}", self.lr_decay));
        }
        if self.convergence.patience < 1 {
            return bad("patience must be >= 1".into());
        }
        if self.convergence.epsilon_d.is_nan() || self.convergence.epsilon_d < 0.0 {
            return bad(format!("epsilon_d must be >= 0, got {}", self.convergence.epsilon_d));
        }
        self.noise.validate()
    }

    pub fn channel(&self) -> MeasurementChannel {
        MeasurementChannel::from_model(self.noise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Discriminator,
    Generator,
}

impl Player {
    pub fn label(&self) -> &'static str {
        match self {
            Player::Discriminator => "D",
            Player::Generator => "G",
        }
    }
}

/// State of the game after one player's turn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfTurn {
    /// 1-based round index.
    pub round: usize,
    pub player: Player,
    /// Measured difference at the end of the turn.
    pub d: f64,
    /// Fidelity of the noiseless, defect-pinned generated state with the target.
    pub fidelity: f64,
    /// Some readout during the turn recorded zero total counts.
    pub empty_counts: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    pub round: usize,
    pub generator: GeneratorParams,
    pub discriminator: DiscriminatorParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxRounds,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxRounds => "max_rounds",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<HalfTurn>,
    pub initial_fidelity: f64,
    pub termination: Termination,
    /// Rounds played.
    pub rounds: usize,
    pub snapshots: Option<Vec<Snapshot>>,
    /// Seconds since training start at the end of each half-turn. Kept out
    /// of `records` so traces stay comparable across runs.
    pub wall_times: Vec<f64>,
}

impl TrainingTrace {
    pub fn final_fidelity(&self) -> f64 {
        self.records.last().map_or(self.initial_fidelity, |r| r.fidelity)
    }

    pub fn final_difference(&self) -> Option<f64> {
        self.records.last().map(|r| r.d)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

fn random_discriminator<R: Rng + ?Sized>(rng: &mut R) -> DiscriminatorParams {
    let mut draw = || BasisParams::from_array(std::array::from_fn(|_| rng.random_range(0.0..TAU)));
    let signal = projection_phases(&draw());
    let idler = projection_phases(&draw());
    DiscriminatorParams { signal, idler }
}

/// A game in progress.
pub struct Game<'a> {
    config: &'a TrainingConfig,
    tau: &'a TwoQuquartState,
    channel: MeasurementChannel,
    generator: GeneratorParams,
    discriminator: DiscriminatorParams,
    rng: ChaCha8Rng,
    lr_d: f64,
    lr_g: f64,
    empty_counts: bool,
}

impl<'a> Game<'a> {
    /// Generator at the identity (then defect-pinned), discriminator at a
    /// random projector pair, both drawn from `config.seed`.
    pub fn new(config: &'a TrainingConfig, tau: &'a TwoQuquartState) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let discriminator = random_discriminator(&mut rng);
        Ok(Self::from_parts(config, tau, GeneratorParams::identity(), discriminator, rng))
    }

    pub fn with_params(
        config: &'a TrainingConfig,
        tau: &'a TwoQuquartState,
        generator: GeneratorParams,
        discriminator: DiscriminatorParams,
    ) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self::from_parts(config, tau, generator, discriminator, rng))
    }

    fn from_parts(
        config: &'a TrainingConfig,
        tau: &'a TwoQuquartState,
        generator: GeneratorParams,
        discriminator: DiscriminatorParams,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            config,
            tau,
            channel: config.channel(),
            generator: apply_defects(&generator, &config.defects),
            discriminator,
            rng,
            lr_d: config.lr_d,
            lr_g: config.lr_g,
            empty_counts: false,
        }
    }

    pub fn generator(&self) -> &GeneratorParams {
        &self.generator
    }

    pub fn discriminator(&self) -> &DiscriminatorParams {
        &self.discriminator
    }

    pub fn fidelity(&self) -> f64 {
        fidelity(&generate_state(&self.generator), self.tau)
    }

    fn measure_at(&mut self, g: &GeneratorParams, d: &DiscriminatorParams) -> Measurement {
        let m = measure(g, d, self.tau, &self.channel, &mut self.rng);
        self.empty_counts |= m.empty;
        m
    }

    /// Fresh readout of the payoff at the current parameters.
    pub fn measure_difference(&mut self) -> f64 {
        let (g, d) = (self.generator, self.discriminator);
        self.measure_at(&g, &d).difference()
    }

    /// Ascent direction of the payoff in the discriminator phases,
    /// `sign(delta) * grad_D delta`, zero when the measured difference sits
    /// inside the sign deadband.
    pub fn discriminator_gradient(&mut self) -> Vec<f64> {
        let (g, d) = (self.generator, self.discriminator);
        let delta = self.measure_at(&g, &d).signed();
        if delta.abs() < SIGN_DEADBAND {
            return vec![0.0; DISCRIMINATOR_PHASES];
        }
        let sign = delta.signum();
        let grad = param_shift_grad(
            |p| {
                let d = DiscriminatorParams::from_flat(p).expect("fixed length");
                self.measure_at(&g, &d).signed()
            },
            &d.to_flat(),
        );
        grad.into_iter().map(|x| sign * x).collect()
    }

    /// Ascent direction of the payoff in the generator phases,
    /// `sign(delta) * grad_G delta`; pinned phases get zero.
    pub fn generator_gradient(&mut self) -> Vec<f64> {
        let (g, d) = (self.generator, self.discriminator);
        let delta = self.measure_at(&g, &d).signed();
        if delta.abs() < SIGN_DEADBAND {
            return vec![0.0; GENERATOR_PHASES];
        }
        let sign = delta.signum();
        let defects = &self.config.defects;
        let tau = self.tau;
        let channel = self.channel;
        let rng = &mut self.rng;
        let empty = &mut self.empty_counts;
        let grad = param_shift_grad_where(
            |p| {
                let g = GeneratorParams::from_flat(p).expect("fixed length");
                let m = measure(&g, &d, tau, &channel, rng);
                *empty |= m.empty;
                m.signed()
            },
            &g.to_flat(),
            |k| !defects.is_pinned_flat(k),
        );
        grad.into_iter().map(|x| sign * x).collect()
    }

    fn discriminator_step(&mut self) {
        let grad = self.discriminator_gradient();
        let flat = self.discriminator.to_flat();
        let updated: Vec<f64> = flat.iter().zip(&grad).map(|(p, gr)| p + self.lr_d * gr).collect();
        self.discriminator = DiscriminatorParams::from_flat(&updated).expect("fixed length");
    }

    fn generator_step(&mut self) {
        let grad = self.generator_gradient();
        let flat = self.generator.to_flat();
        let updated: Vec<f64> = flat.iter().zip(&grad).map(|(p, gr)| p - self.lr_g * gr).collect();
        let g = GeneratorParams::from_flat(&updated).expect("fixed length");
        self.generator = apply_defects(&g, &self.config.defects);
    }

    /// `inner_steps_d` ascent steps on the payoff; returns the measured
    /// difference afterwards.
    pub fn discriminator_turn(&mut self) -> f64 {
        for _ in 0..self.config.inner_steps_d {
            self.discriminator_step();
        }
        self.measure_difference()
    }

    /// `inner_steps_g` descent steps on the payoff; returns the measured
    /// difference afterwards.
    pub fn generator_turn(&mut self) -> f64 {
        for _ in 0..self.config.inner_steps_g {
            self.generator_step();
        }
        self.measure_difference()
    }

    fn end_round(&mut self) {
        self.lr_d *= self.config.lr_decay;
        self.lr_g *= self.config.lr_decay;
    }

    fn take_empty_flag(&mut self) -> bool {
        std::mem::take(&mut self.empty_counts)
    }
}

/// Plays the minimax game to convergence or `max_rounds`.
pub fn train(config: &TrainingConfig, tau: &TwoQuquartState) -> Result<TrainingTrace> {
    let mut game = Game::new(config, tau)?;
    Ok(play(&mut game))
}

/// Continues `game` under its configuration, recording every half-turn.
pub fn play(game: &mut Game<'_>) -> TrainingTrace {
    let config = game.config;
    let start = Instant::now();
    let initial_fidelity = game.fidelity();
    let mut records = Vec::with_capacity(2 * config.max_rounds);
    let mut wall_times = Vec::with_capacity(2 * config.max_rounds);
    let mut snapshots = config.record_snapshots.then(Vec::new);
    let mut quiet_rounds = 0;
    let mut termination = Termination::MaxRounds;
    let mut rounds = 0;

    for round in 1..=config.max_rounds {
        rounds = round;
        for player in [Player::Discriminator, Player::Generator] {
            let d = match player {
                Player::Discriminator => game.discriminator_turn(),
                Player::Generator => game.generator_turn(),
            };
            if player == Player::Discriminator {
                quiet_rounds = if d < config.convergence.epsilon_d { quiet_rounds + 1 } else { 0 };
            }
            records.push(HalfTurn {
                round,
                player,
                d,
                fidelity: game.fidelity(),
                empty_counts: game.take_empty_flag(),
            });
            wall_times.push(start.elapsed().as_secs_f64());
        }
        if let Some(s) = snapshots.as_mut() {
            s.push(Snapshot { round, generator: game.generator, discriminator: game.discriminator });
        }
        game.end_round();
        if quiet_rounds >= config.convergence.patience {
            termination = Termination::Converged;
            break;
        }
    }

    TrainingTrace { records, initial_fidelity, termination, rounds, snapshots, wall_times }
}
