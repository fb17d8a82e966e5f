//! The smoothed Frank-Wolfe learner and the shared run loop.
//!
//! Each iteration `t` every player, independently,
//! 1. obtains a gradient `F_{i,t}` (exact, or estimated from `M_t` oracle plays),
//! 2. forms the KL-proximal direction `s̃ = smoothed_direction(F_{i,t}, π_{i,t-1}, η)`,
//! 3. projects it onto the exploration simplex, `s = Π_{Δ(A_i; ε_t)}(s̃)`,
//! 4. moves `π_{i,t} = π_{i,t-1} + γ_t (s - π_{i,t-1})`.
//!
//! Because `ε_t` is nonincreasing and the uniform start lies in every
//! `Δ(A_i; ε)`, each iterate stays in `Δ(A_i; ε_t)` and importance weights
//! remain finite. The four comparison algorithms in [`crate::baselines`] run
//! through the same loop and the same [`GradientSource`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{entropic_step, hard_fw_direction, ogd_step};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::metrics::{nash_gap, smoothed_gap, DEFAULT_GQRE_TOL};
use crate::oracle::{estimate_gradients, simulate};
use crate::perturbed::payoff_gradients;
use crate::profile::{check_distribution, StrategyProfile};
use crate::regularizer::RegularizerSet;
use crate::schedule::{Schedule, StepParams};
use crate::simplex::{epsilon_projection, smoothed_direction};
use crate::trajectory::{IterationRecord, RunMetadata, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    SmoothedFw,
    HardFw,
    Extragradient,
    Ogd,
    #[serde(rename = "pgd", alias = "adaptive-pgd")]
    AdaptivePgd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] =
        [Algorithm::SmoothedFw, Algorithm::HardFw, Algorithm::Extragradient, Algorithm::Ogd, Algorithm::AdaptivePgd];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SmoothedFw => "smoothed-fw",
            Algorithm::HardFw => "hard-fw",
            Algorithm::Extragradient => "extragradient",
            Algorithm::Ogd => "ogd",
            Algorithm::AdaptivePgd => "pgd",
        }
    }

    /// Frank-Wolfe variants use `γ_t` as a convex-combination weight, which
    /// must lie in `(0, 1]`.
    pub fn is_frank_wolfe(self) -> bool {
        matches!(self, Algorithm::SmoothedFw | Algorithm::HardFw)
    }

    fn known_names() -> String {
        Self::ALL.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "smoothed-fw" | "sfw" => Ok(Algorithm::SmoothedFw),
            "hard-fw" | "fw" => Ok(Algorithm::HardFw),
            "extragradient" | "eg" => Ok(Algorithm::Extragradient),
            "ogd" => Ok(Algorithm::Ogd),
            "pgd" | "adaptive-pgd" => Ok(Algorithm::AdaptivePgd),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm '{other}' (known: {})",
                Self::known_names()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Closed-form gradients from the full game.
    Exact,
    /// Importance-weighted estimates from simulated play.
    Oracle,
}

impl FromStr for GradientMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(GradientMode::Exact),
            "oracle" => Ok(GradientMode::Oracle),
            other => Err(Error::InvalidParameter(format!("unknown gradient mode '{other}' (exact, oracle)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Uniform,
    Profile(StrategyProfile),
}

/// Which metrics a run records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordFlags {
    pub smoothed_gap: bool,
    pub nash_gap: bool,
    /// Keep every iterate in the trajectory.
    pub profiles: bool,
    /// Fill `wall_ms`; off by default so outputs are reproducible byte for byte.
    pub timing: bool,
    /// Evaluate metrics every `cadence` iterations (and at `T`). `None`
    /// selects [`auto_cadence`].
    pub cadence: Option<usize>,
}

impl Default for RecordFlags {
    fn default() -> Self {
        Self { smoothed_gap: true, nash_gap: true, profiles: false, timing: false, cadence: None }
    }
}

impl RecordFlags {
    pub fn none() -> Self {
        Self { smoothed_gap: false, nash_gap: false, ..Self::default() }
    }
}

/// Every iteration up to `T = 2000`, every 10th beyond.
pub fn auto_cadence(iterations: usize) -> usize {
    if iterations <= 2000 {
        1
    } else {
        10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub gradient_mode: GradientMode,
    pub iterations: usize,
    pub init: Init,
    pub record: RecordFlags,
    /// Recorded in the metadata only; the caller seeds the generator.
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, schedule: Schedule, gradient_mode: GradientMode, iterations: usize) -> Self {
        Self { algorithm, schedule, gradient_mode, iterations, init: Init::Uniform, record: RecordFlags::default(), seed: None }
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn with_record(mut self, record: RecordFlags) -> Self {
        self.record = record;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Supplies per-player gradients of the perturbed utilities.
pub trait GradientSource {
    /// Gradients at `profile`; `plays` is the oracle budget for this call.
    fn gradients(&mut self, profile: &StrategyProfile, plays: u64) -> Result<Vec<Vec<f64>>>;
}

/// Exact gradients; ignores `plays`.
pub struct ExactGradients<'a> {
    pub game: &'a Game,
    pub regs: &'a RegularizerSet,
}

impl GradientSource for ExactGradients<'_> {
    fn gradients(&mut self, profile: &StrategyProfile, _plays: u64) -> Result<Vec<Vec<f64>>> {
        payoff_gradients(self.game, self.regs, profile)
    }
}

/// Oracle estimates: simulate, then importance-weight.
pub struct OracleGradients<'a, R: Rng> {
    pub game: &'a Game,
    pub regs: &'a RegularizerSet,
    pub rng: &'a mut R,
}

impl<R: Rng> GradientSource for OracleGradients<'_, R> {
    fn gradients(&mut self, profile: &StrategyProfile, plays: u64) -> Result<Vec<Vec<f64>>> {
        let report = simulate(self.game, profile, plays, self.rng)?;
        Ok(estimate_gradients(&report, self.regs)?.into_iter().map(|e| e.gradient).collect())
    }
}

/// Runs `config` with gradients from the configured mode.
pub fn run<R: Rng>(game: &Game, regs: &RegularizerSet, config: &RunConfig, rng: &mut R) -> Result<Trajectory> {
    match config.gradient_mode {
        GradientMode::Exact => run_with_source(game, regs, config, &mut ExactGradients { game, regs }),
        GradientMode::Oracle => run_with_source(game, regs, config, &mut OracleGradients { game, regs, rng }),
    }
}

/// Smoothed Frank-Wolfe.
#[allow(clippy::too_many_arguments)]
pub fn run_smoothed_fw<R: Rng>(
    game: &Game,
    regs: &RegularizerSet,
    schedule: Schedule,
    gradient_mode: GradientMode,
    iterations: usize,
    init: Init,
    rng: &mut R,
    record: RecordFlags,
) -> Result<Trajectory> {
    let config = RunConfig::new(Algorithm::SmoothedFw, schedule, gradient_mode, iterations)
        .with_init(init)
        .with_record(record);
    run(game, regs, &config, rng)
}

/// One smoothed Frank-Wolfe update for one player.
pub fn smoothed_fw_update(pi: &[f64], gradient: &[f64], params: StepParams, eta: f64) -> Result<Vec<f64>> {
    let direction = smoothed_direction(gradient, pi, eta)?;
    let s = epsilon_projection(&direction, params.epsilon)?;
    Ok(convex_step(pi, &s, params.gamma))
}

pub(crate) fn convex_step(pi: &[f64], s: &[f64], gamma: f64) -> Vec<f64> {
    pi.iter().zip(s).map(|(p, q)| p + gamma * (q - p)).collect()
}

fn initial_profile(game: &Game, init: &Init, epsilon: f64) -> Result<(Vec<Vec<f64>>, bool)> {
    match init {
        Init::Uniform => Ok((StrategyProfile::uniform(game.action_counts()).distributions, false)),
        Init::Profile(p) => {
            game.check_profile(p)?;
            let mut clipped = false;
            let mut out = Vec::with_capacity(p.num_players());
            for d in &p.distributions {
                check_distribution(d)?;
                let q = epsilon_projection(d, epsilon)?;
                clipped |= q.iter().zip(d).any(|(a, b)| a != b);
                out.push(q);
            }
            Ok((out, clipped))
        }
    }
}

/// The shared loop, with an explicit gradient source.
pub fn run_with_source(
    game: &Game,
    regs: &RegularizerSet,
    config: &RunConfig,
    source: &mut dyn GradientSource,
) -> Result<Trajectory> {
    regs.validate(game)?;
    let schedule = config.schedule;
    schedule.validate(game.action_counts())?;
    let max_actions = game.max_actions();
    let algorithm = config.algorithm;
    let first = schedule.params(1, max_actions);
    if algorithm.is_frank_wolfe() && first.gamma > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "{algorithm} needs step sizes in (0, 1], got {}",
            first.gamma
        )));
    }
    let (mut pi, init_clipped) = initial_profile(game, &config.init, first.epsilon)?;
    let initial = StrategyProfile::unchecked(pi.clone(), first.epsilon);
    let cadence = config.record.cadence.unwrap_or_else(|| auto_cadence(config.iterations)).max(1);
    let started = Instant::now();
    let eta = schedule.eta;

    let mut records = Vec::with_capacity(config.iterations);
    let mut previous: Option<Vec<Vec<f64>>> = None;
    let mut calls = 0u64;
    let mut floor = first.epsilon;
    for t in 1..=config.iterations {
        let mut params = schedule.params(t, max_actions);
        if algorithm == Algorithm::AdaptivePgd {
            params.gamma = 1.0 / (t as f64).sqrt();
        }
        let current = StrategyProfile::unchecked(pi.clone(), floor);
        let grads = source.gradients(&current, params.plays)?;
        calls += 1;
        pi = match algorithm {
            Algorithm::SmoothedFw => (0..pi.len())
                .map(|i| smoothed_fw_update(&pi[i], &grads[i], params, eta))
                .collect::<Result<_>>()?,
            Algorithm::HardFw => (0..pi.len())
                .map(|i| Ok(convex_step(&pi[i], &hard_fw_direction(&grads[i], params.epsilon)?, params.gamma)))
                .collect::<Result<_>>()?,
            Algorithm::Extragradient => {
                let half: Vec<Vec<f64>> = (0..pi.len())
                    .map(|i| entropic_step(&pi[i], &grads[i], params.gamma, params.epsilon))
                    .collect::<Result<_>>()?;
                let lookahead = StrategyProfile::unchecked(half, params.epsilon);
                let grads_half = source.gradients(&lookahead, params.plays)?;
                calls += 1;
                (0..pi.len())
                    .map(|i| entropic_step(&pi[i], &grads_half[i], params.gamma, params.epsilon))
                    .collect::<Result<_>>()?
            }
            Algorithm::Ogd => {
                let prev = previous.take().unwrap_or_else(|| grads.clone());
                let next = (0..pi.len())
                    .map(|i| ogd_step(&pi[i], &grads[i], &prev[i], params.gamma, params.epsilon))
                    .collect::<Result<_>>()?;
                previous = Some(grads);
                next
            }
            Algorithm::AdaptivePgd => (0..pi.len())
                .map(|i| entropic_step(&pi[i], &grads[i], params.gamma, params.epsilon))
                .collect::<Result<_>>()?,
        };
        floor = params.epsilon;

        let evaluate = t % cadence == 0 || t == config.iterations;
        let profile = StrategyProfile::unchecked(pi.clone(), floor);
        let smoothed = if evaluate && config.record.smoothed_gap {
            Some(smoothed_gap(game, regs, &profile, eta)?.total)
        } else {
            None
        };
        let nash = if evaluate && config.record.nash_gap {
            Some(nash_gap(game, regs, &profile, DEFAULT_GQRE_TOL)?.epsilon)
        } else {
            None
        };
        records.push(IterationRecord {
            iteration: t,
            gamma: params.gamma,
            epsilon: params.epsilon,
            plays: params.plays,
            oracle_calls: calls,
            smoothed_gap: smoothed,
            nash_gap: nash,
            wall_ms: config.record.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
            profile: config.record.profiles.then_some(profile),
        });
    }

    let metadata = RunMetadata {
        algorithm,
        gradient_mode: config.gradient_mode,
        schedule,
        iterations: config.iterations,
        init: config.init.clone(),
        init_clipped,
        metric_cadence: cadence,
        regularizers: regs.clone(),
        seed: config.seed,
    };
    Ok(Trajectory { metadata, initial, records, final_profile: StrategyProfile::unchecked(pi, floor) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::gen_matching_pennies;
    use crate::regularizer::Regularizer;
    use crate::seeded_rng;

    fn mp() -> (Game, RegularizerSet) {
        (gen_matching_pennies(), RegularizerSet::broadcast(Regularizer::entropy(1.0), 2))
    }

    #[test]
    fn uniform_is_a_fixed_point() {
        let (g, regs) = mp();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::fixed(0.1, 0.01, 100, 1.0), GradientMode::Exact, 200);
        let traj = run(&g, &regs, &config, &mut seeded_rng(0)).unwrap();
        for d in &traj.final_profile.distributions {
            assert!(d.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn converges_from_perturbed_start() {
        let (g, regs) = mp();
        let init = StrategyProfile::new(vec![vec![0.7, 0.3], vec![0.5, 0.5]]).unwrap();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::fixed(0.1, 0.01, 100, 1.0), GradientMode::Exact, 2000)
            .with_init(Init::Profile(init));
        let traj = run(&g, &regs, &config, &mut seeded_rng(0)).unwrap();
        assert!(traj.final_smoothed_gap().unwrap() <= 1e-6);
        assert_eq!(traj.records.len(), 2000);
        assert!(!traj.metadata.init_clipped);
    }

    #[test]
    fn zero_iterations_return_init() {
        let (g, regs) = mp();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::theorem(1.0), GradientMode::Oracle, 0);
        let traj = run(&g, &regs, &config, &mut seeded_rng(0)).unwrap();
        assert!(traj.records.is_empty());
        assert_eq!(traj.final_profile.distributions, traj.initial.distributions);
    }

    #[test]
    fn init_is_clipped_onto_first_floor() {
        let (g, regs) = mp();
        let init = StrategyProfile::pure(&[2, 2], &[0, 1]).unwrap();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::fixed(0.1, 0.05, 10, 1.0), GradientMode::Exact, 1)
            .with_init(Init::Profile(init));
        let traj = run(&g, &regs, &config, &mut seeded_rng(0)).unwrap();
        assert!(traj.metadata.init_clipped);
        let d = &traj.initial.distributions[0];
        assert!((d[0] - 0.95).abs() < 1e-15 && (d[1] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn iterates_respect_the_floor() {
        let (g, regs) = mp();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::theorem(1.0), GradientMode::Oracle, 30)
            .with_record(RecordFlags { profiles: true, ..RecordFlags::none() });
        let traj = run(&g, &regs, &config, &mut seeded_rng(4)).unwrap();
        for r in &traj.records {
            let p = r.profile.as_ref().unwrap();
            assert!(p.min_entry() >= r.epsilon - 1e-12);
            for d in &p.distributions {
                assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (g, regs) = mp();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::fixed(0.05, 0.01, 100, 1.0), GradientMode::Oracle, 50);
        let a = run(&g, &regs, &config, &mut seeded_rng(11)).unwrap();
        let b = run(&g, &regs, &config, &mut seeded_rng(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fw_rejects_large_steps() {
        let (g, regs) = mp();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::fixed(1.5, 0.01, 100, 1.0), GradientMode::Exact, 5);
        assert!(run(&g, &regs, &config, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn algorithm_names_roundtrip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.name()));
        }
        let err = "simplex".parse::<Algorithm>().unwrap_err().to_string();
        assert!(err.contains("smoothed-fw") && err.contains("pgd"));
    }

    #[test]
    fn cadence_rule() {
        assert_eq!(auto_cadence(2000), 1);
        assert_eq!(auto_cadence(2001), 10);
        let (g, regs) = mp();
        let config = RunConfig::new(Algorithm::SmoothedFw, Schedule::fixed(0.1, 0.01, 1, 1.0), GradientMode::Exact, 25)
            .with_record(RecordFlags { cadence: Some(10), ..RecordFlags::default() });
        let traj = run(&g, &regs, &config, &mut seeded_rng(0)).unwrap();
        let evaluated: Vec<usize> = traj.smoothed_gaps().iter().map(|(t, _)| *t).collect();
        assert_eq!(evaluated, vec![10, 20, 25]);
    }
}
