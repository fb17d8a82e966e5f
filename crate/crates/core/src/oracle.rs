//! Simulated game play as a gradient oracle.
//!
//! The simulator draws `M` independent joint actions from `∏_i π_i` and returns,
//! for each player, per-action play counts `M_i(a)` and cumulative payoffs
//! `U_i(a) = Σ_m u_i(A(m)) 1{A_i(m) = a}`. The importance-weighted estimate
//! `F̂_i(a) = λ_i U_i(a) / (π_i(a) M)` is unbiased for `λ_i u_i(a, π_{-i})`.
//! All players' tables come from the same plays, so their estimates are
//! correlated.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::profile::{check_distribution, StrategyProfile};
use crate::regularizer::RegularizerSet;

/// Per-player tables from `plays` simulated rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub plays: u64,
    pub counts: Vec<Vec<u64>>,
    pub cum_payoff: Vec<Vec<f64>>,
    /// The profile the plays were drawn from.
    pub profile: StrategyProfile,
}

/// Inverse-CDF sampler over one player's marginal.
struct Marginal {
    cumulative: Vec<f64>,
    last_positive: usize,
}

impl Marginal {
    fn new(p: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = p
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect();
        let last_positive = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        Self { cumulative, last_positive }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let r: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= r);
        idx.min(self.last_positive)
    }
}

/// Plays the game `plays` times under `profile`.
pub fn simulate(game: &Game, profile: &StrategyProfile, plays: u64, rng: &mut impl Rng) -> Result<OracleReport> {
    game.check_profile(profile)?;
    for p in &profile.distributions {
        check_distribution(p)?;
    }
    if plays == 0 {
        return Err(Error::InvalidParameter("the oracle needs at least one play".into()));
    }
    let n = game.num_players();
    let strides = game.strides();
    let marginals: Vec<Marginal> = profile.distributions.iter().map(|p| Marginal::new(p)).collect();
    let mut counts: Vec<Vec<u64>> = game.action_counts().iter().map(|&k| vec![0; k]).collect();
    let mut cum_payoff: Vec<Vec<f64>> = game.action_counts().iter().map(|&k| vec![0.0; k]).collect();
    let mut actions = vec![0usize; n];
    for _ in 0..plays {
        let mut flat = 0;
        for j in 0..n {
            actions[j] = marginals[j].sample(rng);
            flat += actions[j] * strides[j];
        }
        for i in 0..n {
            counts[i][actions[i]] += 1;
            cum_payoff[i][actions[i]] += game.utilities(i)[flat];
        }
    }
    Ok(OracleReport { plays, counts, cum_payoff, profile: profile.clone() })
}

/// One player's gradient estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub player: usize,
    /// `F_i = F̂_i - ∇f_i(π_i)`.
    pub gradient: Vec<f64>,
    /// `F̂_i`, the estimate of `λ_i u_i(·, π_{-i})`.
    pub raw: Vec<f64>,
    pub plays: u64,
}

/// Turns a report into `F̂_i` and `F_i` for `player`. Unplayed actions get
/// `F̂_i(a) = 0`; a zero-probability action with `λ_i > 0` is an error since
/// the importance weight is undefined there.
pub fn estimate_gradient(report: &OracleReport, regs: &RegularizerSet, player: usize) -> Result<GradientEstimate> {
    if player >= report.counts.len() {
        return Err(Error::Dimension(format!("player {player} out of range")));
    }
    let reg = &regs[player];
    let pi = report.profile.player(player);
    let lambda = reg.lambda;
    let m = report.plays as f64;
    let mut raw = Vec::with_capacity(pi.len());
    for (a, (&p, &u)) in pi.iter().zip(&report.cum_payoff[player]).enumerate() {
        if lambda == 0.0 {
            raw.push(0.0);
        } else if p > 0.0 {
            raw.push(lambda * u / (p * m));
        } else {
            return Err(Error::Singular { what: "importance weight".into(), action: a });
        }
    }
    let grad_f = reg.gradient(pi)?;
    let gradient = raw.iter().zip(grad_f).map(|(r, g)| r - g).collect();
    Ok(GradientEstimate { player, gradient, raw, plays: report.plays })
}

/// [`estimate_gradient`] for every player.
pub fn estimate_gradients(report: &OracleReport, regs: &RegularizerSet) -> Result<Vec<GradientEstimate>> {
    (0..report.counts.len()).map(|i| estimate_gradient(report, regs, i)).collect()
}

/// Exact variance of `F̂_i(a)` from `plays` rounds:
/// `λ² (E_{π_{-i}}[u_i(a, ·)²] - π_i(a) u_i(a, π_{-i})²) / (M π_i(a))`.
pub fn theoretical_variance(
    game: &Game,
    profile: &StrategyProfile,
    player: usize,
    action: usize,
    lambda: f64,
    plays: u64,
) -> Result<f64> {
    let p = *profile
        .distributions
        .get(player)
        .and_then(|d| d.get(action))
        .ok_or_else(|| Error::Dimension(format!("no action {action} for player {player}")))?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if !(p > 0.0) {
        return Err(Error::Singular { what: "variance at zero probability".into(), action });
    }
    if plays == 0 {
        return Err(Error::InvalidParameter("plays must be positive".into()));
    }
    let mean = game.action_values(profile, player)?[action];
    let second = game.action_second_moments(profile, player)?[action];
    let var = lambda * lambda * (second - p * mean * mean) / (plays as f64 * p);
    Ok(var.max(0.0))
}
