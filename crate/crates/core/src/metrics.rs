//! Equilibrium measurement.
//!
//! - The smoothed gap `V_i = η log⟨π_i, exp(F_i/η)⟩ - ⟨π_i, F_i⟩`, the value of
//!   `max_s ⟨s - π_i, F_i⟩ - η KL(s ‖ π_i)`; `V = Σ V_i` vanishes exactly at a
//!   GQRE.
//! - Its gradient `L(π) = -F + Hᵀ(s* - π) + λ(π)` with `λ_i = η s*_i / π_i`.
//! - The pure-direction slack `max_a F_{i,a} - ⟨π_i, F_i⟩`.
//! - The Nash gap `ε_i = max_ξ u_i^f(ξ, π_{-i}) - u_i^f(π)` of the perturbed
//!   game, with best responses from the closed-form quantal responses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Game;
use crate::perturbed::{block_offsets, game_jacobian, payoff_gradient_extended, payoff_gradients};
use crate::profile::StrategyProfile;
use crate::regularizer::{RegularizerKind, RegularizerSet};
use crate::response::quantal_response;
use crate::simplex::{log_sum_exp, smoothed_direction};

/// Default acceptance tolerance for equilibrium checks.
pub const DEFAULT_GQRE_TOL: f64 = 1e-6;

/// `V_i` for gradient `F` and strategy `π`; zero-probability actions do not
/// contribute (the KL term forbids moving mass onto them).
pub fn player_smoothed_gap(gradient: &[f64], pi: &[f64], eta: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    if gradient.len() != pi.len() {
        return Err(Error::Dimension(format!("{} gradient entries for {} actions", gradient.len(), pi.len())));
    }
    let support: Vec<usize> = (0..pi.len()).filter(|&a| pi[a] > 0.0).collect();
    if support.is_empty() {
        return Err(Error::InvalidDistribution("strategy has no mass".into()));
    }
    let mean: f64 = support.iter().map(|&a| pi[a] * gradient[a]).sum();
    // centering first keeps the cancellation error at the scale of the gap
    let logits: Vec<f64> = support.iter().map(|&a| pi[a].ln() + (gradient[a] - mean) / eta).collect();
    Ok((eta * log_sum_exp(&logits)).max(0.0))
}

/// Per-player and total smoothed gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedGap {
    pub per_player: Vec<f64>,
    pub total: f64,
}

/// `V(π)` with exact gradients.
pub fn smoothed_gap(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile, eta: f64) -> Result<SmoothedGap> {
    let mut per_player = Vec::with_capacity(game.num_players());
    for i in 0..game.num_players() {
        let f = payoff_gradient_extended(game, regs, profile, i)?;
        per_player.push(player_smoothed_gap(&f, profile.player(i), eta)?);
    }
    let total = per_player.iter().sum();
    Ok(SmoothedGap { per_player, total })
}

/// `∇V(π)` in stacked ambient coordinates (each probability treated as a free
/// variable). Requires an interior profile.
pub fn smoothed_gap_gradient(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile, eta: f64) -> Result<Vec<f64>> {
    let f = payoff_gradients(game, regs, profile)?;
    let h = game_jacobian(game, regs, profile)?;
    let counts = game.action_counts();
    let offsets = block_offsets(counts);
    let total = game.total_actions();
    let mut diff = nalgebra::DVector::zeros(total);
    let mut out = vec![0.0; total];
    for i in 0..game.num_players() {
        let pi = profile.player(i);
        let s = smoothed_direction(&f[i], pi, eta)?;
        for a in 0..counts[i] {
            let k = offsets[i] + a;
            diff[k] = s[a] - pi[a];
            out[k] = -f[i][a] + eta * s[a] / pi[a];
        }
    }
    let coupling = h.transpose() * diff;
    out.iter_mut().zip(coupling.iter()).for_each(|(o, c)| *o += c);
    Ok(out)
}

/// Pure-direction verification result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureCheck {
    pub is_gqre: bool,
    /// `max_a F_{i,a} - ⟨π_i, F_i⟩` per player; `+∞` when a singular
    /// regularizer sits on the boundary.
    pub max_slack: Vec<f64>,
}

/// One gradient per player and `|A_i|` comparisons: a GQRE iff no pure
/// deviation direction improves the perturbed utility to first order.
pub fn verify_gqre_pure(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile, tol: f64) -> Result<PureCheck> {
    let mut max_slack = Vec::with_capacity(game.num_players());
    for i in 0..game.num_players() {
        let f = payoff_gradient_extended(game, regs, profile, i)?;
        let pi = profile.player(i);
        let mean: f64 = pi.iter().zip(&f).filter(|(p, _)| **p > 0.0).map(|(p, g)| p * g).sum();
        let top = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max_slack.push(top - mean);
    }
    let is_gqre = max_slack.iter().all(|&s| s <= tol);
    Ok(PureCheck { is_gqre, max_slack })
}

/// Nash gap of the perturbed game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashGap {
    /// `max(max_i ε_i, 0)`.
    pub epsilon: f64,
    pub per_player: Vec<f64>,
    pub within_tol: bool,
}

/// Best-response value minus achieved perturbed utility, per player.
pub fn nash_gap(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile, tol: f64) -> Result<NashGap> {
    regs.validate(game)?;
    let mut per_player = Vec::with_capacity(game.num_players());
    for i in 0..game.num_players() {
        let reg = &regs[i];
        let v = game.action_values(profile, i)?;
        let pi = profile.player(i);
        let achieved = reg.objective(&v, pi)?;
        let best = match reg.effective_kind() {
            RegularizerKind::Entropy => {
                let r = reg.reference(v.len());
                let logits: Vec<f64> = v.iter().zip(&r).map(|(va, ra)| ra.ln() + reg.lambda * va).collect();
                log_sum_exp(&logits)
            }
            _ => reg.objective(&v, &quantal_response(reg, &v)?)?,
        };
        per_player.push(best - achieved);
    }
    let epsilon = per_player.iter().copied().fold(0.0, f64::max);
    Ok(NashGap { epsilon, within_tol: epsilon <= tol, per_player })
}

/// Per-player section of a [`GapReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerGap {
    #[serde(rename = "V_i")]
    pub smoothed_gap: f64,
    #[serde(rename = "epsilon_i")]
    pub epsilon: f64,
    pub max_pure_slack: f64,
}

/// Everything `verify` reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub is_gqre: bool,
    pub epsilon: f64,
    #[serde(rename = "V")]
    pub smoothed_gap: f64,
    pub per_player: Vec<PlayerGap>,
    pub tol: f64,
    pub eta: f64,
}

/// Combined report. A player passes on the pure-direction slack, except under
/// total variation where the slack uses a subgradient and the Nash gap is
/// used instead.
pub fn gap_report(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile, eta: f64, tol: f64) -> Result<GapReport> {
    let v = smoothed_gap(game, regs, profile, eta)?;
    let pure = verify_gqre_pure(game, regs, profile, tol)?;
    let nash = nash_gap(game, regs, profile, tol)?;
    let mut is_gqre = true;
    let per_player = (0..game.num_players())
        .map(|i| {
            let pass = if regs[i].is_smooth() { pure.max_slack[i] <= tol } else { nash.per_player[i] <= tol };
            is_gqre &= pass;
            PlayerGap { smoothed_gap: v.per_player[i], epsilon: nash.per_player[i], max_pure_slack: pure.max_slack[i] }
        })
        .collect();
    Ok(GapReport { is_gqre, epsilon: nash.epsilon, smoothed_gap: v.total, per_player, tol, eta })
}
