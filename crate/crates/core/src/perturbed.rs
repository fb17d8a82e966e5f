//! Exact gradients of the perturbed utilities `λ_i u_i(π) - f_i(π_i)` and the
//! Jacobian `H` of the stacked gradient field.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::Game;
use crate::profile::StrategyProfile;
use crate::regularizer::{RegularizerKind, RegularizerSet};

/// `λ_i u_i(π) - f_i(π_i)`.
pub fn perturbed_utility(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile, player: usize) -> Result<f64> {
    regs.validate(game)?;
    let reg = &regs[player];
    Ok(reg.lambda * game.expected_utility(profile, player)? - reg.value(profile.player(player))?)
}

/// `F_i(π)_a = λ_i u_i(a, π_{-i}) - (∇f_i(π_i))_a`. Errors with
/// [`Error::Singular`](crate::Error::Singular) when `π_i` touches the boundary
/// and `f_i` is singular there.
pub fn payoff_gradient(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile, player: usize) -> Result<Vec<f64>> {
    regs.validate(game)?;
    let reg = &regs[player];
    let values = game.action_values(profile, player)?;
    let grad_f = reg.gradient(profile.player(player))?;
    Ok(values.iter().zip(grad_f).map(|(v, g)| reg.lambda * v - g).collect())
}

/// [`payoff_gradient`] for every player.
pub fn payoff_gradients(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile) -> Result<Vec<Vec<f64>>> {
    (0..game.num_players()).map(|i| payoff_gradient(game, regs, profile, i)).collect()
}

/// Gradient with boundary-singular entries reported as `+∞` instead of an
/// error (the `-∇f` term diverges upward as a probability goes to zero).
pub(crate) fn payoff_gradient_extended(
    game: &Game,
    regs: &RegularizerSet,
    profile: &StrategyProfile,
    player: usize,
) -> Result<Vec<f64>> {
    let p = profile.player(player);
    let reg = &regs[player];
    if p.iter().all(|&x| x > 0.0) || !reg.is_boundary_singular() {
        return payoff_gradient(game, regs, profile, player);
    }
    regs.validate(game)?;
    let values = game.action_values(profile, player)?;
    let n = p.len();
    let r = reg.reference(n);
    // entries on the support; Rényi couples them through S = Σ p^α r^{1-α}
    let grad_f: Vec<f64> = match reg.effective_kind() {
        RegularizerKind::Renyi => {
            let a = reg.alpha()?;
            let s: f64 = p.iter().zip(&r).map(|(pa, ra)| pa.powf(a) * ra.powf(1.0 - a)).sum();
            p.iter().zip(&r).map(|(pa, ra)| a / (a - 1.0) * pa.powf(a - 1.0) * ra.powf(1.0 - a) / s).collect()
        }
        RegularizerKind::Hellinger => p.iter().zip(&r).map(|(pa, ra)| 0.5 - 0.5 * (ra / pa).sqrt()).collect(),
        _ => p.iter().zip(&r).map(|(pa, ra)| (pa / ra).ln() + 1.0).collect(),
    };
    Ok((0..n)
        .map(|a| if p[a] <= 0.0 { f64::INFINITY } else { reg.lambda * values[a] - grad_f[a] })
        .collect())
}

/// Offsets of each player's block in stacked vectors.
pub fn block_offsets(action_counts: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(action_counts.len());
    let mut acc = 0;
    for &n in action_counts {
        offsets.push(acc);
        acc += n;
    }
    offsets
}

/// Jacobian `H(π)` of the stacked field `(F_1, …, F_N)`.
///
/// Block `(i, i)` is `-∇²f_i(π_i)`; block `(i, j)` is
/// `λ_i E_{π_{-i,-j}}[u_i(a_i, a_j, ·)]`. For two players the off-diagonal
/// blocks are `λ_1 A` and `λ_2 Bᵀ`.
pub fn game_jacobian(game: &Game, regs: &RegularizerSet, profile: &StrategyProfile) -> Result<DMatrix<f64>> {
    regs.validate(game)?;
    game.check_profile(profile)?;
    let counts = game.action_counts();
    let offsets = block_offsets(counts);
    let total = game.total_actions();
    let mut h = DMatrix::zeros(total, total);
    for i in 0..game.num_players() {
        let hess = regs[i].hessian(profile.player(i))?;
        for (a, row) in hess.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                h[(offsets[i] + a, offsets[i] + b)] = -v;
            }
        }
        let lambda = regs[i].lambda;
        for j in 0..game.num_players() {
            if j == i || lambda == 0.0 {
                continue;
            }
            let block = game.cross_block(profile, i, j)?;
            for (a, row) in block.iter().enumerate() {
                for (b, v) in row.iter().enumerate() {
                    h[(offsets[i] + a, offsets[j] + b)] = lambda * v;
                }
            }
        }
    }
    Ok(h)
}

/// Largest eigenvalue of `H + Hᵀ` at each profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub max_eigenvalues: Vec<f64>,
    pub all_negative_definite: bool,
}

pub fn check_diagonal_dominance(
    game: &Game,
    regs: &RegularizerSet,
    profiles: &[StrategyProfile],
) -> Result<DominanceReport> {
    let mut max_eigenvalues = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let h = game_jacobian(game, regs, profile)?;
        let sym = &h + h.transpose();
        let eig = SymmetricEigen::new(sym);
        max_eigenvalues.push(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    let all_negative_definite = max_eigenvalues.iter().all(|&e| e < 0.0);
    Ok(DominanceReport { max_eigenvalues, all_negative_definite })
}
