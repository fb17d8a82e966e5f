//! Comparison algorithms. All share the loop in [`crate::solver`]; only the
//! per-player update differs.
//!
//! - hard Frank-Wolfe: vertex at `argmax_a F_a` (lowest index on ties),
//!   projected onto `Δ(A; ε_t)`, then the convex step;
//! - extragradient (entropic mirror-prox): a look-ahead step
//!   `π̂ ∝ π ⊙ exp(γ F(π))` and the real step `π⁺ ∝ π ⊙ exp(γ F(π̂))`, two
//!   gradient calls per iteration;
//! - optimistic gradient: `log π ← log π + γ (2F_t - F_{t-1})` with
//!   `F_0 = F_1`;
//! - adaptive PGD: exponentiated gradient with `γ_t = 1/√t`.
//!
//! Every multiplicative update is renormalized and then projected onto the
//! floored simplex.

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::Game;
use crate::regularizer::RegularizerSet;
use crate::schedule::Schedule;
use crate::simplex::{epsilon_projection, ln_entries, softmax};
use crate::solver::{run, Algorithm, GradientMode, Init, RecordFlags, RunConfig};
use crate::trajectory::Trajectory;

/// Vertex of the simplex at the first maximizer of `gradient`, projected
/// onto `Δ(A; ε)`.
pub fn hard_fw_direction(gradient: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if gradient.is_empty() {
        return Err(Error::Dimension("empty gradient".into()));
    }
    let mut best = 0;
    for (a, &g) in gradient.iter().enumerate() {
        if g > gradient[best] {
            best = a;
        }
    }
    let mut vertex = vec![0.0; gradient.len()];
    vertex[best] = 1.0;
    epsilon_projection(&vertex, epsilon)
}

/// `Π_ε(normalize(π ⊙ exp(γ g)))`.
pub fn entropic_step(pi: &[f64], gradient: &[f64], gamma: f64, epsilon: f64) -> Result<Vec<f64>> {
    let p = crate::simplex::multiplicative_step(pi, gradient, gamma)?;
    epsilon_projection(&p, epsilon)
}

/// `Π_ε(softmax(log π + γ (2 g - g_prev)))`.
pub fn ogd_step(pi: &[f64], gradient: &[f64], previous: &[f64], gamma: f64, epsilon: f64) -> Result<Vec<f64>> {
    if gradient.len() != pi.len() || previous.len() != pi.len() {
        return Err(Error::Dimension("gradient and strategy lengths differ".into()));
    }
    let logits: Vec<f64> = ln_entries(pi)
        .iter()
        .zip(gradient.iter().zip(previous))
        .map(|(l, (g, h))| l + gamma * (2.0 * g - h))
        .collect();
    epsilon_projection(&softmax(&logits)?, epsilon)
}

#[allow(clippy::too_many_arguments)]
fn run_algorithm<R: Rng>(
    algorithm: Algorithm,
    game: &Game,
    regs: &RegularizerSet,
    schedule: Schedule,
    gradient_mode: GradientMode,
    iterations: usize,
    init: Init,
    rng: &mut R,
    record: RecordFlags,
) -> Result<Trajectory> {
    let config = RunConfig::new(algorithm, schedule, gradient_mode, iterations).with_init(init).with_record(record);
    run(game, regs, &config, rng)
}

#[allow(clippy::too_many_arguments)]
pub fn run_hard_fw<R: Rng>(
    game: &Game,
    regs: &RegularizerSet,
    schedule: Schedule,
    gradient_mode: GradientMode,
    iterations: usize,
    init: Init,
    rng: &mut R,
    record: RecordFlags,
) -> Result<Trajectory> {
    run_algorithm(Algorithm::HardFw, game, regs, schedule, gradient_mode, iterations, init, rng, record)
}

#[allow(clippy::too_many_arguments)]
pub fn run_extragradient<R: Rng>(
    game: &Game,
    regs: &RegularizerSet,
    schedule: Schedule,
    gradient_mode: GradientMode,
    iterations: usize,
    init: Init,
    rng: &mut R,
    record: RecordFlags,
) -> Result<Trajectory> {
    run_algorithm(Algorithm::Extragradient, game, regs, schedule, gradient_mode, iterations, init, rng, record)
}

#[allow(clippy::too_many_arguments)]
pub fn run_ogd<R: Rng>(
    game: &Game,
    regs: &RegularizerSet,
    schedule: Schedule,
    gradient_mode: GradientMode,
    iterations: usize,
    init: Init,
    rng: &mut R,
    record: RecordFlags,
) -> Result<Trajectory> {
    run_algorithm(Algorithm::Ogd, game, regs, schedule, gradient_mode, iterations, init, rng, record)
}

/// The schedule's step rule is ignored: this method always uses `1/√t`.
#[allow(clippy::too_many_arguments)]
pub fn run_adaptive_pgd<R: Rng>(
    game: &Game,
    regs: &RegularizerSet,
    schedule: Schedule,
    gradient_mode: GradientMode,
    iterations: usize,
    init: Init,
    rng: &mut R,
    record: RecordFlags,
) -> Result<Trajectory> {
    run_algorithm(Algorithm::AdaptivePgd, game, regs, schedule, gradient_mode, iterations, init, rng, record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::gen_matching_pennies;
    use crate::profile::StrategyProfile;
    use crate::regularizer::Regularizer;
    use crate::seeded_rng;

    #[test]
    fn hard_direction_examples() {
        let d = hard_fw_direction(&[1.0, 0.0], 0.1).unwrap();
        assert!((d[0] - 0.9).abs() < 1e-15 && (d[1] - 0.1).abs() < 1e-15);
        assert_eq!(hard_fw_direction(&[2.0, 2.0, 1.0], 0.0).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_gradient_keeps_strategy() {
        let pi = [0.2, 0.3, 0.5];
        let p = entropic_step(&pi, &[0.0; 3], 0.7, 0.01).unwrap();
        assert!(p.iter().zip(pi).all(|(a, b)| (a - b).abs() < 1e-15));
        let p = ogd_step(&pi, &[0.0; 3], &[0.0; 3], 0.7, 0.01).unwrap();
        assert!(p.iter().zip(pi).all(|(a, b)| (a - b).abs() < 1e-15));
        let p = ogd_step(&pi, &[3.0; 3], &[3.0; 3], 0.7, 0.01).unwrap();
        assert!(p.iter().zip(pi).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn extragradient_stays_at_equilibrium() {
        let g = gen_matching_pennies();
        let regs = RegularizerSet::broadcast(Regularizer::entropy(1.0), 2);
        let t = run_extragradient(
            &g,
            &regs,
            Schedule::fixed(0.1, 0.01, 100, 1.0),
            GradientMode::Exact,
            50,
            Init::Uniform,
            &mut seeded_rng(0),
            RecordFlags::none(),
        )
        .unwrap();
        assert!(t.final_profile.max_abs_diff(&StrategyProfile::uniform(&[2, 2])) < 1e-15);
        assert_eq!(t.last().unwrap().oracle_calls, 100);
    }

    #[test]
    fn pgd_step_sizes() {
        let g = gen_matching_pennies();
        let regs = RegularizerSet::broadcast(Regularizer::entropy(1.0), 2);
        let t = run_adaptive_pgd(
            &g,
            &regs,
            Schedule::fixed(0.1, 0.01, 100, 1.0),
            GradientMode::Exact,
            4,
            Init::Uniform,
            &mut seeded_rng(0),
            RecordFlags::none(),
        )
        .unwrap();
        assert_eq!(t.records[0].gamma, 1.0);
        assert_eq!(t.records[3].gamma, 0.5);
    }
}
