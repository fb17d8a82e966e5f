//! Generalized quantal response equilibria (GQRE) of finite normal-form games.
//!
//! Each player `i` maximizes a perturbed utility `λ_i u_i(π) - f_i(π_i)`, where
//! `f_i` is a divergence from a reference distribution. A GQRE is a profile in
//! which every player plays its own regularized best response.
//!
//! The crate provides
//! - [`game`]: games stored as flat row-major utility tensors, plus the three
//!   benchmark generators;
//! - [`regularizer`] and [`response`]: divergence penalties with gradients,
//!   Hessians and closed-form quantal responses;
//! - [`perturbed`]: exact perturbed-utility gradients and the game Jacobian;
//! - [`oracle`]: a simulator that plays the game and turns play tables into
//!   importance-weighted gradient estimates;
//! - [`solver`] and [`baselines`]: the smoothed Frank-Wolfe learner and four
//!   comparison algorithms sharing one gradient interface;
//! - [`metrics`]: the smoothed gap, its gradient, pure-strategy verification
//!   and the Nash gap.
//!
//! ```
//! use gqre::game::gen_matching_pennies;
//! use gqre::solver::run;
//! use gqre::{seeded_rng, Algorithm, GradientMode, Regularizer, RegularizerSet, RunConfig, Schedule};
//!
//! # fn main() -> gqre::Result<()> {
//! let game = gen_matching_pennies();
//! let regs = RegularizerSet::broadcast(Regularizer::entropy(1.0), game.num_players());
//! let schedule = Schedule::fixed(0.1, 1e-3, 100, 1.0);
//! let config = RunConfig::new(Algorithm::SmoothedFw, schedule, GradientMode::Oracle, 200);
//! let trajectory = run(&game, &regs, &config, &mut seeded_rng(7))?;
//! assert!(trajectory.final_nash_gap().unwrap() < 1e-2);
//! # Ok(())
//! # }
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod error;
pub mod game;
pub mod metrics;
pub mod oracle;
pub mod perturbed;
pub mod profile;
pub mod regularizer;
pub mod response;
pub mod root;
pub mod schedule;
pub mod simplex;
pub mod solver;
pub mod trajectory;

pub use error::{Error, Result};
pub use game::{Game, GameMetadata};
pub use profile::StrategyProfile;
pub use regularizer::{Regularizer, RegularizerKind, RegularizerSet};
pub use schedule::{Schedule, StepParams};
pub use solver::{Algorithm, GradientMode, Init, RecordFlags, RunConfig};
pub use trajectory::{IterationRecord, RunMetadata, Trajectory};

/// Seedable generator used throughout. ChaCha8 output is specified
/// independently of platform and crate version, so seeds are portable.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the portable generator for `seed`.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
