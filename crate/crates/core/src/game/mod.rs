//! Finite normal-form games.
//!
//! Player `i`'s utility tensor `u_i` is stored as one flat row-major array over
//! the joint action space, with strides ordered by player index: player 0 is
//! the slowest-varying axis and player `N-1` the fastest. For two players this
//! is the usual row-major layout, `A[a1][a2]` at `a1 * |A_2| + a2`.

mod generators;

pub use generators::{gen_matching_pennies, gen_rank_k, gen_strongly_monotone, spectral_norm};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::StrategyProfile;

/// Provenance recorded alongside a game.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GameMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Utility tensors as generated, before normalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_normalization: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game {
    #[serde(rename = "players")]
    num_players: usize,
    action_counts: Vec<usize>,
    utilities: Vec<Vec<f64>>,
    normalized: bool,
    #[serde(default)]
    pub metadata: GameMetadata,
}

impl Game {
    /// Builds an unnormalized game from per-player flat tensors.
    pub fn new(action_counts: Vec<usize>, utilities: Vec<Vec<f64>>) -> Result<Self> {
        let game = Self {
            num_players: action_counts.len(),
            action_counts,
            utilities,
            normalized: false,
            metadata: GameMetadata::default(),
        };
        game.validate()?;
        Ok(game)
    }

    /// Two-player game from row-major matrices `A` (row player) and `B`.
    pub fn bimatrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        if b.len() != rows || a.iter().chain(b).any(|r| r.len() != cols) {
            return Err(Error::Dimension("bimatrix payoffs must share one rectangular shape".into()));
        }
        let flat = |m: &[Vec<f64>]| m.iter().flatten().copied().collect::<Vec<_>>();
        Self::new(vec![rows, cols], vec![flat(a), flat(b)])
    }

    /// Checks tensor sizes, finiteness, and the normalization claim.
    pub fn validate(&self) -> Result<()> {
        if self.num_players == 0 || self.action_counts.len() != self.num_players {
            return Err(Error::Dimension("game needs at least one player".into()));
        }
        if let Some(i) = self.action_counts.iter().position(|&n| n == 0) {
            return Err(Error::Dimension(format!("player {i} has no actions")));
        }
        if self.utilities.len() != self.num_players {
            return Err(Error::Dimension(format!(
                "{} players but {} utility tensors",
                self.num_players,
                self.utilities.len()
            )));
        }
        let size = self.joint_size();
        for (i, u) in self.utilities.iter().enumerate() {
            if u.len() != size {
                return Err(Error::Dimension(format!(
                    "player {i} tensor has {} entries, expected {size}",
                    u.len()
                )));
            }
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("player {i} tensor has non-finite entries")));
            }
        }
        if self.normalized {
            let (lo, hi) = self.min_max();
            let constant_zero = lo == 0.0 && hi == 0.0;
            if !(lo == 0.0 && (hi == 1.0 || constant_zero)) {
                return Err(Error::InvalidParameter(format!(
                    "game flagged normalized but entries span [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn max_actions(&self) -> usize {
        self.action_counts.iter().copied().max().unwrap_or(0)
    }

    pub fn total_actions(&self) -> usize {
        self.action_counts.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Flat utility tensor of `player`.
    pub fn utilities(&self, player: usize) -> &[f64] {
        &self.utilities[player]
    }

    pub fn joint_size(&self) -> usize {
        self.action_counts.iter().product()
    }

    /// Row-major strides, player 0 slowest.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.num_players];
        for j in (0..self.num_players.saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.action_counts[j + 1];
        }
        strides
    }

    /// Flat index of a joint action.
    pub fn flat_index(&self, actions: &[usize]) -> usize {
        actions.iter().zip(self.strides()).map(|(a, s)| a * s).sum()
    }

    /// `u_player(actions)`.
    pub fn utility(&self, player: usize, actions: &[usize]) -> f64 {
        self.utilities[player][self.flat_index(actions)]
    }

    fn min_max(&self) -> (f64, f64) {
        self.utilities
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    }

    /// Affine map `x ↦ (x - min) / (max - min)` using the global extremes over
    /// all players' tensors. Constant games map to all zeros.
    pub fn normalize_utilities(&self) -> Game {
        let (lo, hi) = self.min_max();
        let range = hi - lo;
        let utilities = self
            .utilities
            .iter()
            .map(|u| {
                u.iter()
                    .map(|&x| if range > 0.0 { (x - lo) / range } else { 0.0 })
                    .collect()
            })
            .collect();
        Game {
            num_players: self.num_players,
            action_counts: self.action_counts.clone(),
            utilities,
            normalized: true,
            metadata: self.metadata.clone(),
        }
    }

    /// Errors unless `profile` has one finite vector per player of the right
    /// length. Simplex membership is enforced where profiles are constructed,
    /// so derivative checks may evaluate slightly off-simplex points.
    pub fn check_profile(&self, profile: &StrategyProfile) -> Result<()> {
        if profile.num_players() != self.num_players {
            return Err(Error::Dimension(format!(
                "profile has {} players, game has {}",
                profile.num_players(),
                self.num_players
            )));
        }
        for (i, (p, &n)) in profile.distributions.iter().zip(&self.action_counts).enumerate() {
            if p.len() != n {
                return Err(Error::Dimension(format!("player {i}: {} probabilities for {n} actions", p.len())));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDistribution(format!("player {i} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// Visits every joint action in flat order, passing the flat index, the
    /// action tuple and the product of probabilities of all players except
    /// those in `skip`.
    fn for_each_joint(&self, profile: &StrategyProfile, skip: &[usize], mut f: impl FnMut(usize, &[usize], f64)) {
        let n = self.num_players;
        let mut actions = vec![0usize; n];
        let size = self.joint_size();
        for flat in 0..size {
            let mut w = 1.0;
            for j in 0..n {
                if !skip.contains(&j) {
                    w *= profile.distributions[j][actions[j]];
                }
            }
            f(flat, &actions, w);
            for j in (0..n).rev() {
                actions[j] += 1;
                if actions[j] < self.action_counts[j] {
                    break;
                }
                actions[j] = 0;
            }
        }
    }

    /// `u_player(π)`: expectation of the player's utility under the product
    /// distribution `∏_j π_j`.
    pub fn expected_utility(&self, profile: &StrategyProfile, player: usize) -> Result<f64> {
        self.check_profile(profile)?;
        self.check_player(player)?;
        let u = &self.utilities[player];
        let mut total = 0.0;
        self.for_each_joint(profile, &[], |flat, _, w| total += w * u[flat]);
        Ok(total)
    }

    /// `u_player(a, π_{-player})` for every action `a` of `player`.
    pub fn action_values(&self, profile: &StrategyProfile, player: usize) -> Result<Vec<f64>> {
        self.check_profile(profile)?;
        self.check_player(player)?;
        Ok(self.action_moments(profile, player, 1))
    }

    /// `E_{π_{-player}}[u_player(a, A_{-player})^2]` for every action `a`.
    pub fn action_second_moments(&self, profile: &StrategyProfile, player: usize) -> Result<Vec<f64>> {
        self.check_profile(profile)?;
        self.check_player(player)?;
        Ok(self.action_moments(profile, player, 2))
    }

    fn action_moments(&self, profile: &StrategyProfile, player: usize, power: i32) -> Vec<f64> {
        let u = &self.utilities[player];
        let mut out = vec![0.0; self.action_counts[player]];
        self.for_each_joint(profile, &[player], |flat, actions, w| {
            out[actions[player]] += w * u[flat].powi(power);
        });
        out
    }

    /// `∂² u_i(π) / ∂π_i ∂π_j` for `j != i`: a `|A_i| × |A_j|` block (row-major
    /// nested vectors) holding `E_{π_{-i,-j}}[u_i(a_i, a_j, ·)]`.
    pub fn cross_block(&self, profile: &StrategyProfile, i: usize, j: usize) -> Result<Vec<Vec<f64>>> {
        self.check_profile(profile)?;
        self.check_player(i)?;
        self.check_player(j)?;
        if i == j {
            return Err(Error::InvalidParameter("cross_block needs two distinct players".into()));
        }
        let u = &self.utilities[i];
        let mut out = vec![vec![0.0; self.action_counts[j]]; self.action_counts[i]];
        self.for_each_joint(profile, &[i, j], |flat, actions, w| {
            out[actions[i]][actions[j]] += w * u[flat];
        });
        Ok(out)
    }

    /// Records the generator seed in the metadata.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.metadata.seed = Some(seed);
        self
    }

    fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.num_players {
            return Err(Error::Dimension(format!("player {player} out of range ({} players)", self.num_players)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use rand::Rng;

    fn random_profile(counts: &[usize], rng: &mut impl Rng) -> StrategyProfile {
        let d = counts
            .iter()
            .map(|&n| {
                let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect();
        StrategyProfile::new(d).unwrap()
    }

    fn random_game(counts: &[usize], rng: &mut impl Rng) -> Game {
        let size: usize = counts.iter().product();
        let u = (0..counts.len()).map(|_| (0..size).map(|_| rng.random::<f64>()).collect()).collect();
        Game::new(counts.to_vec(), u).unwrap().normalize_utilities()
    }

    #[test]
    fn matching_pennies_normalizes_to_identity_pattern() {
        let a = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
        let b = vec![vec![-1.0, 1.0], vec![1.0, -1.0]];
        let g = Game::bimatrix(&a, &b).unwrap().normalize_utilities();
        assert_eq!(g.utilities(0), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(g.utilities(1), &[0.0, 1.0, 1.0, 0.0]);
        assert!(g.is_normalized());
    }

    #[test]
    fn constant_game_maps_to_zero() {
        let g = Game::new(vec![2, 2], vec![vec![0.0; 4], vec![0.0; 4]]).unwrap();
        let n = g.normalize_utilities();
        assert!(n.is_normalized());
        assert!(n.utilities(0).iter().chain(n.utilities(1)).all(|&x| x == 0.0));
        n.validate().unwrap();
    }

    #[test]
    fn single_player_affine_map() {
        let g = Game::new(vec![3], vec![vec![2.0, 4.0, 6.0]]).unwrap().normalize_utilities();
        assert_eq!(g.utilities(0), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut rng = seeded_rng(3);
        for _ in 0..20 {
            let size = 12;
            let u = (0..2).map(|_| (0..size).map(|_| rng.random::<f64>() * 10.0 - 3.0).collect()).collect();
            let g = Game::new(vec![3, 4], u).unwrap().normalize_utilities();
            assert_eq!(g.normalize_utilities(), g);
        }
    }

    #[test]
    fn strides_are_row_major() {
        let g = Game::new(vec![2, 3, 4], vec![vec![0.0; 24]; 3]).unwrap();
        assert_eq!(g.strides(), vec![12, 4, 1]);
        assert_eq!(g.flat_index(&[1, 2, 3]), 23);
    }

    #[test]
    fn expected_utility_uniform_matching_pennies() {
        let g = gen_matching_pennies();
        let p = StrategyProfile::uniform(g.action_counts());
        assert!((g.expected_utility(&p, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((g.expected_utility(&p, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn expected_utility_at_point_mass_is_entry() {
        let mut rng = seeded_rng(11);
        let g = random_game(&[2, 3, 2], &mut rng);
        for a in [[0, 0, 0], [1, 2, 1], [0, 1, 1]] {
            let p = StrategyProfile::pure(g.action_counts(), &a).unwrap();
            for i in 0..3 {
                assert_eq!(g.expected_utility(&p, i).unwrap(), g.utility(i, &a));
            }
        }
    }

    #[test]
    fn expected_utility_matches_enumeration() {
        let mut rng = seeded_rng(5);
        let g = random_game(&[3, 3], &mut rng);
        let p = random_profile(&[3, 3], &mut rng);
        for i in 0..2 {
            let mut brute = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    brute += p.player(0)[a] * p.player(1)[b] * g.utilities(i)[a * 3 + b];
                }
            }
            assert!((g.expected_utility(&p, i).unwrap() - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn expected_utility_is_affine_in_each_marginal() {
        let mut rng = seeded_rng(9);
        let counts = [2, 3, 2];
        let g = random_game(&counts, &mut rng);
        for _ in 0..10 {
            let p = random_profile(&counts, &mut rng);
            let q = random_profile(&counts, &mut rng);
            for j in 0..3 {
                let t: f64 = rng.random();
                let mut mixed = p.distributions.clone();
                mixed[j] = p.player(j).iter().zip(q.player(j)).map(|(a, b)| (1.0 - t) * a + t * b).collect();
                let mut other = p.distributions.clone();
                other[j] = q.player(j).to_vec();
                let mixed = StrategyProfile::new(mixed).unwrap();
                let other = StrategyProfile::new(other).unwrap();
                for i in 0..3 {
                    let lhs = g.expected_utility(&mixed, i).unwrap();
                    let rhs = (1.0 - t) * g.expected_utility(&p, i).unwrap() + t * g.expected_utility(&other, i).unwrap();
                    assert!((lhs - rhs).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let g = gen_matching_pennies();
        let bad = StrategyProfile::new(vec![vec![1.0], vec![0.5, 0.5]]).unwrap();
        assert!(matches!(g.expected_utility(&bad, 0), Err(Error::Dimension(_))));
        assert!(Game::new(vec![2, 2], vec![vec![0.0; 3], vec![0.0; 4]]).is_err());
    }

    #[test]
    fn json_roundtrip_keeps_layout_and_metadata() {
        let mut rng = seeded_rng(1);
        let g = gen_rank_k(4, 2, &mut rng).unwrap().with_seed(1);
        let text = serde_json::to_string(&g).unwrap();
        assert!(text.contains("\"players\":2"));
        let back: Game = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }
}
