//! Mixed strategy profiles, optionally restricted to an exploration simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ π = 1` and on the exploration floor.
pub const SUM_TOL: f64 = 1e-12;

/// One probability vector per player. A positive `floor` asserts that every
/// entry is at least `floor` (the exploration simplex `Δ(A; ε)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub distributions: Vec<Vec<f64>>,
    #[serde(default)]
    pub floor: f64,
}

impl StrategyProfile {
    /// Validates and wraps `distributions` with no floor.
    pub fn new(distributions: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_floor(distributions, 0.0)
    }

    pub fn with_floor(distributions: Vec<Vec<f64>>, floor: f64) -> Result<Self> {
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(Error::InvalidParameter(format!("floor must be >= 0, got {floor}")));
        }
        for (i, p) in distributions.iter().enumerate() {
            check_distribution(p).map_err(|e| match e {
                Error::InvalidDistribution(msg) => Error::InvalidDistribution(format!("player {i}: {msg}")),
                other => other,
            })?;
            if floor > 0.0 {
                if floor > 1.0 / p.len() as f64 + SUM_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "floor {floor} exceeds 1/{} for player {i}",
                        p.len()
                    )));
                }
                if let Some((a, &v)) = p.iter().enumerate().find(|(_, &v)| v < floor - SUM_TOL) {
                    return Err(Error::InvalidDistribution(format!(
                        "player {i} action {a}: {v} below floor {floor}"
                    )));
                }
            }
        }
        Ok(Self { distributions, floor })
    }

    /// Wraps without validation. Used for iterates whose invariants hold by
    /// construction and for off-simplex points in derivative checks.
    pub fn unchecked(distributions: Vec<Vec<f64>>, floor: f64) -> Self {
        Self { distributions, floor }
    }

    /// Uniform strategies for the given action counts.
    pub fn uniform(action_counts: &[usize]) -> Self {
        let distributions = action_counts.iter().map(|&n| vec![1.0 / n as f64; n]).collect();
        Self { distributions, floor: 0.0 }
    }

    /// Point masses on the given actions.
    pub fn pure(action_counts: &[usize], actions: &[usize]) -> Result<Self> {
        if action_counts.len() != actions.len() {
            return Err(Error::Dimension(format!(
                "{} players but {} actions given",
                action_counts.len(),
                actions.len()
            )));
        }
        let mut distributions = Vec::with_capacity(actions.len());
        for (i, (&n, &a)) in action_counts.iter().zip(actions).enumerate() {
            if a >= n {
                return Err(Error::Dimension(format!("player {i} has {n} actions, got action {a}")));
            }
            let mut p = vec![0.0; n];
            p[a] = 1.0;
            distributions.push(p);
        }
        Ok(Self { distributions, floor: 0.0 })
    }

    pub fn num_players(&self) -> usize {
        self.distributions.len()
    }

    pub fn player(&self, i: usize) -> &[f64] {
        &self.distributions[i]
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.distributions.iter().map(Vec::len).collect()
    }

    /// Concatenation of all players' distributions.
    pub fn stacked(&self) -> Vec<f64> {
        self.distributions.iter().flatten().copied().collect()
    }

    /// Splits a stacked vector back into per-player blocks (no validation).
    pub fn unstack(stacked: &[f64], action_counts: &[usize]) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(action_counts.len());
        let mut offset = 0;
        for &n in action_counts {
            out.push(stacked[offset..offset + n].to_vec());
            offset += n;
        }
        out
    }

    /// Smallest entry over all players.
    pub fn min_entry(&self) -> f64 {
        self.distributions.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum absolute coordinate difference to `other`.
    pub fn max_abs_diff(&self, other: &StrategyProfile) -> f64 {
        self.distributions
            .iter()
            .flatten()
            .zip(other.distributions.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Checks nonnegativity and unit mass within [`SUM_TOL`].
pub fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    if let Some((a, &v)) = p.iter().enumerate().find(|(_, &v)| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidDistribution(format!("entry {a} is {v}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL * p.len().max(1) as f64 {
        return Err(Error::InvalidDistribution(format!("entries sum to {sum}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass() {
        assert!(StrategyProfile::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(StrategyProfile::new(vec![vec![1.2, -0.2]]).is_err());
        assert!(StrategyProfile::new(vec![vec![0.5, 0.5]]).is_ok());
    }

    #[test]
    fn floor_checks() {
        assert!(StrategyProfile::with_floor(vec![vec![0.95, 0.05]], 0.1).is_err());
        assert!(StrategyProfile::with_floor(vec![vec![0.9, 0.1]], 0.1).is_ok());
        // floor above 1/n is not a valid exploration simplex
        assert!(StrategyProfile::with_floor(vec![vec![0.5, 0.5]], 0.6).is_err());
    }

    #[test]
    fn stack_roundtrip() {
        let p = StrategyProfile::new(vec![vec![0.2, 0.8], vec![0.1, 0.2, 0.7]]).unwrap();
        let s = p.stacked();
        assert_eq!(StrategyProfile::unstack(&s, &p.action_counts()), p.distributions);
    }
}
