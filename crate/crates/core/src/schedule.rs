//! Step size `γ_t`, exploration floor `ε_t` and oracle sample count `M_t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// `γ_t = 1/(t+1)`.
    Harmonic,
    /// `γ_t = 1/√t`.
    InvSqrt,
    Constant(f64),
}

/// Exploration-floor rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorRule {
    /// `ε_t = 1/((t+1) max_i |A_i|)`.
    Harmonic,
    Constant(f64),
}

/// Oracle sample-count rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleRule {
    /// `M_t = ⌈1/(ε_t γ_t²)⌉ = (t+1)³ max_i |A_i|`.
    Theorem,
    Constant(u64),
}

/// Per-iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub plays: u64,
}

/// A schedule plus the smoothing temperature `η` of the KL-proximal step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub step: StepRule,
    pub floor: FloorRule,
    pub samples: SampleRule,
    pub eta: f64,
}

impl Schedule {
    /// The rates under which the expected smoothed gap is guaranteed to vanish.
    pub fn theorem(eta: f64) -> Self {
        Self { step: StepRule::Harmonic, floor: FloorRule::Harmonic, samples: SampleRule::Theorem, eta }
    }

    pub fn fixed(gamma: f64, epsilon: f64, plays: u64, eta: f64) -> Self {
        Self {
            step: StepRule::Constant(gamma),
            floor: FloorRule::Constant(epsilon),
            samples: SampleRule::Constant(plays),
            eta,
        }
    }

    /// `"theorem"` when every rule is the theorem rule, `"fixed"` when every
    /// rule is constant, `"mixed"` otherwise.
    pub fn mode(&self) -> &'static str {
        match (self.step, self.floor, self.samples) {
            (StepRule::Harmonic, FloorRule::Harmonic, SampleRule::Theorem) => "theorem",
            (StepRule::Constant(_), FloorRule::Constant(_), SampleRule::Constant(_)) => "fixed",
            _ => "mixed",
        }
    }

    /// Checks the rules against the game's action counts. Floors must stay at
    /// or below `1/|A_i|` for every player.
    pub fn validate(&self, action_counts: &[usize]) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if let StepRule::Constant(g) = self.step {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
        }
        if let FloorRule::Constant(e) = self.floor {
            let max_n = action_counts.iter().copied().max().unwrap_or(1);
            if !(e >= 0.0) || e > 1.0 / max_n as f64 {
                return Err(Error::InvalidParameter(format!(
                    "epsilon {e} must lie in [0, 1/{max_n}] (the smallest 1/|A_i|)"
                )));
            }
        }
        if let SampleRule::Constant(0) = self.samples {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        Ok(())
    }

    /// Parameters for iteration `t ≥ 1`.
    pub fn params(&self, t: usize, max_actions: usize) -> StepParams {
        let t_f = t as f64;
        let gamma = match self.step {
            StepRule::Harmonic => 1.0 / (t_f + 1.0),
            StepRule::InvSqrt => 1.0 / t_f.sqrt(),
            StepRule::Constant(g) => g,
        };
        let epsilon = match self.floor {
            FloorRule::Harmonic => 1.0 / ((t_f + 1.0) * max_actions as f64),
            FloorRule::Constant(e) => e,
        };
        let plays = match self.samples {
            SampleRule::Theorem => theorem_plays(t, max_actions),
            SampleRule::Constant(m) => m,
        };
        StepParams { gamma, epsilon, plays }
    }
}

fn theorem_plays(t: usize, max_actions: usize) -> u64 {
    let t1 = t as u64 + 1;
    t1.saturating_mul(t1).saturating_mul(t1).saturating_mul(max_actions as u64)
}

/// `(γ_t, ε_t, M_t) = (1/(t+1), 1/((t+1) max|A|), (t+1)³ max|A|)`.
pub fn theorem_schedule(t: usize, max_actions: usize) -> StepParams {
    Schedule::theorem(1.0).params(t, max_actions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_values() {
        assert_eq!(theorem_schedule(1, 2), StepParams { gamma: 0.5, epsilon: 0.25, plays: 16 });
        let p = theorem_schedule(9, 2);
        assert_eq!((p.gamma, p.epsilon, p.plays), (0.1, 0.05, 2000));
    }

    #[test]
    fn plays_equal_ceiling_formula() {
        for t in 1..200 {
            for n in 1..6 {
                let p = theorem_schedule(t, n);
                // shave rounding so an exact integer does not ceil up
                let x = 1.0 / (p.epsilon * p.gamma * p.gamma);
                let direct = (x * (1.0 - 1e-12)).ceil();
                assert!((direct - p.plays as f64).abs() <= 1e-6 * direct, "t={t} n={n}");
            }
        }
    }

    #[test]
    fn floor_nonincreasing() {
        let mut prev = f64::INFINITY;
        for t in 1..=10_000 {
            let e = theorem_schedule(t, 3).epsilon;
            assert!(e <= prev);
            assert!(e <= 1.0 / 3.0);
            prev = e;
        }
    }

    #[test]
    fn inv_sqrt_steps() {
        let s = Schedule { step: StepRule::InvSqrt, ..Schedule::fixed(0.1, 0.0, 1, 1.0) };
        assert_eq!(s.params(1, 2).gamma, 1.0);
        assert_eq!(s.params(4, 2).gamma, 0.5);
    }

    #[test]
    fn validation() {
        assert!(Schedule::fixed(0.1, 0.6, 10, 1.0).validate(&[2, 2]).is_err());
        assert!(Schedule::fixed(0.1, 0.3, 10, 1.0).validate(&[2, 4]).is_err());
        assert!(Schedule::fixed(0.1, 0.25, 10, 1.0).validate(&[2, 4]).is_ok());
        assert!(Schedule::fixed(0.1, 0.1, 0, 1.0).validate(&[2, 2]).is_err());
        assert!(Schedule::theorem(0.0).validate(&[2, 2]).is_err());
        assert_eq!(Schedule::theorem(1.0).mode(), "theorem");
        assert_eq!(Schedule::fixed(0.1, 0.0, 1, 1.0).mode(), "fixed");
    }
}
