//! Run records shared by every learning algorithm.

use serde::{Deserialize, Serialize};

use crate::profile::StrategyProfile;
use crate::regularizer::RegularizerSet;
use crate::schedule::Schedule;
use crate::solver::{Algorithm, GradientMode, Init};

/// One iteration `t ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gamma: f64,
    pub epsilon: f64,
    /// `M_t`, the oracle plays per gradient call at this iteration.
    pub plays: u64,
    /// Gradient evaluations so far (two per iteration for extragradient).
    pub oracle_calls: u64,
    /// `V(π_t)` with exact gradients, when evaluated at this iteration.
    pub smoothed_gap: Option<f64>,
    pub nash_gap: Option<f64>,
    /// Milliseconds since the run started; only with timing enabled.
    pub wall_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<StrategyProfile>,
}

/// Provenance of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub algorithm: Algorithm,
    pub gradient_mode: GradientMode,
    pub schedule: Schedule,
    pub iterations: usize,
    pub init: Init,
    /// Whether the initial profile had to be projected onto `Δ(A; ε_1)`.
    pub init_clipped: bool,
    /// Metrics are evaluated every `metric_cadence` iterations and at `T`.
    pub metric_cadence: usize,
    pub regularizers: RegularizerSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub metadata: RunMetadata,
    /// `π_0` after clipping.
    pub initial: StrategyProfile,
    pub records: Vec<IterationRecord>,
    pub final_profile: StrategyProfile,
}

impl Trajectory {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Most recent recorded smoothed gap.
    pub fn final_smoothed_gap(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.smoothed_gap)
    }

    /// Most recent recorded Nash gap.
    pub fn final_nash_gap(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.nash_gap)
    }

    /// `(t, V(π_t))` for every iteration where the gap was evaluated.
    pub fn smoothed_gaps(&self) -> Vec<(usize, f64)> {
        self.records.iter().filter_map(|r| r.smoothed_gap.map(|v| (r.iteration, v))).collect()
    }

    pub fn nash_gaps(&self) -> Vec<(usize, f64)> {
        self.records.iter().filter_map(|r| r.nash_gap.map(|v| (r.iteration, v))).collect()
    }

    /// Total oracle plays spent.
    pub fn total_plays(&self) -> u64 {
        let mut prev_calls = 0;
        let mut total = 0u64;
        for r in &self.records {
            total = total.saturating_add((r.oracle_calls - prev_calls).saturating_mul(r.plays));
            prev_calls = r.oracle_calls;
        }
        total
    }
}
