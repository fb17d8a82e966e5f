//! Declarative experiment configuration (TOML).
//!
//! ```toml
//! iterations = 1000
//! gradient_mode = "oracle"
//! algorithms = ["smoothed-fw", "pgd"]
//!
//! [seeds]
//! count = 20
//! base = 0
//!
//! [regularizer]          # broadcast to every player
//! kind = "entropy"
//! lambda = 1.0
//!
//! [schedules.default]    # per-algorithm tables override `default`
//! step = 0.1             # number, "harmonic" or "inv_sqrt"
//! floor = 0.001          # number or "harmonic"
//! samples = 100          # integer or "theorem"
//! eta = 1.0
//!
//! [[games]]
//! generator = "monotone" # or file = "mp.json"
//! sizes = [10, 20]
//! ```
//!
//! The schema is documented in full in the README.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use gqre::game::{gen_matching_pennies, gen_rank_k, gen_strongly_monotone};
use gqre::schedule::{FloorRule, SampleRule, StepRule};
use gqre::{seeded_rng, Algorithm, Game, GradientMode, Regularizer, RegularizerSet, Schedule};
use serde::{Deserialize, Serialize};

/// The shipped benchmark protocol.
pub const DEFAULT_BENCH: &str = include_str!("../configs/bench.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub iterations: usize,
    pub gradient_mode: GradientMode,
    pub algorithms: Vec<String>,
    pub seeds: SeedSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<Regularizer>,
    /// One per player; takes precedence over `regularizer`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizers: Option<Vec<Regularizer>>,
    #[serde(default)]
    pub schedules: BTreeMap<String, ScheduleSpec>,
    #[serde(default)]
    pub metrics: MetricSpec,
    pub games: Vec<GameSpec>,
    /// Extra games enabled by `--large`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub large_games: Vec<GameSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub count: u64,
    #[serde(default)]
    pub base: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    #[serde(default = "yes")]
    pub smoothed_gap: bool,
    #[serde(default = "yes")]
    pub nash_gap: bool,
    /// Evaluate every `cadence` iterations; by default every iteration up to
    /// `T = 2000` and every 10th beyond.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence: Option<usize>,
}

fn yes() -> bool {
    true
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self { smoothed_gap: true, nash_gap: true, cadence: None }
    }
}

/// A rule given as a number or a name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleValue {
    Number(f64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(default = "harmonic")]
    pub step: RuleValue,
    #[serde(default = "harmonic")]
    pub floor: RuleValue,
    #[serde(default = "theorem")]
    pub samples: RuleValue,
    #[serde(default = "one")]
    pub eta: f64,
}

fn harmonic() -> RuleValue {
    RuleValue::Name("harmonic".into())
}

fn theorem() -> RuleValue {
    RuleValue::Name("theorem".into())
}

fn one() -> f64 {
    1.0
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self { step: harmonic(), floor: harmonic(), samples: theorem(), eta: 1.0 }
    }
}

impl ScheduleSpec {
    pub fn resolve(&self) -> Result<Schedule> {
        let step = match &self.step {
            RuleValue::Number(g) => StepRule::Constant(*g),
            RuleValue::Name(n) if n == "harmonic" => StepRule::Harmonic,
            RuleValue::Name(n) if n == "inv_sqrt" => StepRule::InvSqrt,
            RuleValue::Name(n) => bail!("unknown step rule '{n}' (a number, \"harmonic\" or \"inv_sqrt\")"),
        };
        let floor = match &self.floor {
            RuleValue::Number(e) => FloorRule::Constant(*e),
            RuleValue::Name(n) if n == "harmonic" => FloorRule::Harmonic,
            RuleValue::Name(n) => bail!("unknown floor rule '{n}' (a number or \"harmonic\")"),
        };
        let samples = match &self.samples {
            RuleValue::Number(m) if *m >= 1.0 && m.fract() == 0.0 => SampleRule::Constant(*m as u64),
            RuleValue::Number(m) => bail!("samples must be a positive integer, got {m}"),
            RuleValue::Name(n) if n == "theorem" => SampleRule::Theorem,
            RuleValue::Name(n) => bail!("unknown sample rule '{n}' (an integer or \"theorem\")"),
        };
        Ok(Schedule { step, floor, samples, eta: self.eta })
    }
}

/// A game file, or a generator with one or more sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    /// Action counts for `monotone`, or `m` for `rank-k`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    /// Ranks for `rank-k`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Metric cadence for this game's runs, overriding `metrics.cadence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cadence: Option<usize>,
}

/// A concrete game ready to run.
#[derive(Debug, Clone)]
pub struct GameInstance {
    pub id: String,
    pub game: Game,
    /// Source file, for file-backed games.
    pub source: Option<PathBuf>,
    pub cadence: Option<usize>,
}

pub const GENERATORS: [&str; 3] = ["matching-pennies", "monotone", "rank-k"];

/// Builds one generated game. Also used by `gen`.
pub fn generate(generator: &str, n: usize, k: usize, mu: f64, skew: f64, seed: u64) -> Result<(String, Game)> {
    let mut rng = seeded_rng(seed);
    Ok(match generator {
        "matching-pennies" => ("matching-pennies".to_string(), gen_matching_pennies()),
        "monotone" => (format!("monotone-n{n}-s{seed}"), gen_strongly_monotone(n, mu, skew, &mut rng)?.with_seed(seed)),
        "rank-k" => (format!("rank-k-m{n}-k{k}-s{seed}"), gen_rank_k(n, k, &mut rng)?.with_seed(seed)),
        other => bail!("unknown generator '{other}' (known: {})", GENERATORS.join(", ")),
    })
}

impl GameSpec {
    pub fn instances(&self, base_dir: &Path) -> Result<Vec<GameInstance>> {
        match (&self.file, &self.generator) {
            (Some(_), Some(_)) => bail!("a game entry takes either `file` or `generator`, not both"),
            (None, None) => bail!("a game entry needs `file` or `generator`"),
            (Some(file), None) => {
                let path = if file.is_absolute() { file.clone() } else { base_dir.join(file) };
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading game file {}", path.display()))?;
                let game: Game = serde_json::from_str(&text).with_context(|| format!("parsing game file {}", path.display()))?;
                game.validate()?;
                let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "game".into());
                Ok(vec![GameInstance { id, game, source: Some(path), cadence: self.cadence }])
            }
            (None, Some(generator)) => {
                let mu = self.mu.unwrap_or(1.0);
                let skew = self.skew.unwrap_or(0.3);
                let pairs: Vec<(usize, usize)> = match generator.as_str() {
                    "matching-pennies" => vec![(2, 0)],
                    "monotone" => {
                        ensure!(!self.sizes.is_empty(), "monotone games need `sizes`");
                        self.sizes.iter().map(|&n| (n, 0)).collect()
                    }
                    "rank-k" => {
                        ensure!(!self.sizes.is_empty() && !self.ranks.is_empty(), "rank-k games need `sizes` and `ranks`");
                        self.sizes.iter().flat_map(|&m| self.ranks.iter().map(move |&k| (m, k))).collect()
                    }
                    other => bail!("unknown generator '{other}' (known: {})", GENERATORS.join(", ")),
                };
                pairs
                    .into_iter()
                    .map(|(n, k)| {
                        let (id, game) = generate(generator, n, k, mu, skew, self.seed)?;
                        Ok(GameInstance { id, game, source: None, cadence: self.cadence })
                    })
                    .collect()
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).context("parsing experiment config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn default_bench() -> Self {
        Self::from_toml(DEFAULT_BENCH).expect("shipped bench config is valid")
    }

    /// Structural checks that need no game data.
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.algorithms.is_empty(), "the algorithm list is empty (known: {})", known_algorithms());
        self.parsed_algorithms()?;
        ensure!(self.seeds.count >= 1, "seeds.count must be at least 1");
        ensure!(self.iterations >= 1, "iterations must be at least 1");
        ensure!(!self.games.is_empty(), "no games configured");
        ensure!(
            self.regularizer.is_some() || self.regularizers.is_some(),
            "set `regularizer` (broadcast) or `regularizers` (one per player)"
        );
        for (key, spec) in &self.schedules {
            if key != "default" {
                key.parse::<Algorithm>().with_context(|| format!("schedule table '{key}'"))?;
            }
            spec.resolve().with_context(|| format!("schedule table '{key}'"))?;
        }
        if let Some(c) = self.metrics.cadence {
            ensure!(c >= 1, "metrics.cadence must be at least 1");
        }
        Ok(())
    }

    pub fn parsed_algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithms.iter().map(|a| a.parse::<Algorithm>().map_err(anyhow::Error::from)).collect()
    }

    pub fn schedule_for(&self, algorithm: Algorithm) -> Result<Schedule> {
        self.schedules
            .get(algorithm.name())
            .or_else(|| self.schedules.get("default"))
            .cloned()
            .unwrap_or_default()
            .resolve()
    }

    pub fn regularizers_for(&self, game: &Game) -> Result<RegularizerSet> {
        let regs = match (&self.regularizers, &self.regularizer) {
            (Some(list), _) => RegularizerSet::new(list.clone()),
            (None, Some(r)) => RegularizerSet::broadcast(r.clone(), game.num_players()),
            (None, None) => bail!("no regularizer configured"),
        };
        regs.validate(game)?;
        Ok(regs)
    }

    /// All games, including `large_games` when `large` is set.
    pub fn game_instances(&self, base_dir: &Path, large: bool) -> Result<Vec<GameInstance>> {
        let mut out = Vec::new();
        let extra: &[GameSpec] = if large { &self.large_games } else { &[] };
        for spec in self.games.iter().chain(extra) {
            out.extend(spec.instances(base_dir)?);
        }
        let mut ids: Vec<&str> = out.iter().map(|g| g.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            bail!("duplicate game id '{}'", w[0]);
        }
        Ok(out)
    }
}

pub fn known_algorithms() -> String {
    Algorithm::ALL.iter().map(|a| a.name()).collect::<Vec<_>>().join(", ")
}
