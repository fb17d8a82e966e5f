//! Runs an [`ExperimentConfig`] over its game × algorithm × seed matrix and
//! writes the trajectory CSV, the optional summary table and the manifest.
//!
//! Runs are ordered by `run_id` and executed in batches on a rayon pool;
//! each run owns a generator seeded from its own seed, and batches are
//! written back in `run_id` order, so outputs do not depend on the worker
//! count.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gqre::solver::{auto_cadence, run};
use gqre::{seeded_rng, Algorithm, RecordFlags, RunConfig, Schedule, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, GameInstance};

/// Bumped whenever trajectory CSV columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_COLUMNS: [&str; 12] = [
    "run_id",
    "algorithm",
    "game_id",
    "seed",
    "iteration",
    "gamma",
    "epsilon",
    "M",
    "oracle_calls",
    "smoothed_gap",
    "nash_gap",
    "wall_ms",
];
pub const TRAJECTORY_FILE: &str = "trajectories.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub timing: bool,
    pub large: bool,
    /// Also write the per-cell summary table.
    pub summary: bool,
}

/// Git-style object hash: SHA-256 over `"blob <len>\0" ++ bytes`.
pub fn git_blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameEntry {
    pub game_id: String,
    /// Path of the game file, relative to the output directory when it was
    /// written there.
    pub path: PathBuf,
    pub sha256: String,
    pub action_counts: Vec<usize>,
    pub metric_cadence: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub run_id: String,
    pub game_id: String,
    pub algorithm: Algorithm,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub csv_schema_version: u32,
    pub csv_columns: Vec<String>,
    /// `"chacha8"`: each run's generator is seeded with the run's seed.
    pub rng: String,
    pub config_source: String,
    pub config: ExperimentConfig,
    pub large: bool,
    pub timing: bool,
    pub schedules: BTreeMap<String, Schedule>,
    pub games: Vec<GameEntry>,
    pub runs: Vec<RunEntry>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct Row<'a> {
    run_id: &'a str,
    algorithm: &'a str,
    game_id: &'a str,
    seed: u64,
    iteration: usize,
    gamma: f64,
    epsilon: f64,
    #[serde(rename = "M")]
    plays: u64,
    oracle_calls: u64,
    smoothed_gap: Option<f64>,
    nash_gap: Option<f64>,
    wall_ms: Option<f64>,
}

/// One summary line: final gaps over seeds for a (game, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub game_id: String,
    pub algorithm: String,
    pub seeds: usize,
    pub final_nash_gap_mean: Option<f64>,
    pub final_nash_gap_ci95: Option<f64>,
    pub final_smoothed_gap_mean: Option<f64>,
    pub final_smoothed_gap_ci95: Option<f64>,
}

/// Mean and normal-approximation 95% half-width.
pub fn mean_ci95(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, 1.96 * (var / n).sqrt()))
}

struct Job {
    entry: RunEntry,
    game: usize,
}

fn run_id(game_id: &str, algorithm: Algorithm, seed: u64) -> String {
    format!("{game_id}/{algorithm}/{seed:06}")
}

/// Executes every run and writes outputs into `out_dir`.
pub fn execute(
    config: &ExperimentConfig,
    base_dir: &Path,
    out_dir: &Path,
    options: &RunOptions,
    command: &str,
    config_source: &str,
) -> Result<Manifest> {
    config.validate()?;
    let algorithms = config.parsed_algorithms()?;
    let games = config.game_instances(base_dir, options.large)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut schedules = BTreeMap::new();
    for &a in &algorithms {
        schedules.insert(a.name().to_string(), config.schedule_for(a)?);
    }
    let regs: Vec<_> = games.iter().map(|g| config.regularizers_for(&g.game)).collect::<Result<_>>()?;
    for g in &games {
        for s in schedules.values() {
            s.validate(g.game.action_counts()).with_context(|| format!("schedule for game {}", g.id))?;
        }
    }
    let cadences: Vec<usize> = games
        .iter()
        .map(|g| g.cadence.or(config.metrics.cadence).unwrap_or_else(|| auto_cadence(config.iterations)))
        .collect();
    let game_entries = write_games(&games, &cadences, out_dir)?;

    let mut jobs = Vec::new();
    for (gi, g) in games.iter().enumerate() {
        for &a in &algorithms {
            for seed in config.seeds.base..config.seeds.base + config.seeds.count {
                let entry = RunEntry { run_id: run_id(&g.id, a, seed), game_id: g.id.clone(), algorithm: a, seed };
                jobs.push(Job { entry, game: gi });
            }
        }
    }
    jobs.sort_by(|a, b| a.entry.run_id.cmp(&b.entry.run_id));

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = options.workers {
            b = b.num_threads(w.max(1));
        }
        b.build().context("starting worker pool")?
    };
    let batch = pool.current_num_threads().max(1) * 4;

    let csv_path = out_dir.join(TRAJECTORY_FILE);
    let mut writer = csv::Writer::from_writer(BufWriter::new(
        File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?,
    ));
    let mut finals: FinalGaps = BTreeMap::new();
    for chunk in jobs.chunks(batch) {
        let results: Vec<Result<Trajectory>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|job| {
                    let g = &games[job.game];
                    let record = RecordFlags {
                        smoothed_gap: config.metrics.smoothed_gap,
                        nash_gap: config.metrics.nash_gap,
                        profiles: false,
                        timing: options.timing,
                        cadence: Some(cadences[job.game]),
                    };
                    let rc = RunConfig::new(job.entry.algorithm, schedules[job.entry.algorithm.name()], config.gradient_mode, config.iterations)
                        .with_record(record)
                        .with_seed(job.entry.seed);
                    run(&g.game, &regs[job.game], &rc, &mut seeded_rng(job.entry.seed))
                        .with_context(|| format!("run {}", job.entry.run_id))
                })
                .collect()
        });
        for (job, traj) in chunk.iter().zip(results) {
            let traj = traj?;
            let e = &job.entry;
            for r in &traj.records {
                writer.serialize(Row {
                    run_id: &e.run_id,
                    algorithm: e.algorithm.name(),
                    game_id: &e.game_id,
                    seed: e.seed,
                    iteration: r.iteration,
                    gamma: r.gamma,
                    epsilon: r.epsilon,
                    plays: r.plays,
                    oracle_calls: r.oracle_calls,
                    smoothed_gap: r.smoothed_gap,
                    nash_gap: r.nash_gap,
                    wall_ms: r.wall_ms,
                })?;
            }
            let cell = finals.entry((e.game_id.clone(), e.algorithm.name().to_string())).or_default();
            cell.0.extend(traj.final_nash_gap());
            cell.1.extend(traj.final_smoothed_gap());
        }
    }
    writer.flush()?;

    let mut outputs = BTreeMap::new();
    outputs.insert("trajectories".to_string(), TRAJECTORY_FILE.to_string());
    if options.summary {
        write_summary(&games, &algorithms, &finals, config.seeds.count as usize, &out_dir.join(SUMMARY_FILE))?;
        outputs.insert("summary".to_string(), SUMMARY_FILE.to_string());
    }

    let manifest = Manifest {
        tool: "gqre".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        csv_schema_version: CSV_SCHEMA_VERSION,
        csv_columns: CSV_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rng: "chacha8".into(),
        config_source: config_source.into(),
        config: config.clone(),
        large: options.large,
        timing: options.timing,
        schedules,
        games: game_entries,
        runs: jobs.into_iter().map(|j| j.entry).collect(),
        outputs,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut f = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(manifest)
}

/// Generated games go to `games/<id>.json`; file-backed games are hashed in
/// place.
fn write_games(games: &[GameInstance], cadences: &[usize], out_dir: &Path) -> Result<Vec<GameEntry>> {
    let mut entries = Vec::with_capacity(games.len());
    for (g, &cadence) in games.iter().zip(cadences) {
        let (path, bytes) = match &g.source {
            Some(src) => (src.clone(), std::fs::read(src)?),
            None => {
                let dir = out_dir.join("games");
                std::fs::create_dir_all(&dir)?;
                let bytes = game_json(&g.game)?;
                std::fs::write(dir.join(format!("{}.json", g.id)), &bytes)?;
                (PathBuf::from("games").join(format!("{}.json", g.id)), bytes)
            }
        };
        entries.push(GameEntry {
            game_id: g.id.clone(),
            path,
            sha256: git_blob_sha256(&bytes),
            action_counts: g.game.action_counts().to_vec(),
            metric_cadence: cadence,
        });
    }
    Ok(entries)
}

/// Canonical game file bytes: pretty JSON with a trailing newline.
pub fn game_json(game: &gqre::Game) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(game)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Final Nash and smoothed gaps per (game, algorithm) cell, one entry per seed.
type FinalGaps = BTreeMap<(String, String), (Vec<f64>, Vec<f64>)>;

fn write_summary(
    games: &[GameInstance],
    algorithms: &[Algorithm],
    finals: &FinalGaps,
    seeds: usize,
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for g in games {
        for a in algorithms {
            let empty = (Vec::new(), Vec::new());
            let (nash, smooth) = finals.get(&(g.id.clone(), a.name().to_string())).unwrap_or(&empty);
            let n = mean_ci95(nash);
            let s = mean_ci95(smooth);
            w.serialize(SummaryRow {
                game_id: g.id.clone(),
                algorithm: a.name().to_string(),
                seeds,
                final_nash_gap_mean: n.map(|x| x.0),
                final_nash_gap_ci95: n.map(|x| x.1),
                final_smoothed_gap_mean: s.map(|x| x.0),
                final_smoothed_gap_ci95: s.map(|x| x.1),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --object-format=sha256 --stdin`
        assert_eq!(
            git_blob_sha256(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn ci_of_constant_is_zero() {
        assert_eq!(mean_ci95(&[2.0, 2.0, 2.0]), Some((2.0, 0.0)));
        assert_eq!(mean_ci95(&[]), None);
        let (m, h) = mean_ci95(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((h - 1.96 * (2.0f64 / 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn run_ids_sort_by_seed() {
        assert!(run_id("g", Algorithm::Ogd, 9) < run_id("g", Algorithm::Ogd, 10));
    }
}
