//! Subcommand arguments and their implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gqre::metrics::{gap_report, GapReport, DEFAULT_GQRE_TOL};
use gqre::response::quantal_response;
use gqre::{Game, GradientMode, Regularizer, RegularizerKind, RegularizerSet, StrategyProfile};
use serde::Deserialize;

use crate::config::{generate, ExperimentConfig, GameSpec, MetricSpec, RuleValue, ScheduleSpec, SeedSpec};
use crate::experiment::{execute, game_json, Manifest, RunOptions};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "GQRE_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "gqre", version, about = "Generalized quantal response equilibria: generate, solve, verify, benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated game as JSON.
    Gen(GenArgs),
    /// Run learners on a game and write trajectories plus a manifest.
    Solve(SolveArgs),
    /// Report equilibrium gaps of a profile.
    Verify(VerifyArgs),
    /// Print the quantal response to a utility vector.
    Respond(RespondArgs),
    /// Run the full benchmark matrix and a summary table.
    Bench(BenchArgs),
}

/// A regularizer given on the command line.
#[derive(Debug, Clone, Args)]
pub struct RegArgs {
    #[arg(long, default_value = "entropy")]
    pub kind: RegularizerKind,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Rényi order in (0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Reference distribution (default uniform).
    #[arg(long, value_delimiter = ',')]
    pub reference: Option<Vec<f64>>,
    /// Support points for `squared_mean` (default 1..n).
    #[arg(long, value_delimiter = ',')]
    pub support_points: Option<Vec<f64>>,
}

impl RegArgs {
    pub fn regularizer(&self) -> Result<Regularizer> {
        if self.kind == RegularizerKind::Renyi && self.alpha.is_none() {
            bail!("--kind renyi needs --alpha in (0, 1]");
        }
        if self.alpha.is_some() && self.kind != RegularizerKind::Renyi {
            bail!("--alpha only applies to --kind renyi");
        }
        let reg = Regularizer {
            kind: self.kind,
            lambda: self.lambda,
            alpha: self.alpha,
            reference: self.reference.clone(),
            support_points: self.support_points.clone(),
        };
        reg.validate_params()?;
        Ok(reg)
    }
}

/// Options shared by the commands that run learners.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Fill the wall_ms column.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// matching-pennies, monotone or rank-k.
    #[arg(long)]
    pub game: String,
    /// Actions per player (monotone).
    #[arg(long)]
    pub n: Option<usize>,
    /// Actions per player (rank-k).
    #[arg(long)]
    pub m: Option<usize>,
    /// Rank of A + B (rank-k).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.3)]
    pub skew: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (default `<out-dir>/<game id>.json`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Experiment config; when given, the flags below are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Game file.
    #[arg(long, required_unless_present = "config")]
    pub game: Option<PathBuf>,
    /// Algorithm name; repeat for several.
    #[arg(long = "algorithm", default_value = "smoothed-fw")]
    pub algorithms: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub base_seed: u64,
    #[arg(long, default_value = "oracle")]
    pub mode: GradientMode,
    /// Number, `harmonic` or `inv_sqrt`.
    #[arg(long, default_value = "harmonic")]
    pub step: String,
    /// Number or `harmonic`.
    #[arg(long, default_value = "harmonic")]
    pub floor: String,
    /// Integer or `theorem`.
    #[arg(long, default_value = "100")]
    pub samples: String,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[command(flatten)]
    pub reg: RegArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub game: PathBuf,
    /// JSON: `[[...], [...]]` or `{"distributions": [[...], [...]]}`.
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    pub reg: RegArgs,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = DEFAULT_GQRE_TOL)]
    pub tol: f64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RespondArgs {
    /// Utilities, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub u: Vec<f64>,
    #[command(flatten)]
    pub reg: RegArgs,
    /// Round to this many decimals.
    #[arg(long)]
    pub digits: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment config (default: the shipped protocol).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Include the large games.
    #[arg(long)]
    pub large: bool,
    /// Override the seed count.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Override T.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

pub fn cmd_gen(args: &GenArgs) -> Result<PathBuf> {
    let n = match args.game.as_str() {
        "monotone" => args.n.or(args.m).context("monotone games need --n")?,
        "rank-k" => args.m.or(args.n).context("rank-k games need --m")?,
        _ => 2,
    };
    let k = match args.game.as_str() {
        "rank-k" => args.k.context("rank-k games need --k")?,
        _ => 0,
    };
    let (id, game) = generate(&args.game, n, k, args.mu, args.skew, args.seed)?;
    let path = args.out.clone().unwrap_or_else(|| args.out_dir.join(format!("{id}.json")));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, game_json(&game)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn rule(text: &str) -> RuleValue {
    text.parse::<f64>().map(RuleValue::Number).unwrap_or_else(|_| RuleValue::Name(text.to_string()))
}

/// The config a flag-only `solve` stands for.
pub fn solve_config(args: &SolveArgs) -> Result<ExperimentConfig> {
    let game = args.game.clone().context("--game is required without --config")?;
    let schedule = ScheduleSpec { step: rule(&args.step), floor: rule(&args.floor), samples: rule(&args.samples), eta: args.eta };
    let config = ExperimentConfig {
        name: None,
        iterations: args.iterations,
        gradient_mode: args.mode,
        algorithms: args.algorithms.clone(),
        seeds: SeedSpec { count: args.seeds, base: args.base_seed },
        regularizer: Some(args.reg.regularizer()?),
        regularizers: None,
        schedules: [("default".to_string(), schedule)].into_iter().collect(),
        metrics: MetricSpec::default(),
        games: vec![GameSpec {
            file: Some(game),
            generator: None,
            sizes: vec![],
            ranks: vec![],
            mu: None,
            skew: None,
            seed: 0,
            cadence: None,
        }],
        large_games: vec![],
    };
    config.validate()?;
    Ok(config)
}

fn options(run: &RunArgs, large: bool, summary: bool) -> RunOptions {
    RunOptions { workers: run.workers, timing: run.timing, large, summary }
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Manifest> {
    let (config, base, source) = match &args.config {
        Some(p) => (ExperimentConfig::load(p)?, config_dir(p), p.display().to_string()),
        None => (solve_config(args)?, PathBuf::new(), "command line".to_string()),
    };
    execute(&config, &base, &args.run.out_dir, &options(&args.run, false, false), "solve", &source)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Manifest> {
    let (mut config, base, source) = match &args.config {
        Some(p) => (ExperimentConfig::load(p)?, config_dir(p), p.display().to_string()),
        None => (ExperimentConfig::default_bench(), PathBuf::new(), "builtin:bench.toml".to_string()),
    };
    if let Some(s) = args.seeds {
        config.seeds.count = s;
    }
    if let Some(t) = args.iterations {
        config.iterations = t;
    }
    execute(&config, &base, &args.run.out_dir, &options(&args.run, args.large, true), "bench", &source)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileFile {
    Bare(Vec<Vec<f64>>),
    Wrapped { distributions: Vec<Vec<f64>> },
}

pub fn read_game(path: &Path) -> Result<Game> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading game file {}", path.display()))?;
    let game: Game = serde_json::from_str(&text).with_context(|| format!("parsing game file {}", path.display()))?;
    game.validate()?;
    Ok(game)
}

pub fn read_profile(path: &Path) -> Result<StrategyProfile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading profile {}", path.display()))?;
    let parsed: ProfileFile = serde_json::from_str(&text).with_context(|| format!("parsing profile {}", path.display()))?;
    let d = match parsed {
        ProfileFile::Bare(d) | ProfileFile::Wrapped { distributions: d } => d,
    };
    StrategyProfile::new(d).with_context(|| format!("invalid profile in {}", path.display()))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<GapReport> {
    let game = read_game(&args.game)?;
    let profile = read_profile(&args.profile)?;
    game.check_profile(&profile)?;
    let regs = RegularizerSet::broadcast(args.reg.regularizer()?, game.num_players());
    regs.validate(&game)?;
    Ok(gap_report(&game, &regs, &profile, args.eta, args.tol)?)
}

pub fn cmd_respond(args: &RespondArgs) -> Result<String> {
    let reg = args.reg.regularizer()?;
    let p = quantal_response(&reg, &args.u)?;
    let cells: Vec<String> = p
        .iter()
        .map(|x| match args.digits {
            Some(d) => format!("{x:.d$}"),
            None => format!("{x}"),
        })
        .collect();
    Ok(cells.join(", "))
}
