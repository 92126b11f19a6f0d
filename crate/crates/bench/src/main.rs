use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use sne_bench::output::{write_csv, write_json};
use sne_bench::runs::online_rows;
use sne_bench::{
    offline_certify, parse_mode, parse_tiebreak, reward_free_run, run_suite, Behavior, ExperimentConfig,
};
use sne_core::game::{
    generate_dataset, random_game, random_leader_controller_game, FeatureMode, GameDims, OfflineDataset,
    TabularGameSpec,
};
use sne_core::offline::OfflineConfig;
use sne_core::online::{run_ovi_sne, BonusSpec, LearnerConfig};
use sne_core::planner::exact_sne;
use sne_core::reward_free::{ExploreConfig, RewardNoise};
use sne_core::stage::{StageRequest, TieBreak};

#[derive(Parser)]
#[command(name = "sne", version, about = "Stackelberg-Nash equilibrium solvers and experiments")]
struct Cli {
    /// Suite configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory; JSON commands print to stdout without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Concurrent runs for `suite`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random game spec.
    Gen(GenArgs),
    /// Solve a game exactly by backward induction.
    Plan(PlanArgs),
    /// Solve one stage game.
    Stage(StageArgs),
    /// Run the optimistic online learner.
    Online(OnlineArgs),
    /// Plan pessimistically from a dataset and certify the plan.
    Offline(OfflineArgs),
    /// Log episodes of a behavior policy as a dataset.
    Collect(CollectArgs),
    /// Estimate rewards by reward-free exploration.
    Rewardfree(RewardFreeArgs),
    /// Run a seed × K sweep described by --config.
    Suite,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    states: usize,
    #[arg(long)]
    leader_actions: usize,
    /// Comma-separated action counts, one per follower.
    #[arg(long, value_delimiter = ',', required = true)]
    follower_actions: Vec<usize>,
    #[arg(long)]
    horizon: usize,
    /// Transitions ignore the followers.
    #[arg(long)]
    leader_controller: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = "optimistic", value_parser = parse_tiebreak)]
    tiebreak: TieBreak,
}

#[derive(Args)]
struct StageArgs {
    /// Stage game JSON; read from stdin without it.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct BonusArgs {
    /// Fixed bonus scale.
    #[arg(long, conflicts_with = "beta_theorem")]
    beta: Option<f64>,
    /// Theorem-form bonus `C,p`.
    #[arg(long, value_parser = parse_theorem)]
    beta_theorem: Option<BonusSpec>,
}

impl BonusArgs {
    fn resolve(&self) -> BonusSpec {
        match (&self.beta, &self.beta_theorem) {
            (Some(beta), _) => BonusSpec::Fixed { beta: *beta },
            (None, Some(spec)) => *spec,
            (None, None) => BonusSpec::theorem(1.0, 0.1),
        }
    }
}

#[derive(Args)]
struct OnlineArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    episodes: usize,
    #[command(flatten)]
    bonus: BonusArgs,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value = "optimistic", value_parser = parse_tiebreak)]
    tiebreak: TieBreak,
    #[arg(long, default_value = "joint", value_parser = parse_mode)]
    controller_mode: FeatureMode,
}

#[derive(Args)]
struct OfflineArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Fixed penalty scale.
    #[arg(long, conflicts_with = "beta_theorem")]
    beta_prime: Option<f64>,
    /// Theorem-form penalty `C,p`.
    #[arg(long, value_parser = parse_theorem)]
    beta_theorem: Option<BonusSpec>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value = "optimistic", value_parser = parse_tiebreak)]
    tiebreak: TieBreak,
    #[arg(long, default_value = "joint", value_parser = parse_mode)]
    controller_mode: FeatureMode,
}

#[derive(Args)]
struct CollectArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    episodes: usize,
    /// `uniform`, `sne`, or `mixture:<alpha>`.
    #[arg(long, default_value = "uniform", value_parser = Behavior::parse)]
    behavior: Behavior,
    #[arg(long, default_value = "optimistic", value_parser = parse_tiebreak)]
    tiebreak: TieBreak,
}

#[derive(Args)]
struct RewardFreeArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    k0: usize,
    #[arg(long)]
    k: usize,
    /// Observe mean rewards exactly or as ±1 draws.
    #[arg(long, default_value = "exact", value_parser = parse_noise)]
    noise: RewardNoise,
}

fn parse_theorem(text: &str) -> Result<BonusSpec> {
    let (c, p) = text.split_once(',').context("expected `C,p`")?;
    let (c, p): (f64, f64) = (c.trim().parse()?, p.trim().parse()?);
    if !(c > 0.0 && p > 0.0 && p < 1.0) {
        bail!("need C > 0 and 0 < p < 1, got {text}");
    }
    Ok(BonusSpec::theorem(c, p))
}

fn parse_noise(text: &str) -> Result<RewardNoise> {
    match text {
        "exact" => Ok(RewardNoise::Exact),
        "bernoulli" => Ok(RewardNoise::Bernoulli),
        _ => bail!("unknown reward noise {text:?}"),
    }
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn out_dir(out: Option<&Path>) -> Result<&Path> {
    let dir = out.context("--out <DIR> is required for this command")?;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn read_spec(path: &Path) -> Result<TabularGameSpec> {
    TabularGameSpec::read(path).with_context(|| format!("loading spec {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Gen(a) => {
            let dims = GameDims::new(a.states, a.leader_actions, a.follower_actions, a.horizon);
            let spec = if a.leader_controller {
                random_leader_controller_game(&dims, cli.seed)
            } else {
                random_game(&dims, cli.seed)
            };
            match out {
                Some(path) => spec.write(path)?,
                None => println!("{}", serde_json::to_string_pretty(&spec.to_json())?),
            }
        }
        Command::Plan(a) => {
            let plan = exact_sne(&read_spec(&a.spec)?, a.tiebreak)?;
            emit(out, &plan)?;
        }
        Command::Stage(a) => {
            let request: StageRequest = match &a.input {
                Some(path) => serde_json::from_reader(BufReader::new(
                    fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
                ))?,
                None => serde_json::from_reader(io::stdin().lock())?,
            };
            emit(out, &request.solve()?)?;
        }
        Command::Online(a) => {
            let dir = out_dir(out)?;
            let spec = read_spec(&a.spec)?;
            let mut config = LearnerConfig::new(a.episodes, a.bonus.resolve(), cli.seed);
            config.epsilon = a.epsilon;
            config.tiebreak = a.tiebreak;
            config.mode = a.controller_mode;
            let truth = exact_sne(&spec, config.tiebreak)?;
            let report = run_ovi_sne(&spec, spec.rewards(), &config, &truth)?;
            write_json(&dir.join("report.json"), &report)?;
            write_csv(&dir.join("online.csv"), &online_rows(&report))?;
            info!("regret after {} episodes: {:.4}", a.episodes, report.regret());
        }
        Command::Offline(a) => {
            let dir = out_dir(out)?;
            let spec = read_spec(&a.spec)?;
            let data = OfflineDataset::read(&a.dataset)
                .with_context(|| format!("loading dataset {}", a.dataset.display()))?;
            let penalty = match (a.beta_prime, &a.beta_theorem) {
                (Some(beta), _) => BonusSpec::Fixed { beta },
                (None, Some(spec)) => *spec,
                (None, None) => BonusSpec::theorem(1.0, 0.1),
            };
            let mut config = OfflineConfig::new(penalty);
            config.epsilon = a.epsilon;
            config.tiebreak = a.tiebreak;
            config.mode = a.controller_mode;
            let (plan, row) = offline_certify(&spec, &data, &config)?;
            write_json(&dir.join("plan.json"), &plan)?;
            write_csv(&dir.join("certification.csv"), std::slice::from_ref(&row))?;
        }
        Command::Collect(a) => {
            let spec = read_spec(&a.spec)?;
            let behavior = a.behavior.policy(&spec, a.tiebreak)?;
            let data = generate_dataset(&spec, &behavior, &a.behavior.label(), a.episodes, cli.seed);
            match out {
                Some(path) => data.write(path)?,
                None => data.to_writer(io::stdout().lock())?,
            }
        }
        Command::Rewardfree(a) => {
            let dir = out_dir(out)?;
            let spec = read_spec(&a.spec)?;
            let (est, rows) = reward_free_run(&spec, &ExploreConfig::new(a.k0, a.k, cli.seed), a.noise)?;
            write_json(&dir.join("rewards.json"), &est)?;
            write_csv(&dir.join("errors.csv"), &rows)?;
        }
        Command::Suite => {
            let path = cli.config.as_deref().context("suite needs --config <FILE>")?;
            let config = ExperimentConfig::read(path)?;
            let dir = match (out, &config.out) {
                (Some(dir), _) => dir.to_path_buf(),
                (None, Some(dir)) => dir.clone(),
                (None, None) => bail!("give --out or an `out` entry in the config"),
            };
            let manifest = run_suite(&config, &dir, cli.jobs)?;
            println!(
                "{} runs succeeded, {} failed; manifest at {}",
                manifest.summary.succeeded,
                manifest.summary.failed,
                dir.join("manifest.json").display()
            );
            return Ok(manifest.all_succeeded());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SNE_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
