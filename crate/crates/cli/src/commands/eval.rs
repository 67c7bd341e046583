use std::path::PathBuf;

use clap::{Args, ValueEnum};

use cloudward::config::RunConfig;
use cloudward::env::action_space::ACTION_COUNT;
use cloudward::env::feature::FEATURE_DIM;
use cloudward::env::EnvConfig;
use cloudward::harness::agent::{
    Agent, GreedyDqn, GreedyPpo, MlHumanDelay, ScriptedResponder, StaticPolicy,
};
use cloudward::harness::artifacts::metrics_csv;
use cloudward::harness::episode::EpisodeStats;
use cloudward::harness::metrics::compute_metrics;
use cloudward::harness::report::render_measured;
use cloudward::harness::suite::{run_suite, EvalSuite};
use cloudward::rl::checkpoint::{Checkpoint, CheckpointKind};
use cloudward::rl::dqn::{DqnAgent, DqnConfig};
use cloudward::rl::ppo::{PpoAgent, PpoConfig};

use super::{data, emit, load_config, resolve_run_dir, usage, write_text, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Static,
    MlHuman,
    Scripted,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Trained checkpoint; omit when --baseline is given.
    pub checkpoint: Option<PathBuf>,

    /// Run configuration TOML; every field defaults when omitted.
    pub config: Option<PathBuf>,

    /// Evaluate a built-in agent instead of a checkpoint.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,

    /// Episodes per suite; defaults to the config's eval.episodes.
    #[arg(long)]
    pub episodes: Option<u64>,

    /// Base seed for suite episodes; defaults to the config's eval.seed.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Suites to run (repeatable); defaults to the config's eval.suites.
    #[arg(long = "suite")]
    pub suites: Vec<String>,

    /// Worker threads; suites run in parallel when above 1. Results do not
    /// depend on the worker count.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Run directory; replaces the timestamped default under the output
    /// root.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// How to construct a fresh agent instance, once per suite so workers never
/// share mutable state.
enum AgentSpec {
    Static,
    MlHuman,
    Scripted,
    Checkpoint(Checkpoint),
}

impl AgentSpec {
    fn name(&self) -> &'static str {
        match self {
            AgentSpec::Static => "static",
            AgentSpec::MlHuman => "ml-human",
            AgentSpec::Scripted => "scripted",
            AgentSpec::Checkpoint(ck) => match ck.kind {
                CheckpointKind::Dqn => "dqn",
                CheckpointKind::Ppo => "ppo",
            },
        }
    }

    fn build(&self, cfg: &RunConfig) -> Result<Box<dyn Agent>, CliError> {
        match self {
            AgentSpec::Static => Ok(Box::new(StaticPolicy)),
            AgentSpec::MlHuman => Ok(Box::new(MlHumanDelay::new())),
            AgentSpec::Scripted => Ok(Box::new(ScriptedResponder)),
            AgentSpec::Checkpoint(ck) => match ck.kind {
                CheckpointKind::Dqn => {
                    let dcfg = DqnConfig { hidden: hidden_of(ck), ..cfg.dqn.clone() };
                    let mut agent = DqnAgent::new(FEATURE_DIM, ACTION_COUNT, dcfg, 0);
                    ck.apply_to_dqn(&mut agent).map_err(data)?;
                    Ok(Box::new(GreedyDqn::new(agent)))
                }
                CheckpointKind::Ppo => {
                    let pcfg = PpoConfig { hidden: hidden_of(ck), ..cfg.ppo.clone() };
                    let mut agent = PpoAgent::new(FEATURE_DIM, ACTION_COUNT, pcfg, 0);
                    ck.apply_to_ppo(&mut agent).map_err(data)?;
                    Ok(Box::new(GreedyPpo::new(agent)))
                }
            },
        }
    }
}

/// Interior layer widths of the checkpoint's first network.
fn hidden_of(ck: &Checkpoint) -> Vec<usize> {
    let dims = ck.nets[0].dims();
    dims[1..dims.len() - 1].to_vec()
}

/// A checkpoint must match this build's observation and action sizes; the
/// hidden widths come from the checkpoint itself.
fn check_checkpoint(ck: &Checkpoint) -> Result<(), CliError> {
    if ck.nets.is_empty() {
        return Err(data("checkpoint carries no networks"));
    }
    let in_dim = ck.nets[0].in_dim();
    if in_dim != FEATURE_DIM {
        return Err(data(format!(
            "checkpoint expects {in_dim}-dimensional observations, \
             but this environment produces {FEATURE_DIM}"
        )));
    }
    let out_dim = ck.nets[0].out_dim();
    if out_dim != ACTION_COUNT {
        return Err(data(format!(
            "checkpoint emits {out_dim} action values, \
             but this environment has {ACTION_COUNT} actions"
        )));
    }
    Ok(())
}

fn parse_suites(names: &[String]) -> Result<Vec<EvalSuite>, CliError> {
    names
        .iter()
        .map(|n| {
            EvalSuite::ALL
                .into_iter()
                .find(|s| s.name() == n)
                .ok_or_else(|| {
                    let known: Vec<&str> = EvalSuite::ALL.iter().map(|s| s.name()).collect();
                    usage(format!("unknown suite {n:?}; expected one of {}", known.join(", ")))
                })
        })
        .collect()
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    if args.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    // With --baseline there is no checkpoint, so a single positional is the
    // config path.
    let (ckpt_path, config_path) = match (args.checkpoint, args.config, args.baseline) {
        (Some(p), None, Some(_)) => (None, Some(p)),
        (ckpt, config, _) => (ckpt, config),
    };
    let spec = match (&ckpt_path, args.baseline) {
        (Some(_), Some(_)) => {
            return Err(usage("give either a checkpoint or --baseline, not both"))
        }
        (None, None) => return Err(usage("give a checkpoint path or --baseline")),
        (None, Some(Baseline::Static)) => AgentSpec::Static,
        (None, Some(Baseline::MlHuman)) => AgentSpec::MlHuman,
        (None, Some(Baseline::Scripted)) => AgentSpec::Scripted,
        (Some(path), None) => {
            let ck = Checkpoint::load(path)
                .map_err(|e| data(format!("cannot load {}: {e}", path.display())))?;
            check_checkpoint(&ck)?;
            AgentSpec::Checkpoint(ck)
        }
    };

    let cfg = load_config(config_path.as_deref())?;
    let episodes = args.episodes.unwrap_or(cfg.eval.episodes);
    if episodes == 0 {
        return Err(usage("--episodes must be at least 1"));
    }
    let seed0 = args.seed.unwrap_or(cfg.eval.seed);
    let suites = if args.suites.is_empty() {
        cfg.eval.suites.clone()
    } else {
        parse_suites(&args.suites)?
    };

    let env_cfg = cfg.env_config();
    let results = run_all(&spec, &cfg, &env_cfg, &suites, episodes, seed0, args.workers)?;

    let run_dir = resolve_run_dir(args.out, &cfg, &format!("eval-{}", spec.name()), seed0);
    std::fs::create_dir_all(&run_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", run_dir.display())))?;
    write_text(&run_dir.join("resolved.toml"), &cfg.resolved_toml())?;

    let mut labeled = Vec::new();
    for (suite, stats) in &results {
        let report = compute_metrics(spec.name(), stats);
        write_text(
            &run_dir.join(format!("report-{}.json", suite.name())),
            &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")),
        )?;
        let mut row = report;
        row.agent = format!("{}:{}", spec.name(), suite.name());
        labeled.push(row);
    }
    write_text(&run_dir.join("metrics.csv"), &metrics_csv(&labeled))?;

    let run_meta = serde_json::json!({
        "command": "eval",
        "agent": spec.name(),
        "episodes_per_suite": episodes,
        "seed": seed0,
        "suites": suites.iter().map(|s| s.name()).collect::<Vec<_>>(),
        "workers": args.workers,
    });
    write_text(
        &run_dir.join("run.json"),
        &format!("{}\n", serde_json::to_string_pretty(&run_meta).expect("json")),
    )?;

    emit(&format!("{}\nrun directory: {}\n", render_measured(&labeled), run_dir.display()))?;
    Ok(())
}

fn run_all(
    spec: &AgentSpec,
    cfg: &RunConfig,
    env_cfg: &EnvConfig,
    suites: &[EvalSuite],
    episodes: u64,
    seed0: u64,
    workers: usize,
) -> Result<Vec<(EvalSuite, Vec<EpisodeStats>)>, CliError> {
    let one = |suite: EvalSuite| -> Result<(EvalSuite, Vec<EpisodeStats>), CliError> {
        let mut agent = spec.build(cfg)?;
        let stats = run_suite(agent.as_mut(), &cfg.topology, env_cfg, suite, episodes, seed0)
            .map_err(data)?;
        Ok((suite, stats))
    };
    if workers <= 1 || suites.len() <= 1 {
        return suites.iter().map(|&s| one(s)).collect();
    }
    // One thread per suite; every thread builds its own agent and
    // environment, so the suite seeds (and therefore the results) are the
    // same as in the serial path.
    std::thread::scope(|scope| {
        let handles: Vec<_> = suites.iter().map(|&s| scope.spawn(move || one(s))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("suite worker panicked"))
            .collect()
    })
}
