use std::path::PathBuf;

use clap::{Args, ValueEnum};

use cloudward::harness::artifacts::curve_csv;
use cloudward::harness::train::{train_dqn, train_ppo, TrainReport};
use cloudward::rl::checkpoint::Checkpoint;

use super::{data, emit, load_config, resolve_run_dir, write_text, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AgentKind {
    Dqn,
    Ppo,
}

impl AgentKind {
    fn label(self) -> &'static str {
        match self {
            AgentKind::Dqn => "dqn",
            AgentKind::Ppo => "ppo",
        }
    }
}

#[derive(Args)]
pub struct TrainArgs {
    /// Run configuration TOML; every field defaults when omitted.
    pub config: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = AgentKind::Ppo)]
    pub agent: AgentKind,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Environment-step budget; training stops exactly here.
    #[arg(long, default_value_t = 200_000)]
    pub steps: u64,

    /// Rollout worker count. Training itself is single-threaded so runs
    /// reproduce bit for bit; the flag is accepted for interface symmetry
    /// with eval.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,

    /// Run directory; replaces the timestamped default under the output
    /// root.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    if args.workers == 0 {
        return Err(super::usage("--workers must be at least 1"));
    }
    let cfg = load_config(args.config.as_deref())?;
    let run_dir = resolve_run_dir(args.out, &cfg, args.agent.label(), args.seed);
    std::fs::create_dir_all(&run_dir)
        .map_err(|e| data(format!("cannot create {}: {e}", run_dir.display())))?;
    write_text(&run_dir.join("resolved.toml"), &cfg.resolved_toml())?;

    let topo = &cfg.topology;
    let env_cfg = cfg.env_config();
    let curriculum = cfg.curriculum_phases();

    let (checkpoint, report): (Checkpoint, TrainReport) = match args.agent {
        AgentKind::Dqn => {
            let (agent, report) =
                train_dqn(topo, &env_cfg, cfg.dqn.clone(), &curriculum, args.steps, args.seed)
                    .map_err(data)?;
            (Checkpoint::from_dqn(&agent), report)
        }
        AgentKind::Ppo => {
            let (agent, report) =
                train_ppo(topo, &env_cfg, cfg.ppo.clone(), &curriculum, args.steps, args.seed)
                    .map_err(data)?;
            (Checkpoint::from_ppo(&agent), report)
        }
    };

    let ckpt_path = run_dir.join("checkpoint.bin");
    checkpoint
        .save(&ckpt_path)
        .map_err(|e| data(format!("cannot write {}: {e}", ckpt_path.display())))?;
    write_text(&run_dir.join("curve.csv"), &curve_csv(&report.curve))?;

    let run_meta = serde_json::json!({
        "command": "train",
        "agent": args.agent.label(),
        "seed": args.seed,
        "steps_requested": args.steps,
        "env_steps": report.env_steps,
        "episodes": report.curve.len(),
        "updates": report.updates,
        "workers": args.workers,
    });
    write_text(
        &run_dir.join("run.json"),
        &format!("{}\n", serde_json::to_string_pretty(&run_meta).expect("json")),
    )?;

    emit(&format!(
        "run directory: {}\nagent: {}  seed: {}\nenv steps: {}\nepisodes: {}\nupdates: {}\n",
        run_dir.display(),
        args.agent.label(),
        args.seed,
        report.env_steps,
        report.curve.len(),
        report.updates,
    ))?;
    Ok(())
}
