use std::path::PathBuf;

use clap::Args;

use cloudward::env::action_space::ActionId;
use cloudward::env::Env;
use cloudward::world::event::SecurityEvent;
use cloudward::world::trace::{parse_trace, TraceOptions};

use super::{data, emit, load_config, write_text, CliError};

#[derive(Args)]
pub struct ReplayArgs {
    /// Recorded event trace (CSV). A truth column is rejected here; replays
    /// must not carry ground-truth labels.
    pub trace: PathBuf,

    /// Run configuration TOML; every field defaults when omitted.
    pub config: Option<PathBuf>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write the JSON-lines episode log here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ReplayArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.trace)
        .map_err(|e| data(format!("cannot read {}: {e}", args.trace.display())))?;
    let events = parse_trace(&text, TraceOptions { allow_truth: false })
        .map_err(|e| data(format!("{}: {e}", args.trace.display())))?;

    let cfg = load_config(args.config.as_deref())?;
    // Scenario sampling is off during replay: the only activity in the
    // world is what the trace injects.
    let mut env_cfg = cfg.env_config();
    env_cfg.mix.min_scenarios = 0;
    env_cfg.mix.max_scenarios = 0;
    env_cfg.mix.always.clear();

    let (mut env, _) = Env::new(cfg.topology.clone(), env_cfg, args.seed).map_err(data)?;
    env.inject_replay(events).map_err(data)?;

    let mut log = String::new();
    while !env.is_done() {
        let t = env.step(ActionId::NOOP).map_err(data)?;
        let step = env.world().step_count();
        let events_now: Vec<&SecurityEvent> =
            env.window_events().filter(|e| e.step == step).collect();
        let line = serde_json::json!({
            "step": step,
            "reward": t.reward,
            "events": events_now,
            "incidents": t.info.incidents,
            "breaches": t.info.outcome.breaches,
            "outstanding_violations": t.info.outcome.outstanding_violations,
        });
        log.push_str(&serde_json::to_string(&line).expect("json"));
        log.push('\n');
    }

    match &args.out {
        Some(path) => write_text(path, &log)?,
        None => emit(&log)?,
    }
    Ok(())
}
