//! Whole-run configuration: one TOML file covering topology, scenario mix,
//! rewards, environment knobs, both agents, the curriculum, and evaluation.
//! Every field defaults, so an empty file is a complete runnable config,
//! and unknown keys are rejected to catch typos.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::reward::RewardConfig;
use crate::env::sampler::ScenarioMix;
use crate::env::{EnvConfig, DEFAULT_EPISODE_LEN, DEFAULT_WINDOW_STEPS};
use crate::harness::suite::EvalSuite;
use crate::harness::train::{default_curriculum, CurriculumPhase};
use crate::rl::dqn::DqnConfig;
use crate::rl::ppo::PpoConfig;
use crate::world::topology::{TopologyConfig, TopologyError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub episode_len: u64,
    pub window_steps: u64,
    pub guardrails: bool,
}

impl Default for EnvSection {
    fn default() -> Self {
        EnvSection {
            episode_len: DEFAULT_EPISODE_LEN,
            window_steps: DEFAULT_WINDOW_STEPS,
            guardrails: true,
        }
    }
}

/// One curriculum phase as written in config. `name` may pick a preset mix
/// ("single-attack", "multi-threat", "full"); an explicit `mix` table
/// overrides the preset and frees the name for labeling.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSpec {
    pub name: String,
    pub episodes: u32,
    pub mix: Option<ScenarioMix>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumSection {
    /// Empty means the built-in three-phase curriculum.
    pub phases: Vec<PhaseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub suites: Vec<EvalSuite>,
    pub episodes: u64,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { suites: EvalSuite::ALL.to_vec(), episodes: 200, seed: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Parent directory for run directories; the CLOUDWARD_RUNS environment
    /// variable and the --out flag both override it.
    pub root: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { root: "runs".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologyConfig,
    pub scenarios: ScenarioMix,
    pub rewards: RewardConfig,
    pub env: EnvSection,
    pub dqn: DqnConfig,
    pub ppo: PpoConfig,
    pub curriculum: CurriculumSection,
    pub eval: EvalSection,
    pub output: OutputSection,
}

fn preset_mix(name: &str) -> Option<ScenarioMix> {
    match name {
        "single-attack" => Some(ScenarioMix::single_attack()),
        "multi-threat" => Some(ScenarioMix::multi_threat()),
        "full" => Some(ScenarioMix::full()),
        _ => None,
    }
}

fn check_mix(mix: &ScenarioMix, where_: &str) -> Result<(), ConfigError> {
    let weights = [
        ("port_scan", mix.port_scan),
        ("ddos", mix.ddos),
        ("web_exploit", mix.web_exploit),
        ("cred_compromise", mix.cred_compromise),
        ("benign_burst", mix.benign_burst),
        ("config_drift", mix.config_drift),
    ];
    for (name, w) in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(ConfigError::Invalid(format!(
                "{where_}.{name}: weight must be finite and >= 0, got {w}"
            )));
        }
    }
    if !(0.0..=1.0).contains(&mix.blockable_fraction) {
        return Err(ConfigError::Invalid(format!(
            "{where_}.blockable_fraction must be in [0, 1], got {}",
            mix.blockable_fraction
        )));
    }
    if mix.min_scenarios > mix.max_scenarios {
        return Err(ConfigError::Invalid(format!(
            "{where_}: min_scenarios {} exceeds max_scenarios {}",
            mix.min_scenarios, mix.max_scenarios
        )));
    }
    if mix.onset_min > mix.onset_max {
        return Err(ConfigError::Invalid(format!(
            "{where_}: onset_min {} exceeds onset_max {}",
            mix.onset_min, mix.onset_max
        )));
    }
    Ok(())
}

fn positive(value: f64, name: &str) -> Result<(), ConfigError> {
    if !value.is_finite() || value <= 0.0 {
        return Err(ConfigError::Invalid(format!("{name} must be finite and > 0, got {value}")));
    }
    Ok(())
}

fn unit_interval(value: f64, name: &str) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(ConfigError::Invalid(format!("{name} must be in [0, 1], got {value}")));
    }
    Ok(())
}

fn hidden_ok(hidden: &[usize], name: &str) -> Result<(), ConfigError> {
    if hidden.is_empty() || hidden.iter().any(|&d| d == 0) {
        return Err(ConfigError::Invalid(format!(
            "{name} must list at least one nonzero layer width"
        )));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        RunConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.topology.validate()?;
        check_mix(&self.scenarios, "scenarios")?;

        let r = &self.rewards;
        for (value, name) in [
            (r.mitigation_reward, "rewards.mitigation_reward"),
            (r.breach_penalty, "rewards.breach_penalty"),
            (r.compliance_fix_reward, "rewards.compliance_fix_reward"),
            (r.compliance_break_penalty, "rewards.compliance_break_penalty"),
            (r.fp_disruption_penalty, "rewards.fp_disruption_penalty"),
            (r.step_attack_penalty, "rewards.step_attack_penalty"),
            (r.violation_pressure, "rewards.violation_pressure"),
            (r.change_cost, "rewards.change_cost"),
            (r.invalid_action_penalty, "rewards.invalid_action_penalty"),
            (r.resource_rate, "rewards.resource_rate"),
            (r.stability_bonus, "rewards.stability_bonus"),
        ] {
            if !value.is_finite() {
                return Err(ConfigError::Invalid(format!("{name} must be finite, got {value}")));
            }
        }

        if self.env.episode_len == 0 {
            return Err(ConfigError::Invalid("env.episode_len must be >= 1".into()));
        }
        if self.env.window_steps == 0 {
            return Err(ConfigError::Invalid("env.window_steps must be >= 1".into()));
        }

        hidden_ok(&self.dqn.hidden, "dqn.hidden")?;
        unit_interval(self.dqn.gamma, "dqn.gamma")?;
        positive(self.dqn.lr, "dqn.lr")?;
        unit_interval(self.dqn.epsilon_start, "dqn.epsilon_start")?;
        unit_interval(self.dqn.epsilon_end, "dqn.epsilon_end")?;
        if self.dqn.epsilon_end > self.dqn.epsilon_start {
            return Err(ConfigError::Invalid(
                "dqn.epsilon_end must not exceed dqn.epsilon_start".into(),
            ));
        }
        if self.dqn.batch_size == 0 || self.dqn.buffer_capacity < self.dqn.batch_size {
            return Err(ConfigError::Invalid(
                "dqn.buffer_capacity must be >= dqn.batch_size >= 1".into(),
            ));
        }
        if self.dqn.epsilon_decay_steps == 0
            || self.dqn.target_sync == 0
            || self.dqn.train_every == 0
        {
            return Err(ConfigError::Invalid(
                "dqn decay, sync, and train cadences must be >= 1".into(),
            ));
        }

        hidden_ok(&self.ppo.hidden, "ppo.hidden")?;
        unit_interval(self.ppo.gamma, "ppo.gamma")?;
        unit_interval(self.ppo.lambda, "ppo.lambda")?;
        positive(self.ppo.clip, "ppo.clip")?;
        positive(self.ppo.lr, "ppo.lr")?;
        if self.ppo.minibatch == 0 || self.ppo.horizon < self.ppo.minibatch {
            return Err(ConfigError::Invalid(
                "ppo.horizon must be >= ppo.minibatch >= 1".into(),
            ));
        }
        if self.ppo.epochs == 0 {
            return Err(ConfigError::Invalid("ppo.epochs must be >= 1".into()));
        }

        for (i, phase) in self.curriculum.phases.iter().enumerate() {
            if phase.episodes == 0 {
                return Err(ConfigError::Invalid(format!(
                    "curriculum.phases[{i}] \"{}\": episodes must be >= 1",
                    phase.name
                )));
            }
            match &phase.mix {
                Some(mix) => check_mix(mix, &format!("curriculum.phases[{i}].mix"))?,
                None => {
                    if preset_mix(&phase.name).is_none() {
                        return Err(ConfigError::Invalid(format!(
                            "curriculum.phases[{i}]: \"{}\" is not a preset mix \
                             (single-attack, multi-threat, full) and no mix table was given",
                            phase.name
                        )));
                    }
                }
            }
        }

        if self.eval.suites.is_empty() {
            return Err(ConfigError::Invalid("eval.suites must list at least one suite".into()));
        }
        if self.eval.episodes == 0 {
            return Err(ConfigError::Invalid("eval.episodes must be >= 1".into()));
        }

        Ok(())
    }

    /// Assemble the environment configuration from the env, scenarios, and
    /// rewards sections.
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            episode_len: self.env.episode_len,
            window_steps: self.env.window_steps,
            guardrails: self.env.guardrails,
            mix: self.scenarios.clone(),
            rewards: self.rewards.clone(),
        }
    }

    /// The resolved curriculum; only valid after `validate` has passed.
    pub fn curriculum_phases(&self) -> Vec<CurriculumPhase> {
        if self.curriculum.phases.is_empty() {
            return default_curriculum();
        }
        self.curriculum
            .phases
            .iter()
            .map(|p| CurriculumPhase {
                name: p.name.clone(),
                mix: p.mix.clone().or_else(|| preset_mix(&p.name)).unwrap_or_default(),
                episodes: p.episodes,
            })
            .collect()
    }

    /// The fully-defaulted config rendered back to TOML. Written into each
    /// run directory so the run can be reproduced from the snapshot alone.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}
