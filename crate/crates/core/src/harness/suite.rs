//! Held-out evaluation suites. Each one pins a scenario mix that stresses a
//! specific claim: mitigation without the baseline's help, restraint around
//! benign activity, response latency, and compliance hygiene under drift.

use serde::{Deserialize, Serialize};

use crate::env::sampler::ScenarioMix;
use crate::env::{Env, EnvConfig, EnvError};
use crate::world::scenario::ScenarioKind;
use crate::world::topology::TopologyConfig;

use super::agent::Agent;
use super::episode::{run_episode, EpisodeStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalSuite {
    /// Attacks from ranges the baseline config has never heard of, so a
    /// static defender mitigates none of them.
    NonBlockable,
    /// Every episode contains a benign admin burst alongside real attacks.
    FalsePositive,
    /// Slow-burn attack variants with room for delayed responders, for
    /// latency measurement.
    Response,
    /// Every episode contains config drift planting a violation.
    Drift,
    /// The everything mix, as sampled in the last training phase.
    Full,
}

impl EvalSuite {
    pub const ALL: [EvalSuite; 5] = [
        EvalSuite::NonBlockable,
        EvalSuite::FalsePositive,
        EvalSuite::Response,
        EvalSuite::Drift,
        EvalSuite::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalSuite::NonBlockable => "non-blockable",
            EvalSuite::FalsePositive => "false-positive",
            EvalSuite::Response => "response",
            EvalSuite::Drift => "drift",
            EvalSuite::Full => "full",
        }
    }

    pub fn mix(self) -> ScenarioMix {
        match self {
            EvalSuite::NonBlockable => ScenarioMix {
                blockable_fraction: 0.0,
                min_scenarios: 2,
                max_scenarios: 2,
                onset_min: 5,
                onset_max: 400,
                ..ScenarioMix::single_attack()
            },
            EvalSuite::FalsePositive => ScenarioMix {
                always: vec![ScenarioKind::BenignAdminBurst],
                benign_burst: 0.5,
                blockable_fraction: 0.0,
                min_scenarios: 2,
                max_scenarios: 3,
                onset_min: 5,
                onset_max: 400,
                ..ScenarioMix::single_attack()
            },
            EvalSuite::Response => ScenarioMix {
                blockable_fraction: 0.0,
                slow: true,
                min_scenarios: 1,
                max_scenarios: 1,
                onset_min: 5,
                onset_max: 400,
                ..ScenarioMix::single_attack()
            },
            EvalSuite::Drift => ScenarioMix {
                always: vec![ScenarioKind::ConfigDrift],
                blockable_fraction: 0.0,
                min_scenarios: 1,
                max_scenarios: 2,
                onset_min: 5,
                onset_max: 400,
                ..ScenarioMix::single_attack()
            },
            EvalSuite::Full => ScenarioMix::full(),
        }
    }
}

/// Run `episodes` seeded episodes of a suite. Episode k uses seed
/// `seed0 + k`, so suites are directly comparable across agents.
pub fn run_suite(
    agent: &mut dyn Agent,
    topo: &TopologyConfig,
    base: &EnvConfig,
    suite: EvalSuite,
    episodes: u64,
    seed0: u64,
) -> Result<Vec<EpisodeStats>, EnvError> {
    let cfg = EnvConfig { mix: suite.mix(), ..base.clone() };
    let (mut env, _) = Env::new(topo.clone(), cfg, seed0)?;
    let mut out = Vec::with_capacity(episodes as usize);
    for k in 0..episodes {
        out.push(run_episode(&mut env, agent, seed0 + k)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::agent::{MlHumanDelay, ScriptedResponder, StaticPolicy};
    use crate::harness::metrics::compute_metrics;
    use crate::world::IncidentOutcome;

    fn run(agent: &mut dyn Agent, suite: EvalSuite, episodes: u64) -> Vec<EpisodeStats> {
        run_suite(agent, &TopologyConfig::default(), &EnvConfig::default(), suite, episodes, 9000).unwrap()
    }

    #[test]
    fn static_mitigates_nothing_on_the_non_blockable_suite() {
        let eps = run(&mut StaticPolicy, EvalSuite::NonBlockable, 6);
        let m = compute_metrics("static", &eps);
        assert_eq!(m.mitigation_rate, Some(0.0));
        assert_eq!(m.true_positive_rate, Some(0.0));
        assert!(m.total_breaches > 0);
    }

    #[test]
    fn static_leaves_drift_violations_outstanding() {
        let eps = run(&mut StaticPolicy, EvalSuite::Drift, 6);
        let m = compute_metrics("static", &eps);
        assert!(m.mean_outstanding_violations >= 1.0);
        assert!(m.max_outstanding_violations >= 1);
    }

    #[test]
    fn scripted_clears_drift_suites_completely() {
        let eps = run(&mut ScriptedResponder, EvalSuite::Drift, 6);
        let m = compute_metrics("scripted", &eps);
        assert_eq!(m.max_outstanding_violations, 0);
        assert_eq!(m.mitigation_rate, Some(1.0));
    }

    #[test]
    fn delayed_human_lands_inside_the_review_window() {
        let eps = run(&mut MlHumanDelay::new(), EvalSuite::Response, 10);
        let m = compute_metrics("ml-human", &eps);
        let median = m.median_response_seconds.expect("responses exist");
        assert!(
            (300.0..=900.0).contains(&median),
            "median response {median} outside the paging window"
        );
        assert!(m.mitigation_rate.unwrap() > 0.8, "slow-burn attacks leave time to act");
        assert_eq!(m.false_positive_rate, None, "no benign scenarios in this suite");
    }

    #[test]
    fn delayed_human_never_touches_benign_bursts() {
        let eps = run(&mut MlHumanDelay::new(), EvalSuite::FalsePositive, 8);
        let m = compute_metrics("ml-human", &eps);
        assert_eq!(m.false_positive_rate, Some(0.0));
        for ep in &eps {
            for s in &ep.scenarios {
                if !s.truth_malicious {
                    assert_eq!(s.outcome, Some(IncidentOutcome::Expired));
                }
            }
        }
    }

    #[test]
    fn scripted_handles_the_full_mix() {
        let eps = run(&mut ScriptedResponder, EvalSuite::Full, 6);
        let m = compute_metrics("scripted", &eps);
        assert!(m.mitigation_rate.unwrap_or(1.0) > 0.9);
        assert_eq!(m.false_positive_rate.unwrap_or(0.0), 0.0);
        assert_eq!(m.max_outstanding_violations, 0);
    }
}
