//! Aggregates episode statistics into the comparison metrics: mitigation
//! rate, detection rates, response latency, update cadence, and compliance
//! hygiene.

use serde::{Deserialize, Serialize};

use crate::world::IncidentOutcome;

use super::episode::EpisodeStats;

/// Episodes simulate exactly one hour of wall time.
pub const EPISODE_HOURS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub agent: String,
    pub episodes: usize,
    pub scenarios: usize,
    /// Neutralized / (neutralized + breached), over real attacks.
    pub mitigation_rate: Option<f64>,
    /// Real attacks with observable events that drew a matching defensive
    /// action, over all such attacks.
    pub true_positive_rate: Option<f64>,
    /// Benign scenarios disturbed by a defensive action, over all benign.
    pub false_positive_rate: Option<f64>,
    /// Median seconds from first observable event to neutralization, over
    /// attacks the agent stopped itself.
    pub median_response_seconds: Option<f64>,
    pub mean_policy_updates_per_hour: f64,
    pub mean_policy_updates_per_day: f64,
    pub mean_outstanding_violations: f64,
    pub max_outstanding_violations: u32,
    pub mean_episode_reward: f64,
    pub total_breaches: u32,
    pub total_neutralized_by_agent: u32,
    pub total_fp_actions: u32,
    pub total_guardrail_rejections: u32,
}

pub fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 })
}

pub fn compute_metrics(agent: &str, episodes: &[EpisodeStats]) -> MetricsReport {
    let mut malicious_neutralized = 0usize;
    let mut malicious_breached = 0usize;
    let mut observable_malicious = 0usize;
    let mut observable_defended = 0usize;
    let mut benign_total = 0usize;
    let mut benign_touched = 0usize;
    let mut responses: Vec<f64> = Vec::new();
    let mut scenario_count = 0usize;

    for ep in episodes {
        for s in &ep.scenarios {
            scenario_count += 1;
            if s.truth_malicious {
                match s.outcome {
                    Some(IncidentOutcome::Neutralized) => malicious_neutralized += 1,
                    Some(IncidentOutcome::Breached) => malicious_breached += 1,
                    _ => {}
                }
                if s.first_event_step.is_some() {
                    observable_malicious += 1;
                    if s.defended() {
                        observable_defended += 1;
                    }
                }
                if let Some(r) = s.response_seconds() {
                    responses.push(r);
                }
            } else {
                benign_total += 1;
                if s.defended() {
                    benign_touched += 1;
                }
            }
        }
    }

    let n = episodes.len().max(1) as f64;
    let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
    let updates_per_hour =
        episodes.iter().map(|e| f64::from(e.agent_changes)).sum::<f64>() / n / EPISODE_HOURS;
    // Sum rewards in value order so aggregation ignores episode order even
    // in the last floating-point bit.
    let mut rewards: Vec<f64> = episodes.iter().map(|e| e.total_reward).collect();
    rewards.sort_by(f64::total_cmp);

    MetricsReport {
        agent: agent.to_string(),
        episodes: episodes.len(),
        scenarios: scenario_count,
        mitigation_rate: ratio(malicious_neutralized, malicious_neutralized + malicious_breached),
        true_positive_rate: ratio(observable_defended, observable_malicious),
        false_positive_rate: ratio(benign_touched, benign_total),
        median_response_seconds: median(&mut responses),
        mean_policy_updates_per_hour: updates_per_hour,
        mean_policy_updates_per_day: updates_per_hour * 24.0,
        mean_outstanding_violations: episodes.iter().map(|e| f64::from(e.violations_at_end)).sum::<f64>() / n,
        max_outstanding_violations: episodes.iter().map(|e| e.violations_at_end).max().unwrap_or(0),
        mean_episode_reward: rewards.iter().sum::<f64>() / n,
        total_breaches: episodes.iter().map(|e| e.breaches).sum(),
        total_neutralized_by_agent: episodes.iter().map(|e| e.neutralized_by_agent).sum(),
        total_fp_actions: episodes.iter().map(|e| e.fp_actions).sum(),
        total_guardrail_rejections: episodes.iter().map(|e| e.guardrail_rejections).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::episode::ScenarioStat;
    use crate::world::scenario::ScenarioKind;

    fn scenario(kind: ScenarioKind, outcome: Option<IncidentOutcome>, defended: Option<u64>) -> ScenarioStat {
        ScenarioStat {
            id: "s".into(),
            kind,
            truth_malicious: kind != ScenarioKind::BenignAdminBurst,
            baseline_blockable: false,
            outcome,
            first_event_step: Some(10),
            concluded_step: Some(14),
            agent_attributed: outcome == Some(IncidentOutcome::Neutralized),
            defended_step: defended,
        }
    }

    fn episode(scenarios: Vec<ScenarioStat>) -> EpisodeStats {
        EpisodeStats {
            seed: 0,
            steps: 720,
            total_reward: 1.0,
            scenarios,
            agent_changes: 3,
            fp_actions: 0,
            invalid_actions: 0,
            guardrail_rejections: 0,
            breaches: 0,
            neutralized_by_agent: 0,
            violations_at_end: 1,
        }
    }

    #[test]
    fn rates_come_out_as_hand_computed() {
        let eps = vec![episode(vec![
            scenario(ScenarioKind::PortScan, Some(IncidentOutcome::Neutralized), Some(12)),
            scenario(ScenarioKind::Ddos, Some(IncidentOutcome::Breached), None),
            scenario(ScenarioKind::BenignAdminBurst, Some(IncidentOutcome::Expired), Some(20)),
            scenario(ScenarioKind::BenignAdminBurst, Some(IncidentOutcome::Expired), None),
        ])];
        let m = compute_metrics("t", &eps);
        assert_eq!(m.mitigation_rate, Some(0.5));
        assert_eq!(m.true_positive_rate, Some(0.5));
        assert_eq!(m.false_positive_rate, Some(0.5));
        // (14 - 10) steps * 5 s.
        assert_eq!(m.median_response_seconds, Some(20.0));
        assert_eq!(m.mean_policy_updates_per_hour, 3.0);
        assert_eq!(m.mean_policy_updates_per_day, 72.0);
        assert_eq!(m.mean_outstanding_violations, 1.0);
    }

    #[test]
    fn empty_denominators_render_as_none() {
        let m = compute_metrics("t", &[episode(vec![])]);
        assert_eq!(m.mitigation_rate, None);
        assert_eq!(m.true_positive_rate, None);
        assert_eq!(m.false_positive_rate, None);
        assert_eq!(m.median_response_seconds, None);
    }

    #[test]
    fn median_of_even_and_odd_sets() {
        assert_eq!(median(&mut vec![3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut vec![4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut Vec::new()), None);
    }

    // Config drift that never concludes still shows up as undefended
    // malicious exposure, not as a mitigation failure.
    #[test]
    fn open_drift_affects_neither_rate() {
        let eps = vec![episode(vec![scenario(ScenarioKind::ConfigDrift, None, None)])];
        let m = compute_metrics("t", &eps);
        assert_eq!(m.mitigation_rate, None);
        assert_eq!(m.true_positive_rate, Some(0.0));
    }

    // Episodes are independent and may complete in any order; aggregation
    // must not care, down to the last bit.
    #[test]
    fn aggregation_is_order_insensitive() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        let mut eps: Vec<EpisodeStats> = (0..17)
            .map(|k| {
                let mut e = episode(vec![scenario(
                    ScenarioKind::PortScan,
                    Some(IncidentOutcome::Neutralized),
                    Some(12 + k),
                )]);
                e.total_reward = 0.1 * k as f64 - 3.33;
                e.violations_at_end = (k % 3) as u32;
                e
            })
            .collect();
        let base = compute_metrics("t", &eps);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            eps.shuffle(&mut rng);
            assert_eq!(compute_metrics("t", &eps), base);
        }
    }
}
