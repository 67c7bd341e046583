//! Reward shaping. The total reward for a step is the sum of an itemized
//! breakdown, so every run can explain exactly where each point came from.

use serde::{Deserialize, Serialize};

/// Weights for the reward terms. All are magnitudes; signs are applied in
/// [`compute_reward`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Per attack neutralized by the agent's own changes.
    pub mitigation_reward: f64,
    /// Per breach.
    pub breach_penalty: f64,
    /// Per compliance violation the agent's action fixed.
    pub compliance_fix_reward: f64,
    /// Per compliance violation the agent's action introduced.
    pub compliance_break_penalty: f64,
    /// Per defensive action aimed at an entity not involved in any active
    /// attack.
    pub fp_disruption_penalty: f64,
    /// Charged every step an attack is running or breaching.
    pub step_attack_penalty: f64,
    /// Per compliance violation still outstanding after the step.
    pub violation_pressure: f64,
    /// Per applied agent change.
    pub change_cost: f64,
    /// For selecting an empty slot or a rejected action.
    pub invalid_action_penalty: f64,
    /// Per monitoring unit above the baseline posture.
    pub resource_rate: f64,
    /// Awarded on calm steps where the agent left the config alone.
    pub stability_bonus: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            mitigation_reward: 10.0,
            breach_penalty: 100.0,
            compliance_fix_reward: 5.0,
            compliance_break_penalty: 20.0,
            fp_disruption_penalty: 15.0,
            step_attack_penalty: 0.2,
            violation_pressure: 0.1,
            change_cost: 0.5,
            invalid_action_penalty: 0.1,
            resource_rate: 0.01,
            stability_bonus: 0.05,
        }
    }
}

/// Everything a step produced that the reward depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOutcome {
    pub neutralized_by_agent: u32,
    pub breaches: u32,
    pub violations_fixed: u32,
    pub violations_introduced: u32,
    pub outstanding_violations: u32,
    pub false_positives: u32,
    /// A real attack was running during the step or breached at its end.
    /// Neutralizing the last one clears this flag for the same step.
    pub attack_ongoing: bool,
    pub agent_changed: bool,
    pub invalid_action: bool,
    pub resource_units: u32,
}

/// Signed reward terms. [`RewardBreakdown::total`] sums them in declaration
/// order, which fixes the floating-point result exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub mitigation: f64,
    pub breach: f64,
    pub compliance_fixed: f64,
    pub compliance_introduced: f64,
    pub false_positive: f64,
    pub attack_pressure: f64,
    pub violation_pressure: f64,
    pub change_cost: f64,
    pub invalid_action: f64,
    pub resource_cost: f64,
    pub stability: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.mitigation
            + self.breach
            + self.compliance_fixed
            + self.compliance_introduced
            + self.false_positive
            + self.attack_pressure
            + self.violation_pressure
            + self.change_cost
            + self.invalid_action
            + self.resource_cost
            + self.stability
    }
}

pub fn compute_reward(cfg: &RewardConfig, o: &StepOutcome) -> RewardBreakdown {
    let mut b = RewardBreakdown::default();
    b.mitigation = cfg.mitigation_reward * f64::from(o.neutralized_by_agent);
    b.breach = -cfg.breach_penalty * f64::from(o.breaches);
    b.compliance_fixed = cfg.compliance_fix_reward * f64::from(o.violations_fixed);
    b.compliance_introduced = -cfg.compliance_break_penalty * f64::from(o.violations_introduced);
    b.false_positive = -cfg.fp_disruption_penalty * f64::from(o.false_positives);
    if o.attack_ongoing {
        b.attack_pressure = -cfg.step_attack_penalty;
    }
    b.violation_pressure = -cfg.violation_pressure * f64::from(o.outstanding_violations);
    if o.agent_changed {
        b.change_cost = -cfg.change_cost;
    }
    if o.invalid_action {
        b.invalid_action = -cfg.invalid_action_penalty;
    }
    b.resource_cost = -cfg.resource_rate * f64::from(o.resource_units);
    if !o.attack_ongoing && !o.agent_changed && !o.invalid_action {
        b.stability = cfg.stability_bonus;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    // Neutralizing an attack with a fresh deny: the mitigation reward minus
    // the cost of the change, nothing else.
    #[test]
    fn mitigation_step_totals_nine_and_a_half() {
        let o = StepOutcome {
            neutralized_by_agent: 1,
            agent_changed: true,
            ..Default::default()
        };
        let b = compute_reward(&RewardConfig::default(), &o);
        assert_eq!(b.mitigation, 10.0);
        assert_eq!(b.change_cost, -0.5);
        assert_eq!(b.stability, 0.0, "a changed config earns no stability bonus");
        assert_eq!(b.total(), 9.5);
    }

    // A breach lands while the attack is still pressing.
    #[test]
    fn breach_step_totals_minus_hundred_point_two() {
        let o = StepOutcome { breaches: 1, attack_ongoing: true, ..Default::default() };
        let b = compute_reward(&RewardConfig::default(), &o);
        assert_eq!(b.breach, -100.0);
        assert_eq!(b.attack_pressure, -0.2);
        assert_eq!(b.stability, 0.0);
        assert_eq!(b.total(), -100.2);
    }

    // Quiet step, hands off the keyboard.
    #[test]
    fn calm_noop_earns_the_stability_bonus_alone() {
        let b = compute_reward(&RewardConfig::default(), &StepOutcome::default());
        assert_eq!(b.total(), 0.05);
    }

    #[test]
    fn false_positive_outweighs_stability_concerns() {
        let o = StepOutcome { false_positives: 1, agent_changed: true, ..Default::default() };
        let b = compute_reward(&RewardConfig::default(), &o);
        assert_eq!(b.total(), -15.5);
    }

    #[test]
    fn fumbled_action_is_not_stability() {
        let o = StepOutcome { invalid_action: true, ..Default::default() };
        let b = compute_reward(&RewardConfig::default(), &o);
        assert_eq!(b.stability, 0.0);
        assert_eq!(b.total(), -0.1);
    }

    #[test]
    fn fixing_a_violation_pays_even_with_one_left() {
        let o = StepOutcome {
            violations_fixed: 1,
            outstanding_violations: 1,
            agent_changed: true,
            ..Default::default()
        };
        let b = compute_reward(&RewardConfig::default(), &o);
        assert_eq!(b.total(), 5.0 - 0.1 - 0.5);
    }

    #[test]
    fn resource_units_drain_slowly() {
        let o = StepOutcome { resource_units: 3, ..Default::default() };
        let b = compute_reward(&RewardConfig::default(), &o);
        assert_eq!(b.resource_cost, -0.03);
        assert_eq!(b.total(), 0.05 - 0.03);
    }

    #[test]
    fn total_is_the_sum_of_the_parts() {
        let o = StepOutcome {
            neutralized_by_agent: 2,
            breaches: 1,
            violations_fixed: 1,
            violations_introduced: 1,
            outstanding_violations: 2,
            false_positives: 1,
            attack_ongoing: true,
            agent_changed: true,
            invalid_action: false,
            resource_units: 4,
        };
        let b = compute_reward(&RewardConfig::default(), &o);
        let by_hand = 20.0 - 100.0 + 5.0 - 20.0 - 15.0 - 0.2 - 0.2 - 0.5 - 0.04;
        assert!((b.total() - by_hand).abs() < 1e-12);
    }
}
