//! Generalized advantage estimation over a single rollout, computed with
//! the standard backward recursion. Episode boundaries inside the rollout
//! are honored through the done mask.

/// `values` must hold one entry per step plus a bootstrap value for the
/// state after the last step (zero if that state was terminal). Returns
/// `(advantages, returns)` where `returns[t] = advantages[t] + values[t]`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n + 1, "values needs a bootstrap entry");
    assert_eq!(dones.len(), n);
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * mask - values[t];
        acc = delta + gamma * lambda * mask * acc;
        adv[t] = acc;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}
