use crate::error::{Error, Result};

/// Generalized advantage estimates and value targets for one sequence.
/// `dones[t]` marks that the episode ended after step `t`; `bootstrap` is
/// the value of the state following the last step.
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if values.len() != n { values.len() } else { dones.len() },
        });
    }
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut running = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        running = delta + gamma * lambda * live * running;
        adv[t] = running;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telescoping_sum() {
        let (adv, ret) = gae_advantages(&[1.0, 1.0], &[0.0, 0.0], &[false, false], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(adv, vec![2.0, 1.0]);
        assert_eq!(ret, vec![2.0, 1.0]);
    }

    #[test]
    fn zero_case() {
        let (adv, _) = gae_advantages(&[0.0; 4], &[0.0; 4], &[false; 4], 0.0, 0.99, 0.95).unwrap();
        assert!(adv.iter().all(|a| *a == 0.0));
    }

    #[test]
    fn done_cuts_the_future() {
        let a = gae_advantages(&[1.0, 5.0], &[0.0, 0.0], &[true, false], 0.0, 0.9, 0.9).unwrap().0;
        let b = gae_advantages(&[1.0, -7.0], &[0.0, 0.0], &[true, false], 3.0, 0.9, 0.9).unwrap().0;
        assert_eq!(a[0], 1.0);
        assert_eq!(a[0], b[0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(gae_advantages(&[1.0], &[0.0, 0.0], &[false], 0.0, 0.9, 0.9).is_err());
    }
}
