//! TD(λ) advantage estimation over reset decisions.

use serde::{Deserialize, Serialize};

/// One decision step as seen by the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdStep {
    pub reward: f64,
    pub value: f64,
    /// Value of the following decision state; ignored when `done`.
    pub next_value: f64,
    pub done: bool,
}

impl TdStep {
    pub fn delta(&self, gamma: f64) -> f64 {
        let bootstrap = if self.done { 0.0 } else { gamma * self.next_value };
        self.reward + bootstrap - self.value
    }
}

/// `A_t = Σ_k (γλ)^k δ_{t+k}`, with the sum stopping after a `done` step.
pub fn compute_advantages(steps: &[TdStep], gamma: f64, lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; steps.len()];
    let mut running = 0.0;
    for (t, s) in steps.iter().enumerate().rev() {
        let carry = if s.done { 0.0 } else { gamma * lambda * running };
        running = s.delta(gamma) + carry;
        out[t] = running;
    }
    out
}

/// Critic regression targets `A_t + V(s_t)`.
pub fn lambda_returns(steps: &[TdStep], advantages: &[f64]) -> Vec<f64> {
    steps.iter().zip(advantages).map(|(s, a)| a + s.value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    /// Direct double sum: for each t, add (γλ)^k δ_{t+k} until the first
    /// terminal step at or after t.
    fn brute_force(steps: &[TdStep], gamma: f64, lambda: f64) -> Vec<f64> {
        (0..steps.len())
            .map(|t| {
                let mut acc = 0.0;
                for k in 0..steps.len() - t {
                    let s = &steps[t + k];
                    acc += (gamma * lambda).powi(k as i32) * s.delta(gamma);
                    if s.done {
                        break;
                    }
                }
                acc
            })
            .collect()
    }

    fn random_trajectory(seed: u64, n: usize) -> Vec<TdStep> {
        let mut rng = stream(seed, &[]);
        let values: Vec<f64> = (0..=n).map(|_| rng.random_range(-3.0..3.0)).collect();
        (0..n)
            .map(|t| TdStep {
                reward: rng.random_range(-2.0..2.0),
                value: values[t],
                next_value: values[t + 1],
                done: t + 1 == n || rng.random_bool(0.15),
            })
            .collect()
    }

    #[test]
    fn matches_double_sum_on_random_trajectories() {
        for seed in 0..50 {
            let steps = random_trajectory(seed, 20);
            let (g, l) = (0.99, 0.95);
            let fast = compute_advantages(&steps, g, l);
            let slow = brute_force(&steps, g, l);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let steps = random_trajectory(9, 20);
        let a = compute_advantages(&steps, 0.9, 0.0);
        for (s, a) in steps.iter().zip(&a) {
            assert!((a - s.delta(0.9)).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_reward_geometric_sum() {
        let (g, l, r) = (0.99, 0.95, 1.0);
        let steps: Vec<TdStep> = (0..3)
            .map(|t| TdStep {
                reward: r,
                value: 0.0,
                next_value: 0.0,
                done: t == 2,
            })
            .collect();
        let a = compute_advantages(&steps, g, l);
        let gl = g * l;
        let expected = [r * (1.0 + gl + gl * gl), r * (1.0 + gl), r];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn done_blocks_bootstrap() {
        let steps = [
            TdStep { reward: 1.0, value: 0.0, next_value: 100.0, done: true },
            TdStep { reward: 0.0, value: 0.0, next_value: 0.0, done: true },
        ];
        let steps2 = [steps[0], TdStep { reward: 50.0, ..steps[1] }];
        assert_eq!(compute_advantages(&steps, 0.99, 0.95)[0], 1.0);
        assert_eq!(compute_advantages(&steps2, 0.99, 0.95)[0], 1.0);
    }
}
