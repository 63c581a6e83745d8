//! Truncated generalized advantage estimation.
//!
//! The advantage at `t` sums λ-weighted temporal-difference residuals over
//! a window capped at the forecast horizon; episode terminals zero the
//! bootstrap and stop the window, and the end of a collected buffer
//! bootstraps from the value of the final observed state.

/// Computes advantages for one collected buffer.
///
/// `rewards[t]`, `values[t]` and `dones[t]` describe step `t`;
/// `bootstrap_value` estimates the state after the last step and is used
/// wherever a window runs off the buffer without hitting a terminal.
pub fn gae_truncated(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
    window: usize,
) -> Vec<f64> {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    assert!(window >= 1);

    // one-step TD residuals
    let mut deltas = vec![0.0f64; n];
    for t in 0..n {
        let next_value = if dones[t] {
            0.0
        } else if t + 1 < n {
            values[t + 1]
        } else {
            bootstrap_value
        };
        deltas[t] = rewards[t] + gamma * next_value - values[t];
    }

    let decay = gamma * lambda;
    let mut advantages = vec![0.0f64; n];
    for t in 0..n {
        let mut acc = 0.0;
        let mut weight = 1.0;
        for i in 0..window {
            let j = t + i;
            if j >= n {
                break;
            }
            acc += weight * deltas[j];
            if dones[j] {
                break;
            }
            weight *= decay;
        }
        advantages[t] = acc;
    }
    advantages
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_equals_its_residual() {
        let adv = gae_truncated(&[1.0], &[0.0], &[true], 0.0, 0.99, 0.95, 20);
        assert_eq!(adv, vec![1.0]);
    }

    #[test]
    fn constant_value_no_reward_gives_shrinkage() {
        // window 1, non-terminal: A = -c + gamma*c = c(gamma - 1)
        let c = 4.0;
        let adv = gae_truncated(&[0.0, 0.0], &[c, c], &[false, false], c, 0.99, 1.0, 1);
        assert!((adv[0] - c * (0.99 - 1.0)).abs() < 1e-12);
        assert!((adv[1] - c * (0.99 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn terminal_zeroes_the_bootstrap_and_stops_the_window() {
        let rewards = [1.0, 2.0, 3.0];
        let values = [0.5, 0.25, 0.125];
        let dones = [false, true, false];
        let (gamma, lambda) = (0.9, 0.8);
        let adv = gae_truncated(&rewards, &values, &dones, 99.0, gamma, lambda, 20);
        let d0 = 1.0 + gamma * values[1] - values[0];
        let d1 = 2.0 - values[1]; // terminal: no bootstrap
        let d2 = 3.0 + gamma * 99.0 - values[2];
        assert!((adv[0] - (d0 + gamma * lambda * d1)).abs() < 1e-12);
        assert!((adv[1] - d1).abs() < 1e-12);
        assert!((adv[2] - d2).abs() < 1e-12);
    }

    // Brute-force oracle expanding the lambda-weighted n-step returns
    // directly from rewards and values, independent of the delta
    // formulation used by the implementation.
    fn oracle(
        rewards: &[f64],
        values: &[f64],
        dones: &[bool],
        bootstrap: f64,
        gamma: f64,
        lambda: f64,
        window: usize,
    ) -> Vec<f64> {
        let n = rewards.len();
        let mut out = vec![0.0; n];
        for t in 0..n {
            // effective window end: first terminal at or after t, capped
            let mut end = (t + window).min(n);
            for j in t..end {
                if dones[j] {
                    end = j + 1;
                    break;
                }
            }
            let w = end - t;
            // n-step advantages A^(i), i = 1..w
            let mut nstep = Vec::with_capacity(w);
            for i in 1..=w {
                let last = t + i - 1;
                let mut g = 0.0;
                for (pos, j) in (t..t + i).enumerate() {
                    g += gamma.powi(pos as i32) * rewards[j];
                }
                if !dones[last] {
                    let tail = if last + 1 < n {
                        values[last + 1]
                    } else {
                        bootstrap
                    };
                    g += gamma.powi(i as i32) * tail;
                }
                nstep.push(g - values[t]);
            }
            // lambda weights: (1-λ)λ^{i-1} for i < w, remainder λ^{w-1}
            let mut acc = 0.0;
            for (i, a) in nstep.iter().enumerate() {
                let weight = if i + 1 < w {
                    (1.0 - lambda) * lambda.powi(i as i32)
                } else {
                    lambda.powi(i as i32)
                };
                acc += weight * a;
            }
            out[t] = acc;
        }
        out
    }

    #[test]
    fn matches_the_lambda_return_oracle_on_random_instances() {
        use rand::Rng;
        let mut rng = crate::seeds::rng_for(13, "gae-oracle");
        for case in 0..300 {
            let n = rng.gen_range(1..=30);
            let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dones: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.1)).collect();
            let bootstrap = rng.gen_range(-1.0..1.0);
            let gamma = rng.gen_range(0.5..1.0);
            let lambda = rng.gen_range(0.5..1.0);
            let window = rng.gen_range(1..=25);
            let fast = gae_truncated(&rewards, &values, &dones, bootstrap, gamma, lambda, window);
            let slow = oracle(&rewards, &values, &dones, bootstrap, gamma, lambda, window);
            for (t, (f, s)) in fast.iter().zip(&slow).enumerate() {
                assert!(
                    (f - s).abs() <= 1e-9,
                    "case {case} t {t}: fast {f} slow {s}"
                );
            }
        }
    }

    #[test]
    fn unit_lambda_full_window_equals_discounted_return_advantage() {
        use rand::Rng;
        let mut rng = crate::seeds::rng_for(14, "gae-full");
        let n = 12;
        let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dones = vec![false; n];
        let gamma = 0.97;
        let bootstrap = 0.33;
        let adv = gae_truncated(&rewards, &values, &dones, bootstrap, gamma, 1.0, n);
        for t in 0..n {
            let mut ret = 0.0;
            for j in t..n {
                ret += gamma.powi((j - t) as i32) * rewards[j];
            }
            ret += gamma.powi((n - t) as i32) * bootstrap;
            assert!(
                (adv[t] - (ret - values[t])).abs() < 1e-9,
                "t {t}: {} vs {}",
                adv[t],
                ret - values[t]
            );
        }
    }
}
