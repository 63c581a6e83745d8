//! Policy and value networks.
//!
//! The policy maps the flattened state to two raw outputs per pump, turned
//! into Beta parameters by `1 + softplus(·)`, which keeps α, β > 1 for
//! every input and so guarantees a concave unimodal density.

use super::beta;
use super::nn::{sigmoid, softplus, Mlp};
use crate::emulator::STATE_DIM;
use crate::plant::N_PUMPS;
use rand_chacha::ChaCha12Rng;

/// Hidden layout shared by policy and value networks.
pub const HIDDEN: [usize; 2] = [64, 64];
/// Policy output width: an (α, β) pair per pump, alphas first.
pub const POLICY_OUT: usize = 2 * N_PUMPS;

#[derive(Debug, Clone)]
pub struct PolicyNet {
    pub mlp: Mlp,
}

#[derive(Debug, Clone)]
pub struct ValueNet {
    pub mlp: Mlp,
}

/// Beta parameters for every pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub alpha: [f64; N_PUMPS],
    pub beta: [f64; N_PUMPS],
}

impl PolicyNet {
    pub fn new(rng: &mut ChaCha12Rng) -> Self {
        let mut mlp = Mlp::new(&[STATE_DIM, HIDDEN[0], HIDDEN[1], POLICY_OUT], rng);
        // small-gain head: the initial policy is near-uniform across states
        // and the early updates shape the state dependence instead of
        // fighting random output offsets
        mlp.scale_output_layer(0.01);
        Self { mlp }
    }

    /// Maps raw network outputs to Beta parameters.
    pub fn params_from_raw(raw: &[f64]) -> BetaParams {
        debug_assert_eq!(raw.len(), POLICY_OUT);
        let mut p = BetaParams {
            alpha: [0.0; N_PUMPS],
            beta: [0.0; N_PUMPS],
        };
        for i in 0..N_PUMPS {
            p.alpha[i] = 1.0 + softplus(raw[i]);
            p.beta[i] = 1.0 + softplus(raw[N_PUMPS + i]);
        }
        p
    }

    /// Forward pass for one state.
    pub fn forward(&self, features: &[f64]) -> Result<BetaParams, super::AgentError> {
        if features.iter().any(|f| !f.is_finite()) {
            return Err(super::AgentError::NonFiniteInput);
        }
        let raw = self.mlp.forward_one(features);
        Ok(Self::params_from_raw(&raw))
    }

    /// Joint log-density of an action under the current parameters,
    /// restricted to unmasked dimensions.
    pub fn joint_log_prob(params: &BetaParams, x: &[f64; N_PUMPS], mask: &[bool; N_PUMPS]) -> f64 {
        let mut lp = 0.0;
        for i in 0..N_PUMPS {
            if mask[i] {
                lp += beta::log_prob(params.alpha[i], params.beta[i], x[i]);
            }
        }
        lp
    }

    /// Gradient of the joint log-density with respect to the raw network
    /// outputs (chain rule through the `1 + softplus` mapping).
    pub fn joint_log_prob_grad_raw(
        params: &BetaParams,
        raw: &[f64],
        x: &[f64; N_PUMPS],
        mask: &[bool; N_PUMPS],
    ) -> [f64; POLICY_OUT] {
        let mut grad = [0.0; POLICY_OUT];
        for i in 0..N_PUMPS {
            if !mask[i] {
                continue;
            }
            let (da, db) = beta::log_prob_grad(params.alpha[i], params.beta[i], x[i]);
            grad[i] = da * sigmoid(raw[i]);
            grad[N_PUMPS + i] = db * sigmoid(raw[N_PUMPS + i]);
        }
        grad
    }

    /// Stochastic action: a Beta sample per pump on (0, 1). Every
    /// dimension consumes randomness so masking does not shift the stream.
    pub fn sample_action(params: &BetaParams, rng: &mut ChaCha12Rng) -> [f64; N_PUMPS] {
        let mut x = [0.0; N_PUMPS];
        for i in 0..N_PUMPS {
            x[i] = beta::sample(params.alpha[i], params.beta[i], rng);
        }
        x
    }

    /// Deterministic action: the distribution mean per pump.
    pub fn mean_action(params: &BetaParams) -> [f64; N_PUMPS] {
        let mut x = [0.0; N_PUMPS];
        for i in 0..N_PUMPS {
            x[i] = beta::mean(params.alpha[i], params.beta[i]);
        }
        x
    }
}

impl ValueNet {
    pub fn new(rng: &mut ChaCha12Rng) -> Self {
        let mut mlp = Mlp::new(&[STATE_DIM, HIDDEN[0], HIDDEN[1], 1], rng);
        mlp.scale_output_layer(0.1);
        Self { mlp }
    }

    pub fn value(&self, features: &[f64]) -> f64 {
        self.mlp.forward_one(features)[0]
    }
}

/// Scales unit-interval actions to per-pump set-points [kW], zeroing
/// offline pumps.
pub fn action_to_kw(
    x: &[f64; N_PUMPS],
    online: &[bool; N_PUMPS],
    rated_kw: f64,
) -> [f64; N_PUMPS] {
    let mut kw = [0.0; N_PUMPS];
    for i in 0..N_PUMPS {
        kw[i] = if online[i] { x[i] * rated_kw } else { 0.0 };
    }
    kw
}
