//! Beta-distribution primitives for the stochastic policy.
//!
//! Actions live on the open unit interval per pump; the policy emits a
//! concave unimodal Beta(α, β) with α, β > 1 for each dimension and the
//! joint log-density is the sum over independent dimensions.

use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use statrs::function::gamma::{digamma, ln_gamma};

/// Samples and log-density evaluations clamp the support to
/// `[X_EPS, 1 − X_EPS]`.
pub const X_EPS: f64 = 1e-6;

/// `ln B(α, β) = ln Γ(α) + ln Γ(β) − ln Γ(α+β)`.
pub fn ln_beta_fn(alpha: f64, beta: f64) -> f64 {
    ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta)
}

/// Log-density of Beta(α, β) at `x`, with the support clamp applied.
pub fn log_prob(alpha: f64, beta: f64, x: f64) -> f64 {
    let x = x.clamp(X_EPS, 1.0 - X_EPS);
    (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_beta_fn(alpha, beta)
}

/// Density at `x`.
pub fn pdf(alpha: f64, beta: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    log_prob(alpha, beta, x).exp()
}

/// Partial derivatives of [`log_prob`] with respect to α and β.
pub fn log_prob_grad(alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let x = x.clamp(X_EPS, 1.0 - X_EPS);
    let psi_sum = digamma(alpha + beta);
    (
        x.ln() - digamma(alpha) + psi_sum,
        (1.0 - x).ln() - digamma(beta) + psi_sum,
    )
}

/// Distribution mean `α / (α + β)`.
pub fn mean(alpha: f64, beta: f64) -> f64 {
    alpha / (alpha + beta)
}

/// Mode `(α − 1) / (α + β − 2)`, defined for α, β > 1.
pub fn mode(alpha: f64, beta: f64) -> f64 {
    (alpha - 1.0) / (alpha + beta - 2.0)
}

/// Draws one sample on the clamped open interval.
pub fn sample<R: Rng>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let dist = BetaDist::new(alpha, beta).expect("alpha, beta > 0");
    dist.sample(rng).clamp(X_EPS, 1.0 - X_EPS)
}

/// Quadrature of the density over (0, 1): composite Simpson under the
/// substitution `x = (1 − cos(πu))/2`, which clusters nodes at the
/// endpoints where the density's derivatives are largest. Verification
/// helper for the distribution-correctness checks.
pub fn pdf_quadrature(alpha: f64, beta: f64, intervals: usize) -> f64 {
    let n = if intervals % 2 == 0 {
        intervals
    } else {
        intervals + 1
    };
    let h = 1.0 / n as f64;
    let g = |u: f64| {
        let x = 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
        let dx = 0.5 * std::f64::consts::PI * (std::f64::consts::PI * u).sin();
        pdf(alpha, beta, x) * dx
    };
    let mut total = g(0.0) + g(1.0);
    for i in 1..n {
        total += g(h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    total * h / 3.0
}
