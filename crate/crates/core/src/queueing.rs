//! Analytic queueing formulas backing the policies' configuration-epoch analysis.
//!
//! Markovian estimates use M/M/n; general traffic uses the Allen–Cunneen
//! correction, which scales the M/M/n mean wait by `(ca2 + cs2) / 2`. The
//! session-level system under an admission threshold is an Erlang loss system.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QueueingError {
    #[error("unstable queue: offered load {load} >= {servers} servers")]
    Unstable { load: f64, servers: u32 },
}

/// Per-class statistics published by the traffic profiler at a window boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficEstimate {
    pub class: usize,
    /// Job arrival rate (jobs/second).
    pub lambda_hat: f64,
    /// Mean service time (seconds).
    pub b_hat: f64,
    /// Squared coefficient of variation of job inter-arrival times.
    pub ca2_hat: f64,
    /// Squared coefficient of variation of service times.
    pub cs2_hat: f64,
    /// Session arrival rate (sessions/second).
    pub delta_hat: f64,
}

impl TrafficEstimate {
    pub fn offered_load(&self) -> f64 {
        self.lambda_hat * self.b_hat
    }
}

/// Erlang-B blocking probability.
pub fn erlang_b(n: u32, a: f64) -> f64 {
    let mut b = 1.0;
    for j in 1..=n {
        let ab = a * b;
        b = ab / (f64::from(j) + ab);
    }
    b
}

/// Erlang-C probability that an arriving job has to wait.
pub fn erlang_c(n: u32, a: f64) -> Result<f64, QueueingError> {
    let nf = f64::from(n);
    if n == 0 || a >= nf {
        return Err(QueueingError::Unstable { load: a, servers: n });
    }
    let b = erlang_b(n, a);
    Ok((nf * b / (nf - a * (1.0 - b))).clamp(0.0, 1.0))
}

/// Mean waiting time in M/M/n.
pub fn mmn_expected_wait(lambda: f64, mu: f64, n: u32) -> Result<f64, QueueingError> {
    let c = erlang_c(n, lambda / mu)?;
    Ok(c / (f64::from(n) * mu - lambda))
}

/// `P(W > q)` in M/M/n.
pub fn mmn_wait_tail(lambda: f64, mu: f64, n: u32, q: f64) -> Result<f64, QueueingError> {
    let c = erlang_c(n, lambda / mu)?;
    Ok(c * (-(f64::from(n) * mu - lambda) * q).exp())
}

/// Allen–Cunneen approximation of the G/G/n mean waiting time.
pub fn ggn_expected_wait(
    lambda: f64,
    b: f64,
    ca2: f64,
    cs2: f64,
    n: u32,
) -> Result<f64, QueueingError> {
    let w = mmn_expected_wait(lambda, 1.0 / b, n)?;
    Ok(0.5 * (ca2 + cs2) * w)
}

/// Stationary distribution of the number of active sessions in an Erlang loss
/// system with `threshold` places.
#[derive(Debug, Clone, PartialEq)]
pub struct LossDistribution {
    probs: Vec<f64>,
}

impl LossDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn threshold(&self) -> usize {
        self.probs.len() - 1
    }

    /// Probability that an arriving session finds every place taken.
    pub fn blocking(&self) -> f64 {
        *self.probs.last().expect("non-empty")
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| j as f64 * p)
            .sum()
    }
}

/// Truncated Poisson distribution `pi_j ∝ a^j / j!`, `j = 0..=threshold`.
///
/// Terms are accumulated in log space and rescaled by the largest one, so loads
/// in the thousands and thresholds in the tens of thousands do not overflow.
pub fn erlang_loss_distribution(a: f64, threshold: usize) -> LossDistribution {
    if a <= 0.0 {
        let mut probs = vec![0.0; threshold + 1];
        probs[0] = 1.0;
        return LossDistribution { probs };
    }
    let ln_a = a.ln();
    let mut logs = Vec::with_capacity(threshold + 1);
    let mut acc = 0.0;
    logs.push(acc);
    for j in 1..=threshold {
        acc += ln_a - (j as f64).ln();
        logs.push(acc);
    }
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logs.iter().map(|l| (l - peak).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    LossDistribution { probs }
}
