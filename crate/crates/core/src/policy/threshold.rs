//! Per-class admission thresholds and the revenue estimator used to pick them.

use serde::{Deserialize, Serialize};

use crate::model::{session_duration, session_net_revenue, RewardModel, ServiceClass};
use crate::queueing::{erlang_loss_distribution, ggn_expected_wait, mmn_wait_tail, TrafficEstimate};

use super::Decision;

/// Maximum number of concurrently active sessions admitted for a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Threshold {
    Limit(u32),
    Unbounded,
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Limit(m) => write!(f, "{m}"),
            Threshold::Unbounded => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVector {
    pub limits: Vec<Threshold>,
    /// Stopping tolerance of the search (money/second).
    pub epsilon: f64,
}

impl ThresholdVector {
    pub fn unbounded(classes: usize, epsilon: f64) -> Self {
        Self {
            limits: vec![Threshold::Unbounded; classes],
            epsilon,
        }
    }
}

pub fn threshold_decide(active_count: usize, limit: Threshold) -> Decision {
    match limit {
        Threshold::Unbounded => Decision::accept(),
        Threshold::Limit(m) if active_count < m as usize => Decision::accept(),
        Threshold::Limit(_) => Decision::Reject,
    }
}

/// Offered session load in erlangs: session rate times nominal session length.
pub fn session_load(class: &ServiceClass, estimate: &TrafficEstimate) -> f64 {
    estimate.delta_hat.max(0.0) * session_duration(class)
}

/// Default search cap: `ceil(10 a) + 50`.
pub fn default_threshold_cap(class: &ServiceClass, estimate: &TrafficEstimate) -> u32 {
    let a = session_load(class, estimate);
    ((10.0 * a).ceil() as u32).saturating_add(50)
}

/// Revenue rate of one class, as a function of its threshold, for a fixed
/// number of servers.
///
/// Per-state waiting costs do not depend on the threshold, so they are
/// computed once and shared by every evaluation.
#[derive(Debug, Clone)]
pub struct ThresholdRevenue<'a> {
    class: &'a ServiceClass,
    estimate: TrafficEstimate,
    servers: u32,
    load: f64,
    cap: u32,
    // Index j holds the cost with j active sessions; index 0 is unused.
    tails: Vec<f64>,
    waits: Vec<f64>,
}

impl<'a> ThresholdRevenue<'a> {
    pub fn new(class: &'a ServiceClass, estimate: &TrafficEstimate, servers: u32, cap: u32) -> Self {
        let mut estimate = *estimate;
        if !(estimate.b_hat > 0.0) {
            estimate.b_hat = class.b;
        }
        let load = session_load(class, &estimate);
        let mut tails = Vec::with_capacity(cap as usize + 1);
        let mut waits = Vec::with_capacity(cap as usize + 1);
        tails.push(0.0);
        waits.push(0.0);
        let mu = 1.0 / estimate.b_hat;
        for j in 1..=cap {
            let lambda = f64::from(j) * class.gamma;
            let tail = mmn_wait_tail(lambda, mu, servers, class.q).unwrap_or(1.0);
            let wait = ggn_expected_wait(
                lambda,
                estimate.b_hat,
                estimate.ca2_hat,
                estimate.cs2_hat,
                servers,
            )
            .unwrap_or(f64::INFINITY);
            tails.push(tail);
            waits.push(wait);
        }
        Self {
            class,
            estimate,
            servers,
            load,
            cap,
            tails,
            waits,
        }
    }

    pub fn with_default_cap(class: &'a ServiceClass, estimate: &TrafficEstimate, servers: u32) -> Self {
        Self::new(class, estimate, servers, default_threshold_cap(class, estimate))
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn servers(&self) -> u32 {
        self.servers
    }

    /// Estimated revenue rate with threshold `limit`; `Unbounded` is evaluated at the cap.
    pub fn revenue(&self, limit: Threshold) -> f64 {
        let m = match limit {
            Threshold::Limit(m) => m.min(self.cap),
            Threshold::Unbounded => self.cap,
        };
        if m == 0 || self.estimate.delta_hat <= 0.0 {
            return 0.0;
        }
        let dist = erlang_loss_distribution(self.load, m as usize);
        let probs = dist.probabilities();
        let accepted_rate = self.estimate.delta_hat * (1.0 - dist.blocking());
        let norm: f64 = probs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, p)| j as f64 * p)
            .sum();
        if !(norm > 0.0) {
            return accepted_rate * self.class.reward.charge();
        }
        let weight = |j: usize| j as f64 * probs[j] / norm;

        let class = self.class;
        match class.reward {
            RewardModel::Flat { c, r } => {
                let violation: f64 = (1..=m as usize).map(|j| weight(j) * self.tails[j]).sum();
                accepted_rate * (c - r * violation)
            }
            _ => {
                let mut mean_wait = 0.0;
                for j in 1..=m as usize {
                    let u = weight(j);
                    if u > 0.0 {
                        mean_wait += u * self.waits[j];
                    }
                }
                accepted_rate * session_net_revenue(&class.reward, mean_wait, class.q)
            }
        }
    }

    /// Walks `M = 0, 1, 2, ...` and stops at the first decrease, or declares the
    /// threshold unbounded once the gain drops below `epsilon` or the cap is hit.
    pub fn search(&self, epsilon: f64) -> Threshold {
        let mut prev = self.revenue(Threshold::Limit(0));
        let mut m = 0u32;
        loop {
            if m >= self.cap {
                return Threshold::Unbounded;
            }
            let next = self.revenue(Threshold::Limit(m + 1));
            if next < prev {
                return Threshold::Limit(m);
            }
            if next - prev < epsilon {
                return Threshold::Unbounded;
            }
            prev = next;
            m += 1;
        }
    }
}

pub fn estimate_threshold_revenue(
    class: &ServiceClass,
    estimate: &TrafficEstimate,
    servers: u32,
    limit: Threshold,
) -> f64 {
    if servers == 0 {
        return if limit == Threshold::Limit(0) { 0.0 } else { f64::NEG_INFINITY };
    }
    ThresholdRevenue::with_default_cap(class, estimate, servers).revenue(limit)
}

/// Best admission threshold for a class holding `servers` servers.
pub fn threshold_search(
    class: &ServiceClass,
    estimate: &TrafficEstimate,
    servers: u32,
    epsilon: f64,
) -> Threshold {
    threshold_search_capped(class, estimate, servers, epsilon, None)
}

pub fn threshold_search_capped(
    class: &ServiceClass,
    estimate: &TrafficEstimate,
    servers: u32,
    epsilon: f64,
    cap: Option<u32>,
) -> Threshold {
    if servers == 0 {
        return Threshold::Limit(0);
    }
    let cap = cap.unwrap_or_else(|| default_threshold_cap(class, estimate));
    ThresholdRevenue::new(class, estimate, servers, cap).search(epsilon)
}

/// First-decrease search over an arbitrary revenue sequence `R(0), R(1), ...`.
pub fn search_sequence(revenues: &[f64], epsilon: f64) -> Threshold {
    for m in 0..revenues.len().saturating_sub(1) {
        let (prev, next) = (revenues[m], revenues[m + 1]);
        if next < prev {
            return Threshold::Limit(m as u32);
        }
        if next - prev < epsilon {
            return Threshold::Unbounded;
        }
    }
    Threshold::Unbounded
}
