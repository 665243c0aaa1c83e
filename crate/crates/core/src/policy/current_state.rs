//! Arrival-epoch admission by expected revenue change.
//!
//! The value of a configuration is the sum, over every active session, of the
//! net revenue it is expected to earn when it completes. A session's final
//! mean wait is predicted by blending its realised history with the mean wait
//! the queue would exhibit in its current state for its remaining jobs.

use crate::model::{session_net_revenue, RewardModel, ServiceClass};
use crate::queueing::{ggn_expected_wait, mmn_wait_tail, TrafficEstimate};

use super::{Decision, Transfer};

/// Progress of one active session, as seen by the admission policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionProgress {
    pub jobs_completed: u32,
    pub cumulative_wait: f64,
}

impl SessionProgress {
    pub const FRESH: SessionProgress = SessionProgress {
        jobs_completed: 0,
        cumulative_wait: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassView {
    pub sessions: Vec<SessionProgress>,
    pub queue_length: usize,
    pub servers: u32,
}

/// Snapshot of every pool at one simulated instant.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueStateView {
    pub classes: Vec<ClassView>,
}

/// Expected final mean wait of a session whose remaining jobs wait `w_future` each.
pub fn predict_session_final_wait(progress: SessionProgress, k: u32, w_future: f64) -> f64 {
    let remaining = k.saturating_sub(progress.jobs_completed);
    if remaining == 0 {
        return progress.cumulative_wait / f64::from(k);
    }
    (progress.cumulative_wait + f64::from(remaining) * w_future) / f64::from(k)
}

/// Probability that a flat-penalty session ends above its obligation.
///
/// The remaining jobs must average at most `(k q - waited) / remaining`; the
/// per-job waiting-time tail at that budget stands in for the probability
/// that they do not.
fn flat_violation_probability(
    progress: SessionProgress,
    class: &ServiceClass,
    lambda: f64,
    mu: f64,
    servers: u32,
) -> f64 {
    let k = class.k;
    let remaining = k.saturating_sub(progress.jobs_completed);
    if remaining == 0 {
        return if progress.cumulative_wait / f64::from(k) > class.q {
            1.0
        } else {
            0.0
        };
    }
    let budget = (f64::from(k) * class.q - progress.cumulative_wait) / f64::from(remaining);
    if budget < 0.0 || servers == 0 {
        return 1.0;
    }
    mmn_wait_tail(lambda, mu, servers, budget).unwrap_or(1.0)
}

/// Expected revenue of all sessions of one class, given `servers` servers and
/// optionally one extra fresh session.
pub fn class_value(
    class: &ServiceClass,
    estimate: &TrafficEstimate,
    sessions: &[SessionProgress],
    with_incoming: bool,
    servers: u32,
) -> f64 {
    let count = sessions.len() + usize::from(with_incoming);
    if count == 0 {
        return 0.0;
    }
    let b = if estimate.b_hat > 0.0 { estimate.b_hat } else { class.b };
    let lambda = count as f64 * class.gamma;
    let all = sessions
        .iter()
        .copied()
        .chain(with_incoming.then_some(SessionProgress::FRESH));
    match class.reward {
        RewardModel::Flat { c, r } => all
            .map(|s| c - r * flat_violation_probability(s, class, lambda, 1.0 / b, servers))
            .sum(),
        model => {
            let w = if servers == 0 {
                f64::INFINITY
            } else {
                ggn_expected_wait(lambda, b, estimate.ca2_hat, estimate.cs2_hat, servers)
                    .unwrap_or(f64::INFINITY)
            };
            all.map(|s| {
                session_net_revenue(&model, predict_session_final_wait(s, class.k, w), class.q)
            })
            .sum()
        }
    }
}

// Differences of values that may both be -inf; an undefined change never wins.
fn delta(after: f64, before: f64) -> f64 {
    let d = after - before;
    if d.is_nan() {
        f64::NEG_INFINITY
    } else {
        d
    }
}

/// Accept the incoming session of class `incoming` (possibly moving one server
/// to it) iff the best candidate configuration raises expected revenue.
///
/// Only the classes touched by a candidate change value, so the comparison is
/// restricted to them. Ties keep the current allocation and ultimately reject.
pub fn current_state_decide(
    state: &QueueStateView,
    incoming: usize,
    estimates: &[TrafficEstimate],
    classes: &[ServiceClass],
) -> Decision {
    let value = |c: usize, with_incoming: bool, servers: u32| {
        class_value(
            &classes[c],
            &estimates[c],
            &state.classes[c].sessions,
            with_incoming,
            servers,
        )
    };
    let n_i = state.classes[incoming].servers;
    let base_i = value(incoming, false, n_i);

    let mut best_gain = delta(value(incoming, true, n_i), base_i);
    let mut best_transfer = None;

    for (j, view) in state.classes.iter().enumerate() {
        if j == incoming || view.servers < 2 {
            continue;
        }
        let gain_i = delta(value(incoming, true, n_i + 1), base_i);
        let loss_j = delta(value(j, false, view.servers - 1), value(j, false, view.servers));
        let gain = gain_i + loss_j;
        let gain = if gain.is_nan() { f64::NEG_INFINITY } else { gain };
        if gain > best_gain {
            best_gain = gain;
            best_transfer = Some(Transfer { from: j, to: incoming });
        }
    }

    if best_gain > 0.0 {
        Decision::Accept {
            transfer: best_transfer,
        }
    } else {
        Decision::Reject
    }
}
