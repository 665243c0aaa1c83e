//! Service classes, SLA reward models and session bookkeeping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// Charge and penalty clauses of an SLA.
///
/// Every variant charges `c` per accepted session and differs only in how a
/// session whose mean job waiting time exceeds the obligation is penalised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RewardModel {
    /// Fixed penalty `r` once the obligation is missed.
    Flat { c: f64, r: f64 },
    /// Penalty `r` per second of mean wait beyond the obligation.
    Proportional { c: f64, r: f64 },
    /// Proportional at rate `r_prime` up to the delay bound `t`, then the fixed
    /// penalty `r_dprime`.
    BoundedProportional {
        c: f64,
        r_prime: f64,
        t: f64,
        r_dprime: f64,
    },
}

impl RewardModel {
    pub fn charge(&self) -> f64 {
        match *self {
            RewardModel::Flat { c, .. }
            | RewardModel::Proportional { c, .. }
            | RewardModel::BoundedProportional { c, .. } => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardModel::Flat { .. } => "flat",
            RewardModel::Proportional { .. } => "proportional",
            RewardModel::BoundedProportional { .. } => "bounded_proportional",
        }
    }

    /// Largest amount a single session can lose relative to its charge, if bounded.
    pub fn max_penalty(&self) -> Option<f64> {
        match *self {
            RewardModel::Flat { r, .. } => Some(r),
            RewardModel::Proportional { .. } => None,
            RewardModel::BoundedProportional {
                r_prime,
                t,
                r_dprime,
                ..
            } => Some(r_dprime.max(r_prime * t)),
        }
    }
}

/// Contract and traffic constants of one service type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceClass {
    pub index: usize,
    /// Mean service time in seconds.
    pub b: f64,
    /// Job submission rate within a session (jobs/second).
    pub gamma: f64,
    /// Jobs per session.
    pub k: u32,
    /// Obligation on the session's mean waiting time (seconds).
    pub q: f64,
    pub alpha: f64,
    pub reward: RewardModel,
}

impl ServiceClass {
    /// Service rate of one server for this class.
    pub fn mu(&self) -> f64 {
        1.0 / self.b
    }
}

pub fn validate_class(class: ServiceClass) -> Result<ServiceClass, ModelError> {
    let pos = |field, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(invalid(field, format!("must be finite and > 0, got {v}")))
        }
    };
    let non_neg = |field, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(invalid(field, format!("must be finite and >= 0, got {v}")))
        }
    };
    pos("b", class.b)?;
    pos("gamma", class.gamma)?;
    if class.k < 1 {
        return Err(invalid("k", "must be >= 1"));
    }
    non_neg("q", class.q)?;
    pos("alpha", class.alpha)?;
    match class.reward {
        RewardModel::Flat { c, r } | RewardModel::Proportional { c, r } => {
            non_neg("c", c)?;
            non_neg("r", r)?;
        }
        RewardModel::BoundedProportional {
            c,
            r_prime,
            t,
            r_dprime,
        } => {
            non_neg("c", c)?;
            non_neg("r_prime", r_prime)?;
            non_neg("r_dprime", r_dprime)?;
            if !(t.is_finite() && t > class.q) {
                return Err(invalid(
                    "t",
                    format!("delay bound {t} must exceed obligation q = {}", class.q),
                ));
            }
        }
    }
    Ok(class)
}

/// Net revenue of one session given its realised (or predicted) mean wait.
///
/// The obligation is violated only when `mean_wait > q`. An infinite mean wait
/// is allowed and yields `-inf` for the unbounded proportional model.
pub fn session_net_revenue(model: &RewardModel, mean_wait: f64, q: f64) -> f64 {
    let excess = mean_wait - q;
    match *model {
        RewardModel::Flat { c, r } => {
            if excess > 0.0 {
                c - r
            } else {
                c
            }
        }
        RewardModel::Proportional { c, r } => {
            if excess > 0.0 {
                c - r * excess
            } else {
                c
            }
        }
        RewardModel::BoundedProportional {
            c,
            r_prime,
            t,
            r_dprime,
        } => {
            if mean_wait <= q {
                c
            } else if mean_wait <= t {
                c - r_prime * excess
            } else {
                c - r_dprime
            }
        }
    }
}

/// Nominal time for a session to submit all of its jobs.
pub fn session_duration(class: &ServiceClass) -> f64 {
    f64::from(class.k) / class.gamma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Active,
    Completed,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: u64,
    pub class: usize,
    pub arrival_time: f64,
    pub jobs_completed: u32,
    pub cumulative_wait: f64,
    pub state: SessionState,
}

impl SessionRecord {
    pub fn new(session_id: u64, class: usize, arrival_time: f64) -> Self {
        Self {
            session_id,
            class,
            arrival_time,
            jobs_completed: 0,
            cumulative_wait: 0.0,
            state: SessionState::Active,
        }
    }

    /// Mean wait over completed jobs; `None` before the first completion.
    pub fn mean_wait(&self) -> Option<f64> {
        (self.jobs_completed > 0).then(|| self.cumulative_wait / f64::from(self.jobs_completed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub session_id: u64,
    pub class: usize,
    pub arrival_time: f64,
    pub service_demand: f64,
    /// Set when service starts.
    pub wait: f64,
}
