use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::ServiceClass;
use crate::queueing::TrafficEstimate;

use super::allocation::{offered_loads_allocation, AllocationVector};
use super::threshold::{threshold_search_capped, ThresholdVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissionKind {
    AdmitAll,
    Threshold,
    CurrentState,
    OracleThreshold,
}

impl AdmissionKind {
    pub const ALL: [AdmissionKind; 4] = [
        AdmissionKind::AdmitAll,
        AdmissionKind::Threshold,
        AdmissionKind::CurrentState,
        AdmissionKind::OracleThreshold,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AdmissionKind::AdmitAll => "admit_all",
            AdmissionKind::Threshold => "threshold",
            AdmissionKind::CurrentState => "current_state",
            AdmissionKind::OracleThreshold => "oracle_threshold",
        }
    }

    pub fn uses_thresholds(&self) -> bool {
        matches!(
            self,
            AdmissionKind::Threshold | AdmissionKind::OracleThreshold
        )
    }
}

impl fmt::Display for AdmissionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AdmissionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AdmissionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown admission policy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub admission: AdmissionKind,
    /// Session-level events (arrivals and completions) per observation window.
    pub window_events: u32,
    pub epsilon: f64,
    pub ewma_beta: f64,
    /// Overrides the default threshold search cap.
    pub threshold_cap: Option<u32>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            admission: AdmissionKind::AdmitAll,
            window_events: 50,
            epsilon: 0.01,
            ewma_beta: 0.5,
            threshold_cap: None,
        }
    }
}

/// Allocation and thresholds for the next observation window.
///
/// Servers follow the offered load, so the job rate used for each class is
/// the offered one, `delta_hat * k`, rather than the rate of admitted jobs.
/// Otherwise a class throttled by admission control would lose servers and
/// be throttled further. Thresholds are searched only for threshold policies.
pub fn window_boundary_reconfigure(
    estimates: &[TrafficEstimate],
    classes: &[ServiceClass],
    total_servers: u32,
    config: &PolicyConfig,
) -> (AllocationVector, ThresholdVector) {
    let offered: Vec<TrafficEstimate> = estimates
        .iter()
        .zip(classes)
        .map(|(e, c)| TrafficEstimate {
            lambda_hat: e.delta_hat * f64::from(c.k),
            ..*e
        })
        .collect();
    let alphas: Vec<f64> = classes.iter().map(|c| c.alpha).collect();
    let allocation = offered_loads_allocation(&offered, &alphas, total_servers);

    let mut thresholds = ThresholdVector::unbounded(classes.len(), config.epsilon);
    if config.admission.uses_thresholds() {
        for (i, class) in classes.iter().enumerate() {
            thresholds.limits[i] = threshold_search_capped(
                class,
                &estimates[i],
                allocation.get(i),
                config.epsilon,
                config.threshold_cap,
            );
        }
    }
    (allocation, thresholds)
}
