//! Self-managing server allocation and session admission policies.

mod allocation;
mod controller;
mod current_state;
mod threshold;

use serde::{Deserialize, Serialize};

pub use allocation::{offered_loads_allocation, AllocationVector};
pub use controller::{window_boundary_reconfigure, AdmissionKind, PolicyConfig};
pub use current_state::{
    class_value, current_state_decide, predict_session_final_wait, ClassView, QueueStateView,
    SessionProgress,
};
pub use threshold::{
    default_threshold_cap, estimate_threshold_revenue, search_sequence, session_load,
    threshold_decide, threshold_search, threshold_search_capped, Threshold, ThresholdRevenue,
    ThresholdVector,
};

/// One server moved between pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept { transfer: Option<Transfer> },
    Reject,
}

impl Decision {
    pub fn accept() -> Self {
        Decision::Accept { transfer: None }
    }

    pub fn is_accept(&self) -> bool {
        matches!(self, Decision::Accept { .. })
    }
}
