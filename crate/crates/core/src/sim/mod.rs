//! Deterministic discrete-event simulation of the server cluster.
//!
//! Sessions arrive per class as Poisson streams, emit `k` jobs each, and jobs
//! are served FIFO by the servers currently assigned to their class. Observation
//! windows close after a fixed number of session-level events (arrivals and
//! completions), at which point traffic estimates are refreshed and the
//! allocation and admission policies are re-run.

mod engine;
mod profiler;
pub mod rng;
mod traffic;

pub use engine::{
    nominal_estimates, run_simulation, run_simulation_with, CompletedSession, Event, EventKind,
    QueueSnapshot, Rejection, RunOptions, RunResult, TraceRecord, WindowRecord, TRACE_HEADER,
};
pub use profiler::{
    profiler_close_window, raw_estimates, ClassWindowStats, Moments, WindowStats,
};
pub use traffic::{
    draw_interarrival, JobInterarrival, SwapSpec, TrafficSpec, BURSTY_FAST_FACTOR,
    BURSTY_FAST_PROB, BURSTY_SLOW_FACTOR,
};
