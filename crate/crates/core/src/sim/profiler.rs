//! Per-window traffic statistics and their conversion into estimates.

use crate::queueing::TrafficEstimate;

/// Running sum and sum of squares.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    /// Sample variance over mean squared; needs at least two samples.
    pub fn scv(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        if mean <= 0.0 {
            return None;
        }
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        Some(var / (mean * mean))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassWindowStats {
    pub job_arrivals: u64,
    pub session_arrivals: u64,
    pub interarrivals: Moments,
    pub service: Moments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub start: f64,
    pub end: f64,
    pub classes: Vec<ClassWindowStats>,
}

impl WindowStats {
    pub fn new(classes: usize, start: f64) -> Self {
        Self {
            start,
            end: start,
            classes: vec![ClassWindowStats::default(); classes],
        }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.length() <= 0.0
            || self
                .classes
                .iter()
                .all(|c| c.job_arrivals == 0 && c.session_arrivals == 0 && c.service.count == 0)
    }
}

/// Raw estimates of one closed window, falling back to `previous` wherever the
/// window holds too few samples.
pub fn raw_estimates(stats: &WindowStats, previous: &[TrafficEstimate]) -> Vec<TrafficEstimate> {
    let len = stats.length();
    stats
        .classes
        .iter()
        .zip(previous)
        .map(|(c, prev)| TrafficEstimate {
            class: prev.class,
            lambda_hat: c.job_arrivals as f64 / len,
            delta_hat: c.session_arrivals as f64 / len,
            b_hat: c.service.mean().unwrap_or(prev.b_hat),
            ca2_hat: c.interarrivals.scv().unwrap_or(prev.ca2_hat),
            cs2_hat: c.service.scv().unwrap_or(prev.cs2_hat),
        })
        .collect()
}

/// Closes a window: `beta * raw + (1 - beta) * previous`. An empty window
/// leaves the estimates untouched.
pub fn profiler_close_window(
    stats: &WindowStats,
    previous: &[TrafficEstimate],
    beta: f64,
) -> Vec<TrafficEstimate> {
    if stats.is_empty() {
        return previous.to_vec();
    }
    let blend = |raw: f64, old: f64| beta * raw + (1.0 - beta) * old;
    raw_estimates(stats, previous)
        .into_iter()
        .zip(previous)
        .map(|(raw, prev)| TrafficEstimate {
            class: prev.class,
            lambda_hat: blend(raw.lambda_hat, prev.lambda_hat),
            b_hat: blend(raw.b_hat, prev.b_hat),
            ca2_hat: blend(raw.ca2_hat, prev.ca2_hat),
            cs2_hat: blend(raw.cs2_hat, prev.cs2_hat),
            delta_hat: blend(raw.delta_hat, prev.delta_hat),
        })
        .collect()
}
