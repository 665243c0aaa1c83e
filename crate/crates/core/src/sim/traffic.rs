use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

/// Fraction of short gaps in the bursty job stream.
pub const BURSTY_FAST_PROB: f64 = 0.8;
/// Short gaps have mean `1 / (5 gamma)`.
pub const BURSTY_FAST_FACTOR: f64 = 0.2;
/// Long gaps have mean `4.2 / gamma`.
pub const BURSTY_SLOW_FACTOR: f64 = 4.2;

/// Gap distribution between consecutive jobs of one session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobInterarrival {
    Exponential { gamma: f64 },
    /// Two-phase hyperexponential with mean `1 / gamma` and squared CV 6.12.
    Bursty { gamma: f64 },
}

impl JobInterarrival {
    pub fn gamma(&self) -> f64 {
        match *self {
            JobInterarrival::Exponential { gamma } | JobInterarrival::Bursty { gamma } => gamma,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JobInterarrival::Exponential { gamma } => 1.0 / gamma,
            JobInterarrival::Bursty { gamma } => {
                (BURSTY_FAST_PROB * BURSTY_FAST_FACTOR
                    + (1.0 - BURSTY_FAST_PROB) * BURSTY_SLOW_FACTOR)
                    / gamma
            }
        }
    }

    /// Squared coefficient of variation of the gap distribution.
    pub fn scv(&self) -> f64 {
        match *self {
            JobInterarrival::Exponential { .. } => 1.0,
            JobInterarrival::Bursty { gamma } => {
                let p = BURSTY_FAST_PROB;
                let m1 = BURSTY_FAST_FACTOR / gamma;
                let m2 = BURSTY_SLOW_FACTOR / gamma;
                // Exponential phases: E[X^2] = 2 m^2.
                let second = 2.0 * (p * m1 * m1 + (1.0 - p) * m2 * m2);
                let mean = self.mean();
                second / (mean * mean) - 1.0
            }
        }
    }

    pub fn is_bursty(&self) -> bool {
        matches!(self, JobInterarrival::Bursty { .. })
    }
}

pub fn draw_interarrival<R: Rng + ?Sized>(spec: &JobInterarrival, rng: &mut R) -> f64 {
    match *spec {
        JobInterarrival::Exponential { gamma } => exp_draw(1.0 / gamma, rng),
        JobInterarrival::Bursty { gamma } => {
            let mean = if rng.random::<f64>() < BURSTY_FAST_PROB {
                BURSTY_FAST_FACTOR / gamma
            } else {
                BURSTY_SLOW_FACTOR / gamma
            };
            exp_draw(mean, rng)
        }
    }
}

pub(crate) fn exp_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    Exp::new(1.0 / mean)
        .expect("positive rate")
        .sample(rng)
}

/// Traffic of one class: session arrivals, job gaps within a session, and
/// exponential service demands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    /// Session arrival rate (sessions/second).
    pub delta: f64,
    pub job_interarrival: JobInterarrival,
    /// Mean of the exponential service demand (seconds).
    pub service_mean: f64,
}

/// Periodic exchange of the session rates of two classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapSpec {
    pub period: f64,
    /// Zero-based class indices.
    pub classes: (usize, usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::{stream, Purpose};
    use approx::assert_abs_diff_eq;

    #[test]
    fn bursty_moments_closed_form() {
        let b = JobInterarrival::Bursty { gamma: 1.0 };
        assert_abs_diff_eq!(b.mean(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.scv(), 6.12, epsilon = 1e-12);
        let b = JobInterarrival::Bursty { gamma: 2.0 };
        assert_abs_diff_eq!(b.mean(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.scv(), 6.12, epsilon = 1e-12);
    }

    fn moments(spec: JobInterarrival, n: usize) -> (f64, f64) {
        let mut rng = stream(11, 0, Purpose::JobInterarrivals);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = draw_interarrival(&spec, &mut rng);
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        (mean, var / (mean * mean))
    }

    #[test]
    fn exponential_draws() {
        let (mean, scv) = moments(JobInterarrival::Exponential { gamma: 2.0 }, 1_000_000);
        assert_abs_diff_eq!(mean, 0.5, epsilon = 0.005);
        assert_abs_diff_eq!(scv, 1.0, epsilon = 0.02);
    }
}
