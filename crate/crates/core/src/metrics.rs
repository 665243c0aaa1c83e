//! Revenue accounting, periodic samples, confidence intervals and delay CDFs.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::model::{session_net_revenue, ServiceClass, SessionRecord};
use crate::sim::RunResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("confidence level must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("no sessions of class {0} to build a delay distribution from")]
    NoData(usize),
}

/// Net revenue of a session that has completed all of its jobs.
pub fn finalize_session(record: &SessionRecord, class: &ServiceClass) -> f64 {
    debug_assert_eq!(record.jobs_completed, class.k);
    let mean_wait = record.cumulative_wait / f64::from(class.k);
    session_net_revenue(&class.reward, mean_wait, class.q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSample {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Net revenue booked by sessions completing in the window.
    pub revenue: f64,
    pub revenue_rate: f64,
    /// Completed sessions per second, per class.
    pub accepted_rates: Vec<f64>,
    pub rejection_fraction: f64,
    pub violation_fraction: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Splits `[0, duration)` into consecutive periods and books every completed
/// session into the period of its completion. A trailing partial period is
/// kept (and its rate uses its actual length) so no revenue is dropped.
pub fn revenue_rate_series(period: f64, run: &RunResult) -> Vec<MetricsSample> {
    assert!(period > 0.0, "sample period must be positive");
    let duration = run.duration;
    if duration <= 0.0 {
        return Vec::new();
    }
    let count = (duration / period).ceil().max(1.0) as usize;
    let m = run.classes.len();
    let slot = |t: f64| ((t / period).floor() as usize).min(count - 1);

    let mut revenue = vec![0.0; count];
    let mut completed = vec![vec![0u64; m]; count];
    let mut violated = vec![0u64; count];
    let mut rejected = vec![0u64; count];
    let mut arrived = vec![0u64; count];

    for c in &run.completions {
        let i = slot(c.completion_time);
        revenue[i] += c.net_revenue;
        completed[i][c.class] += 1;
        if c.mean_wait > run.classes[c.class].q {
            violated[i] += 1;
        }
    }
    for s in &run.sessions {
        arrived[slot(s.arrival_time)] += 1;
    }
    for r in &run.rejections {
        rejected[slot(r.time)] += 1;
    }

    (0..count)
        .map(|i| {
            let t_start = i as f64 * period;
            let t_end = ((i + 1) as f64 * period).min(duration);
            let len = t_end - t_start;
            let done: u64 = completed[i].iter().sum();
            MetricsSample {
                index: i,
                t_start,
                t_end,
                revenue: revenue[i],
                revenue_rate: revenue[i] / len,
                accepted_rates: completed[i].iter().map(|&n| n as f64 / len).collect(),
                rejection_fraction: ratio(rejected[i], arrived[i]),
                violation_fraction: ratio(violated[i], done),
            }
        })
        .collect()
}

// Two-sided 95% points of Student's t, df = 1..=120.
const T_975: [f64; 120] = [
    12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, //
    2.2622, 2.2281, 2.2010, 2.1788, 2.1604, 2.1448, 2.1314, 2.1199, //
    2.1098, 2.1009, 2.0930, 2.0860, 2.0796, 2.0739, 2.0687, 2.0639, //
    2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423, 2.0395, 2.0369, //
    2.0345, 2.0322, 2.0301, 2.0281, 2.0262, 2.0244, 2.0227, 2.0211, //
    2.0195, 2.0181, 2.0167, 2.0154, 2.0141, 2.0129, 2.0117, 2.0106, //
    2.0096, 2.0086, 2.0076, 2.0066, 2.0057, 2.0049, 2.0040, 2.0032, //
    2.0025, 2.0017, 2.0010, 2.0003, 1.9996, 1.9990, 1.9983, 1.9977, //
    1.9971, 1.9966, 1.9960, 1.9955, 1.9949, 1.9944, 1.9939, 1.9935, //
    1.9930, 1.9925, 1.9921, 1.9917, 1.9913, 1.9908, 1.9905, 1.9901, //
    1.9897, 1.9893, 1.9890, 1.9886, 1.9883, 1.9879, 1.9876, 1.9873, //
    1.9870, 1.9867, 1.9864, 1.9861, 1.9858, 1.9855, 1.9853, 1.9850, //
    1.9847, 1.9845, 1.9842, 1.9840, 1.9837, 1.9835, 1.9833, 1.9830, //
    1.9828, 1.9826, 1.9824, 1.9822, 1.9820, 1.9818, 1.9816, 1.9814, //
    1.9812, 1.9810, 1.9808, 1.9806, 1.9804, 1.9803, 1.9801, 1.9799, //
];
const Z_975: f64 = 1.9600;

/// Two-sided critical value of Student's t.
///
/// The 95% level comes from the embedded table (normal beyond 120 degrees of
/// freedom); other levels are computed from the distribution.
pub fn t_critical(confidence: f64, df: usize) -> Result<f64, MetricsError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(MetricsError::BadConfidence(confidence));
    }
    assert!(df >= 1);
    if (confidence - 0.95).abs() < 1e-12 {
        return Ok(T_975.get(df - 1).copied().unwrap_or(Z_975));
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    Ok(dist.inverse_cdf(0.5 + confidence / 2.0))
}

/// Sample mean and confidence half-width.
pub fn student_t_ci(samples: &[f64], confidence: f64) -> Result<(f64, f64), MetricsError> {
    let n = samples.len();
    if n < 2 {
        return Err(MetricsError::InsufficientSamples(n));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = t_critical(confidence, n - 1)?;
    Ok((mean, t * var.sqrt() / nf.sqrt()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClassRates {
    pub arrived: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub completed: u64,
    pub violated: u64,
    pub in_flight: u64,
    pub rejection_fraction: f64,
    pub violation_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub per_class: Vec<ClassRates>,
    pub aggregate: ClassRates,
}

pub fn rejection_and_violation_rates(run: &RunResult) -> RateSummary {
    let m = run.classes.len();
    let mut per_class = vec![ClassRates::default(); m];
    for s in &run.sessions {
        per_class[s.class].arrived += 1;
    }
    for r in &run.rejections {
        per_class[r.class].rejected += 1;
    }
    for c in &run.completions {
        let cr = &mut per_class[c.class];
        cr.completed += 1;
        if c.mean_wait > run.classes[c.class].q {
            cr.violated += 1;
        }
    }
    for s in run.in_flight() {
        per_class[s.class].in_flight += 1;
    }
    let mut aggregate = ClassRates::default();
    for cr in &mut per_class {
        cr.accepted = cr.arrived - cr.rejected;
        cr.rejection_fraction = ratio(cr.rejected, cr.arrived);
        cr.violation_fraction = ratio(cr.violated, cr.completed);
        aggregate.arrived += cr.arrived;
        aggregate.accepted += cr.accepted;
        aggregate.rejected += cr.rejected;
        aggregate.completed += cr.completed;
        aggregate.violated += cr.violated;
        aggregate.in_flight += cr.in_flight;
    }
    aggregate.rejection_fraction = ratio(aggregate.rejected, aggregate.arrived);
    aggregate.violation_fraction = ratio(aggregate.violated, aggregate.completed);
    RateSummary {
        per_class,
        aggregate,
    }
}

/// Empirical distribution of per-session mean waits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayCdf {
    values: Vec<f64>,
}

impl DelayCdf {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fraction of sessions with mean wait `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        let below = self.values.partition_point(|v| *v <= x);
        below as f64 / self.values.len() as f64
    }

    /// Smallest observed value with CDF at least `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.values.len();
        let idx = ((p.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.values[idx]
    }
}

/// Delay distribution of one class. With `include_in_flight`, sessions still
/// running at the end contribute their partial mean wait.
pub fn delay_cdf(
    run: &RunResult,
    class: usize,
    include_in_flight: bool,
) -> Result<DelayCdf, MetricsError> {
    let mut values: Vec<f64> = run
        .completions
        .iter()
        .filter(|c| c.class == class)
        .map(|c| c.mean_wait)
        .collect();
    if include_in_flight {
        values.extend(
            run.in_flight()
                .filter(|s| s.class == class)
                .filter_map(SessionRecord::mean_wait),
        );
    }
    if values.is_empty() {
        return Err(MetricsError::NoData(class));
    }
    Ok(DelayCdf::from_values(values))
}

/// Whole-run figures derived from one simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub revenue_total: f64,
    /// Completed sessions only.
    pub revenue_rate: f64,
    /// Adds in-flight sessions valued at their partial mean wait.
    pub revenue_rate_with_in_flight: f64,
    pub rejection_fraction: f64,
    pub violation_fraction: f64,
    pub accepted_rates: Vec<f64>,
    pub rates: RateSummary,
}

pub fn summarize(run: &RunResult) -> RunSummary {
    let revenue_total: f64 = run.completions.iter().map(|c| c.net_revenue).sum();
    let projected: f64 = run
        .in_flight()
        .map(|s| {
            let class = &run.classes[s.class];
            session_net_revenue(&class.reward, s.mean_wait().unwrap_or(0.0), class.q)
        })
        .sum();
    let rates = rejection_and_violation_rates(run);
    let d = run.duration;
    let per_time = |x: f64| if d > 0.0 { x / d } else { 0.0 };
    RunSummary {
        revenue_total,
        revenue_rate: per_time(revenue_total),
        revenue_rate_with_in_flight: per_time(revenue_total + projected),
        rejection_fraction: rates.aggregate.rejection_fraction,
        violation_fraction: rates.aggregate.violation_fraction,
        accepted_rates: rates
            .per_class
            .iter()
            .map(|c| per_time(c.completed as f64))
            .collect(),
        rates,
    }
}
