use proptest::prelude::*;

use provisim::harness::{table1_config, ClassConfig, ClusterConfig, ExperimentConfig, RunConfig};
use provisim::model::{RewardModel, ServiceClass, SessionState};
use provisim::policy::{AdmissionKind, PolicyConfig};
use provisim::sim::{run_simulation, run_simulation_with, JobInterarrival, RunOptions, SwapSpec, TrafficSpec};

fn flat10(_: usize) -> RewardModel {
    RewardModel::Flat { c: 10.0, r: 10.0 }
}

fn single_class(servers: u32, delta: f64, k: u32, duration: f64) -> ExperimentConfig {
    ExperimentConfig {
        cluster: ClusterConfig {
            servers,
            switch_delay: 0.0,
            job_overhead: 0.0,
        },
        classes: vec![ClassConfig {
            class: ServiceClass {
                index: 0,
                b: 1.0,
                gamma: 1.0,
                k,
                q: 1.0,
                alpha: 1.0,
                reward: RewardModel::Flat { c: 10.0, r: 10.0 },
            },
            traffic: TrafficSpec {
                delta,
                job_interarrival: JobInterarrival::Exponential { gamma: 1.0 },
                service_mean: 1.0,
            },
        }],
        swap: None,
        policy: PolicyConfig::default(),
        run: RunConfig {
            duration,
            ..RunConfig::default()
        },
    }
}

#[test]
fn zero_duration_is_empty() {
    let mut cfg = table1_config(flat10);
    cfg.run.duration = 0.0;
    let run = run_simulation(&cfg, 1).unwrap();
    assert!(run.sessions.is_empty());
    assert!(run.completions.is_empty());
    assert!(run.rejections.is_empty());
    assert_eq!(run.job_arrivals, vec![0; 4]);
    let revenue: f64 = run.completions.iter().map(|c| c.net_revenue).sum();
    assert_eq!(revenue, 0.0);
}

#[test]
fn uncontended_class_never_waits() {
    // A handful of servers per possible concurrent job and sessions that
    // almost never overlap.
    let cfg = single_class(40, 0.0005, 5, 200_000.0);
    let run = run_simulation(&cfg, 3).unwrap();
    assert!(run.completions.len() > 50, "{}", run.completions.len());
    for c in &run.completions {
        assert_eq!(c.mean_wait, 0.0);
        assert_eq!(c.net_revenue, 10.0);
    }
    let rate = 10.0 * run.completions.len() as f64 / run.duration;
    assert!((rate - 0.0005 * 10.0).abs() / (0.0005 * 10.0) < 0.2, "{rate}");
}

#[test]
fn overloaded_class_queue_grows() {
    let mut cfg = table1_config(flat10);
    cfg.classes[3].traffic.delta = 0.2;
    cfg.policy.admission = AdmissionKind::AdmitAll;
    cfg.run.sample_period = 600.0;
    let run = run_simulation(&cfg, 5).unwrap();
    let q4: Vec<usize> = run.snapshots.iter().map(|s| s.queue_lengths[3]).collect();
    assert!(q4.len() >= 10, "{q4:?}");
    let half = q4.len() / 2;
    let early: usize = q4[..half].iter().sum::<usize>() / half;
    let late: usize = q4[half..].iter().sum::<usize>() / (q4.len() - half);
    assert!(late > early, "{q4:?}");
    assert!(*q4.last().unwrap() > 100, "{q4:?}");
}

#[test]
fn same_seed_same_run_different_seed_different_run() {
    let mut cfg = table1_config(flat10);
    cfg.policy.admission = AdmissionKind::Threshold;
    cfg.run.duration = 1800.0;
    let a = run_simulation(&cfg, 42).unwrap();
    let b = run_simulation(&cfg, 42).unwrap();
    assert_eq!(a, b);
    let c = run_simulation(&cfg, 43).unwrap();
    assert_ne!(a.sessions, c.sessions);
}

#[test]
fn class_streams_are_independent() {
    let mut cfg = table1_config(flat10);
    cfg.run.duration = 3600.0;
    let base = run_simulation(&cfg, 9).unwrap();
    cfg.classes[0].traffic.job_interarrival = JobInterarrival::Bursty { gamma: 2.0 };
    let bursty = run_simulation(&cfg, 9).unwrap();
    let arrivals = |run: &provisim::sim::RunResult| -> Vec<f64> {
        run.sessions
            .iter()
            .filter(|s| s.class == 1)
            .map(|s| s.arrival_time)
            .collect()
    };
    assert!(!arrivals(&base).is_empty());
    assert_eq!(arrivals(&base), arrivals(&bursty));
}

#[test]
fn swaps_happen_every_period() {
    let mut cfg = table1_config(flat10);
    cfg.swap = Some(SwapSpec {
        period: 300.0,
        classes: (0, 1),
    });
    cfg.run.duration = 1800.0;
    let options = RunOptions {
        trace: true,
        ..RunOptions::default()
    };
    let run = run_simulation_with(&cfg, 2, options).unwrap();
    let swaps: Vec<f64> = run
        .trace
        .iter()
        .filter(|r| r.kind == "load_swap")
        .map(|r| r.time)
        .collect();
    assert_eq!(swaps, vec![300.0, 600.0, 900.0, 1200.0, 1500.0, 1800.0]);
    let times: Vec<f64> = run.trace.iter().map(|r| r.time).collect();
    assert!(times.windows(2).all(|w| w[0] <= w[1]));
}

fn admission() -> impl Strategy<Value = AdmissionKind> {
    prop_oneof![
        Just(AdmissionKind::AdmitAll),
        Just(AdmissionKind::Threshold),
        Just(AdmissionKind::CurrentState),
        Just(AdmissionKind::OracleThreshold),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn small_systems_keep_their_invariants(
        servers in 1u32..8,
        m in 1usize..4,
        delta in 0.005f64..0.2,
        k in 1u32..20,
        kind in admission(),
        seed in any::<u64>(),
    ) {
        let mut cfg = single_class(servers.max(m as u32), delta, k, 600.0);
        let proto = cfg.classes[0].clone();
        cfg.classes = (0..m)
            .map(|i| {
                let mut c = proto.clone();
                c.class.index = i;
                c
            })
            .collect();
        cfg.policy.admission = kind;
        cfg.policy.window_events = 5;
        let run = run_simulation(&cfg, seed).unwrap();
        prop_assert!(run.invariant_violations.is_empty(), "{:?}", run.invariant_violations);
        for (i, s) in run.sessions.iter().enumerate() {
            prop_assert_eq!(s.session_id, i as u64);
            prop_assert!(s.jobs_completed <= k);
            if s.state == SessionState::Completed {
                prop_assert_eq!(s.jobs_completed, k);
            }
        }
        let finished = run.sessions.iter().filter(|s| s.state == SessionState::Completed).count();
        prop_assert_eq!(finished, run.completions.len());
        let rejected = run.sessions.iter().filter(|s| s.state == SessionState::Rejected).count();
        prop_assert_eq!(rejected, run.rejections.len());
        for c in 0..m {
            prop_assert!(run.jobs_completed[c] <= run.job_arrivals[c]);
        }
    }
}
