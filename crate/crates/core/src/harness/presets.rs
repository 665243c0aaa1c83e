//! Built-in experiments: the four-class testbed and one sweep per figure.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ClassConfig, ClusterConfig, ExperimentConfig, RunConfig};
use super::experiment::{run_experiment, run_sweep, SweepSpec};
use super::plot::{emit_plot_data, write_delay_cdf};
use super::HarnessError;
use crate::metrics::delay_cdf;
use crate::model::{RewardModel, ServiceClass};
use crate::policy::{AdmissionKind, PolicyConfig};
use crate::sim::rng::replication_seed;
use crate::sim::{run_simulation, JobInterarrival, SwapSpec, TrafficSpec};

const GAMMA: [f64; 4] = [2.0, 2.0, 2.0, 1.0];
const DELTA: [f64; 4] = [0.1, 0.04, 0.08, 0.02];
const GRADED_CHARGES: [f64; 4] = [10.0, 20.0, 30.0, 40.0];
const SWEEP_PARAM: &str = "classes[4].delta";
const LONG_SUFFIX: &str = "_long";

/// Session rates of class 4 swept in every figure: 0.02, 0.04, ..., 0.2.
pub fn delta4_grid() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) * 2.0 / 100.0).collect()
}

/// The four-class, 20-server testbed with the given reward per class.
pub fn table1_config(reward: impl Fn(usize) -> RewardModel) -> ExperimentConfig {
    let classes = (0..4)
        .map(|i| ClassConfig {
            class: ServiceClass {
                index: i,
                b: 1.0,
                gamma: GAMMA[i],
                k: 50,
                q: 1.0,
                alpha: 1.0,
                reward: reward(i),
            },
            traffic: TrafficSpec {
                delta: DELTA[i],
                job_interarrival: JobInterarrival::Exponential { gamma: GAMMA[i] },
                service_mean: 1.0,
            },
        })
        .collect();
    ExperimentConfig {
        cluster: ClusterConfig {
            servers: 20,
            switch_delay: 0.0,
            job_overhead: 0.0,
        },
        classes,
        swap: None,
        policy: PolicyConfig::default(),
        run: RunConfig::default(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetInfo {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub config: ExperimentConfig,
    pub sweep: Option<SweepSpec>,
    /// Plot files written by [`run_preset`].
    pub figures: Vec<&'static str>,
}

const BASE_NAMES: [&str; 8] = [
    "table1", "fig6a", "fig6c", "fig7a", "fig7b", "fig8a", "fig9a", "fig9b",
];

fn heuristics_and_admit_all() -> Vec<AdmissionKind> {
    vec![
        AdmissionKind::AdmitAll,
        AdmissionKind::CurrentState,
        AdmissionKind::Threshold,
    ]
}

fn base_preset(name: &str) -> Option<Preset> {
    let flat_equal = |_| RewardModel::Flat { c: 10.0, r: 10.0 };
    let flat_double = |i: usize| RewardModel::Flat {
        c: GRADED_CHARGES[i],
        r: 2.0 * GRADED_CHARGES[i],
    };
    let bounded = |factor: f64| {
        move |i: usize| {
            let c = GRADED_CHARGES[i];
            let r = c / 2.0;
            RewardModel::BoundedProportional {
                c,
                r_prime: r / 2.0,
                // q = 1 in every class.
                t: factor,
                r_dprime: factor * r,
            }
        }
    };
    let (description, mut config, figures): (&str, ExperimentConfig, Vec<&'static str>) = match name {
        "table1" => (
            "four-class testbed, N = 20, admit all, flat c = r = 10",
            table1_config(flat_equal),
            Vec::new(),
        ),
        "fig6a" => (
            "flat penalties, c = r = 10 for every class",
            table1_config(flat_equal),
            vec!["fig6a", "fig6b"],
        ),
        "fig6c" => (
            "flat penalties, c = (10, 20, 30, 40), r = 2c",
            table1_config(flat_double),
            vec!["fig6c"],
        ),
        "fig7a" => {
            let mut cfg = table1_config(flat_double);
            for cc in &mut cfg.classes {
                cc.traffic.job_interarrival = JobInterarrival::Bursty {
                    gamma: cc.class.gamma,
                };
            }
            (
                "bursty job arrivals (ca2 = 6.12), c = (10, 20, 30, 40), r = 2c",
                cfg,
                vec!["fig7a"],
            )
        }
        "fig7b" => {
            let mut cfg = table1_config(flat_equal);
            cfg.swap = Some(SwapSpec {
                period: 300.0,
                classes: (0, 1),
            });
            (
                "session rates of classes 1 and 2 swapped every 300 s, c = r = 10",
                cfg,
                vec!["fig7b"],
            )
        }
        "fig8a" => (
            "proportional penalties, c = (10, 20, 30, 40), r = c/2",
            table1_config(|i| RewardModel::Proportional {
                c: GRADED_CHARGES[i],
                r: GRADED_CHARGES[i] / 2.0,
            }),
            vec!["fig8a", "fig8b"],
        ),
        "fig9a" => (
            "bounded proportional penalties, t = 2q, r'' = 2r, r' = r/2, r = c/2",
            table1_config(bounded(2.0)),
            vec!["fig9a"],
        ),
        "fig9b" => (
            "bounded proportional penalties, t = 5q, r'' = 5r, r' = r/2, r = c/2",
            table1_config(bounded(5.0)),
            vec!["fig9b"],
        ),
        _ => return None,
    };
    let sweep = match name {
        "table1" => None,
        "fig7b" => Some(SweepSpec {
            param: SWEEP_PARAM.into(),
            values: delta4_grid(),
            policies: vec![
                AdmissionKind::CurrentState,
                AdmissionKind::OracleThreshold,
                AdmissionKind::Threshold,
            ],
        }),
        _ => Some(SweepSpec {
            param: SWEEP_PARAM.into(),
            values: delta4_grid(),
            policies: heuristics_and_admit_all(),
        }),
    };
    config.policy.admission = AdmissionKind::AdmitAll;
    Some(Preset {
        name: name.into(),
        description: description.into(),
        config,
        sweep,
        figures,
    })
}

/// Looks a preset up by name; `<name>_long` runs ten times as long.
pub fn preset(name: &str) -> Option<Preset> {
    if let Some(base) = name.strip_suffix(LONG_SUFFIX) {
        let mut p = base_preset(base)?;
        p.name = name.into();
        p.description = format!("{} (10x duration)", p.description);
        p.config.run.duration *= 10.0;
        return Some(p);
    }
    base_preset(name)
}

pub fn list_presets() -> Vec<PresetInfo> {
    BASE_NAMES
        .iter()
        .flat_map(|n| [n.to_string(), format!("{n}{LONG_SUFFIX}")])
        .map(|name| {
            let p = preset(&name).expect("catalog names resolve");
            PresetInfo {
                name,
                description: p.description,
            }
        })
        .collect()
}

/// Runs a preset into `out` and returns the plot files written.
pub fn run_preset(p: &Preset, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let Some(sweep) = &p.sweep else {
        run_experiment(&p.config, out)?;
        return Ok(Vec::new());
    };
    run_sweep(&p.config, sweep, out)?;
    let csv = out.join("sweep.csv");
    let mut written = Vec::new();
    for fig in &p.figures {
        if *fig == "fig8b" {
            written.push(write_fig8b(p, sweep, out)?);
        } else {
            written.push(emit_plot_data(&csv, fig, out)?);
        }
    }
    Ok(written)
}

/// Delay distribution of class 4 at the heaviest sweep point, first replication.
fn write_fig8b(p: &Preset, sweep: &SweepSpec, out: &Path) -> Result<PathBuf, HarnessError> {
    let heaviest = sweep.values.iter().copied().fold(f64::MIN, f64::max);
    let mut curves = Vec::new();
    for &policy in &sweep.policies {
        let mut cfg = p.config.clone();
        cfg.policy.admission = policy;
        cfg.set_param(&sweep.param, heaviest)?;
        let run = run_simulation(&cfg, replication_seed(cfg.run.seed, 0))?;
        if let Ok(cdf) = delay_cdf(&run, 3, true) {
            curves.push((policy, cdf));
        }
    }
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let path = out.join("fig8b.dat");
    write_delay_cdf(&path, &curves)?;
    Ok(path)
}
