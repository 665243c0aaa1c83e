//! Experiment configuration and its plain-text format.
//!
//! The format is TOML with four sections and one `[[class]]` table per service
//! class:
//!
//! ```toml
//! [cluster]
//! N = 20                 # required
//! switch_delay = 0.0     # seconds a moved server is unavailable
//! job_overhead = 0.0     # constant added to every service demand
//!
//! [policy]
//! admission = "threshold"   # admit_all | threshold | current_state | oracle_threshold
//! window_events = 50
//! epsilon = 0.01
//! ewma_beta = 0.5
//! # threshold_cap = 200
//!
//! [run]
//! duration = 7200.0
//! seed = 1
//! sample_period = 600.0
//! replications = 1
//!
//! [swap]                  # optional
//! period = 300.0
//! classes = [1, 2]        # 1-based
//!
//! [[class]]
//! b = 1.0
//! gamma = 2.0
//! k = 50
//! q = 1.0
//! alpha = 1.0
//! delta = 0.1
//! arrivals = "exponential"  # or "bursty"
//! reward = "flat"           # flat | proportional | bounded_proportional
//! c = 10.0
//! r = 10.0                  # flat / proportional
//! # r_prime, t, r_dprime    # bounded_proportional
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_class, ModelError, RewardModel, ServiceClass};
use crate::policy::{AdmissionKind, PolicyConfig};
use crate::sim::{JobInterarrival, SwapSpec, TrafficSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing field `{0}`")]
    Missing(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("class {class}: {source}")]
    Class {
        class: usize,
        #[source]
        source: ModelError,
    },
}

impl ConfigError {
    /// Dotted path of the offending field, when known.
    pub fn field(&self) -> Option<String> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::Missing(f) => Some(f.clone()),
            ConfigError::Invalid { field, .. } => Some(field.clone()),
            ConfigError::Class { class, source } => {
                let ModelError::InvalidParameter { field, .. } = source;
                Some(format!("classes[{class}].{field}"))
            }
        }
    }
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub servers: u32,
    pub switch_delay: f64,
    pub job_overhead: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassConfig {
    pub class: ServiceClass,
    pub traffic: TrafficSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub duration: f64,
    pub seed: u64,
    pub sample_period: f64,
    pub replications: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            duration: 7200.0,
            seed: 1,
            sample_period: 600.0,
            replications: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cluster: ClusterConfig,
    pub classes: Vec<ClassConfig>,
    pub swap: Option<SwapSpec>,
    pub policy: PolicyConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn service_classes(&self) -> Vec<ServiceClass> {
        self.classes.iter().map(|c| c.class).collect()
    }

    pub fn traffic(&self) -> Vec<TrafficSpec> {
        self.classes.iter().map(|c| c.traffic).collect()
    }

    /// Offered load of each class in server-equivalents, `delta k b`.
    pub fn offered_loads(&self) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| c.traffic.delta * f64::from(c.class.k) * c.traffic.service_mean)
            .collect()
    }

    pub fn total_offered_load(&self) -> f64 {
        self.offered_loads().iter().sum()
    }

    /// Non-fatal remarks about the configuration.
    pub fn advisories(&self) -> Vec<String> {
        let load = self.total_offered_load();
        let n = f64::from(self.cluster.servers);
        let mut notes = Vec::new();
        if load > n {
            notes.push(format!(
                "over-saturated: offered load {load:.2} exceeds {} servers ({:.0}%)",
                self.cluster.servers,
                100.0 * load / n
            ));
        }
        notes
    }

    /// Checks every invariant except a positive duration, which only the
    /// parser insists on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cluster.servers < 1 {
            return Err(invalid("cluster.N", "must be >= 1"));
        }
        if !(self.cluster.switch_delay >= 0.0) {
            return Err(invalid("cluster.switch_delay", "must be >= 0"));
        }
        if !(self.cluster.job_overhead >= 0.0) {
            return Err(invalid("cluster.job_overhead", "must be >= 0"));
        }
        if self.classes.is_empty() {
            return Err(ConfigError::Missing("class".into()));
        }
        for (i, c) in self.classes.iter().enumerate() {
            validate_class(c.class).map_err(|source| ConfigError::Class { class: i + 1, source })?;
            if !(c.traffic.delta >= 0.0 && c.traffic.delta.is_finite()) {
                return Err(invalid(format!("classes[{}].delta", i + 1), "must be >= 0"));
            }
        }
        let p = &self.policy;
        if p.window_events < 1 {
            return Err(invalid("policy.window_events", "must be >= 1"));
        }
        if !(p.epsilon > 0.0) {
            return Err(invalid("policy.epsilon", "must be > 0"));
        }
        if !(p.ewma_beta > 0.0 && p.ewma_beta <= 1.0) {
            return Err(invalid("policy.ewma_beta", "must be in (0, 1]"));
        }
        if !(self.run.duration >= 0.0 && self.run.duration.is_finite()) {
            return Err(invalid("run.duration", "must be finite and >= 0"));
        }
        if !(self.run.sample_period > 0.0) {
            return Err(invalid("run.sample_period", "must be > 0"));
        }
        if self.run.replications < 1 {
            return Err(invalid("run.replications", "must be >= 1"));
        }
        if let Some(s) = &self.swap {
            let m = self.classes.len();
            if !(s.period > 0.0) {
                return Err(invalid("swap.period", "must be > 0"));
            }
            if s.classes.0 >= m || s.classes.1 >= m || s.classes.0 == s.classes.1 {
                return Err(invalid("swap.classes", "must name two distinct classes"));
            }
        }
        Ok(())
    }

    /// Renders the configuration in the text format accepted by [`parse_config`].
    pub fn to_text(&self) -> String {
        toml::to_string(&RawConfig::from(self)).expect("config serialises")
    }

    /// Overrides one parameter by dotted path, e.g. `classes[4].delta`
    /// (class indices are 1-based).
    pub fn set_param(&mut self, path: &str, value: f64) -> Result<(), ConfigError> {
        let bad = || invalid(path, format!("cannot set to {value}"));
        let as_u32 = |v: f64| {
            if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                Err(bad())
            }
        };
        if let Some(rest) = path.strip_prefix("classes[") {
            let (idx, field) = rest
                .split_once("].")
                .ok_or_else(|| invalid(path, "expected classes[i].field"))?;
            let i: usize = idx.parse().map_err(|_| invalid(path, "bad class index"))?;
            let cc = i
                .checked_sub(1)
                .and_then(|i| self.classes.get_mut(i))
                .ok_or_else(|| invalid(path, "class index out of range"))?;
            let class = &mut cc.class;
            match field {
                "delta" => cc.traffic.delta = value,
                "b" => {
                    class.b = value;
                    cc.traffic.service_mean = value;
                }
                "gamma" => {
                    class.gamma = value;
                    cc.traffic.job_interarrival = match cc.traffic.job_interarrival {
                        JobInterarrival::Exponential { .. } => {
                            JobInterarrival::Exponential { gamma: value }
                        }
                        JobInterarrival::Bursty { .. } => JobInterarrival::Bursty { gamma: value },
                    };
                }
                "k" => class.k = as_u32(value)?,
                "q" => class.q = value,
                "alpha" => class.alpha = value,
                "c" => match &mut class.reward {
                    RewardModel::Flat { c, .. }
                    | RewardModel::Proportional { c, .. }
                    | RewardModel::BoundedProportional { c, .. } => *c = value,
                },
                "r" => match &mut class.reward {
                    RewardModel::Flat { r, .. } | RewardModel::Proportional { r, .. } => *r = value,
                    _ => return Err(bad()),
                },
                "r_prime" | "t" | "r_dprime" => match &mut class.reward {
                    RewardModel::BoundedProportional {
                        r_prime,
                        t,
                        r_dprime,
                        ..
                    } => match field {
                        "r_prime" => *r_prime = value,
                        "t" => *t = value,
                        _ => *r_dprime = value,
                    },
                    _ => return Err(bad()),
                },
                _ => return Err(invalid(path, "unknown class field")),
            }
        } else {
            match path {
                "cluster.N" => self.cluster.servers = as_u32(value)?,
                "cluster.switch_delay" => self.cluster.switch_delay = value,
                "cluster.job_overhead" => self.cluster.job_overhead = value,
                "policy.window_events" => self.policy.window_events = as_u32(value)?,
                "policy.epsilon" => self.policy.epsilon = value,
                "policy.ewma_beta" => self.policy.ewma_beta = value,
                "run.duration" => self.run.duration = value,
                "run.sample_period" => self.run.sample_period = value,
                "swap.period" => match &mut self.swap {
                    Some(s) => s.period = value,
                    None => return Err(invalid(path, "no swap configured")),
                },
                _ => return Err(invalid(path, "unknown parameter")),
            }
        }
        self.validate()
    }
}

/// Column name used for a sweep parameter: `classes[4].delta` becomes `delta4`.
pub fn param_column_name(path: &str) -> String {
    if let Some(rest) = path.strip_prefix("classes[") {
        if let Some((idx, field)) = rest.split_once("].") {
            return format!("{field}{idx}");
        }
    }
    path.rsplit('.').next().unwrap_or(path).to_string()
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        ConfigError::Syntax {
            line,
            message: e.message().to_string(),
        }
    })?;
    let cfg = raw.into_config()?;
    cfg.validate()?;
    if !(cfg.run.duration > 0.0) {
        return Err(invalid("run.duration", "must be > 0"));
    }
    Ok(cfg)
}

// Text-format mirror of the config. Every field is optional here so that
// missing ones can be reported by their dotted path.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCluster {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    switch_delay: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    job_overhead: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    #[serde(skip_serializing_if = "Option::is_none")]
    admission: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window_events: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ewma_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_cap: Option<u32>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replications: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSwap {
    period: Option<f64>,
    classes: Option<Vec<usize>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arrivals: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reward: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_prime: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_dprime: Option<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    cluster: Option<RawCluster>,
    policy: Option<RawPolicy>,
    run: Option<RawRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    swap: Option<RawSwap>,
    #[serde(rename = "class", default)]
    classes: Vec<RawClass>,
}

fn need<T>(v: Option<T>, field: impl FnOnce() -> String) -> Result<T, ConfigError> {
    v.ok_or_else(|| ConfigError::Missing(field()))
}

impl RawClass {
    fn into_class(self, i: usize) -> Result<ClassConfig, ConfigError> {
        let path = |f: &str| format!("classes[{}].{f}", i + 1);
        let b = need(self.b, || path("b"))?;
        let gamma = need(self.gamma, || path("gamma"))?;
        let c = need(self.c, || path("c"))?;
        let reward = match need(self.reward, || path("reward"))?.as_str() {
            "flat" => RewardModel::Flat {
                c,
                r: need(self.r, || path("r"))?,
            },
            "proportional" => RewardModel::Proportional {
                c,
                r: need(self.r, || path("r"))?,
            },
            "bounded_proportional" => RewardModel::BoundedProportional {
                c,
                r_prime: need(self.r_prime, || path("r_prime"))?,
                t: need(self.t, || path("t"))?,
                r_dprime: need(self.r_dprime, || path("r_dprime"))?,
            },
            other => return Err(invalid(path("reward"), format!("unknown model `{other}`"))),
        };
        let job_interarrival = match self.arrivals.as_deref().unwrap_or("exponential") {
            "exponential" => JobInterarrival::Exponential { gamma },
            "bursty" => JobInterarrival::Bursty { gamma },
            other => {
                return Err(invalid(
                    path("arrivals"),
                    format!("unknown process `{other}`"),
                ))
            }
        };
        Ok(ClassConfig {
            class: ServiceClass {
                index: i,
                b,
                gamma,
                k: need(self.k, || path("k"))?,
                q: need(self.q, || path("q"))?,
                alpha: self.alpha.unwrap_or(1.0),
                reward,
            },
            traffic: TrafficSpec {
                delta: need(self.delta, || path("delta"))?,
                job_interarrival,
                service_mean: b,
            },
        })
    }
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig, ConfigError> {
        let cluster = need(self.cluster, || "cluster".into())?;
        let policy = self.policy.unwrap_or_default();
        let run = self.run.unwrap_or_default();
        let defaults = PolicyConfig::default();
        let run_defaults = RunConfig::default();
        let admission = match policy.admission {
            Some(s) => s
                .parse::<AdmissionKind>()
                .map_err(|e| invalid("policy.admission", e))?,
            None => defaults.admission,
        };
        let swap = match self.swap {
            None => None,
            Some(s) => {
                let period = need(s.period, || "swap.period".into())?;
                let classes = need(s.classes, || "swap.classes".into())?;
                match classes.as_slice() {
                    &[a, b] if a >= 1 && b >= 1 => Some(SwapSpec {
                        period,
                        classes: (a - 1, b - 1),
                    }),
                    _ => return Err(invalid("swap.classes", "expected two 1-based indices")),
                }
            }
        };
        Ok(ExperimentConfig {
            cluster: ClusterConfig {
                servers: need(cluster.n, || "cluster.N".into())?,
                switch_delay: cluster.switch_delay.unwrap_or(0.0),
                job_overhead: cluster.job_overhead.unwrap_or(0.0),
            },
            classes: self
                .classes
                .into_iter()
                .enumerate()
                .map(|(i, c)| c.into_class(i))
                .collect::<Result<_, _>>()?,
            swap,
            policy: PolicyConfig {
                admission,
                window_events: policy.window_events.unwrap_or(defaults.window_events),
                epsilon: policy.epsilon.unwrap_or(defaults.epsilon),
                ewma_beta: policy.ewma_beta.unwrap_or(defaults.ewma_beta),
                threshold_cap: policy.threshold_cap,
            },
            run: RunConfig {
                duration: run.duration.unwrap_or(run_defaults.duration),
                seed: run.seed.unwrap_or(run_defaults.seed),
                sample_period: run.sample_period.unwrap_or(run_defaults.sample_period),
                replications: run.replications.unwrap_or(run_defaults.replications),
            },
        })
    }
}

impl From<&ExperimentConfig> for RawConfig {
    fn from(cfg: &ExperimentConfig) -> Self {
        let classes = cfg
            .classes
            .iter()
            .map(|cc| {
                let cl = &cc.class;
                let mut raw = RawClass {
                    b: Some(cl.b),
                    gamma: Some(cl.gamma),
                    k: Some(cl.k),
                    q: Some(cl.q),
                    alpha: Some(cl.alpha),
                    delta: Some(cc.traffic.delta),
                    arrivals: Some(
                        if cc.traffic.job_interarrival.is_bursty() {
                            "bursty"
                        } else {
                            "exponential"
                        }
                        .into(),
                    ),
                    reward: Some(cl.reward.name().into()),
                    c: Some(cl.reward.charge()),
                    ..RawClass::default()
                };
                match cl.reward {
                    RewardModel::Flat { r, .. } | RewardModel::Proportional { r, .. } => {
                        raw.r = Some(r)
                    }
                    RewardModel::BoundedProportional {
                        r_prime,
                        t,
                        r_dprime,
                        ..
                    } => {
                        raw.r_prime = Some(r_prime);
                        raw.t = Some(t);
                        raw.r_dprime = Some(r_dprime);
                    }
                }
                raw
            })
            .collect();
        RawConfig {
            cluster: Some(RawCluster {
                n: Some(cfg.cluster.servers),
                switch_delay: Some(cfg.cluster.switch_delay),
                job_overhead: Some(cfg.cluster.job_overhead),
            }),
            policy: Some(RawPolicy {
                admission: Some(cfg.policy.admission.as_str().into()),
                window_events: Some(cfg.policy.window_events),
                epsilon: Some(cfg.policy.epsilon),
                ewma_beta: Some(cfg.policy.ewma_beta),
                threshold_cap: cfg.policy.threshold_cap,
            }),
            run: Some(RawRun {
                duration: Some(cfg.run.duration),
                seed: Some(cfg.run.seed),
                sample_period: Some(cfg.run.sample_period),
                replications: Some(cfg.run.replications),
            }),
            swap: cfg.swap.map(|s| RawSwap {
                period: Some(s.period),
                classes: Some(vec![s.classes.0 + 1, s.classes.1 + 1]),
            }),
            classes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[cluster]
N = 4

[[class]]
b = 1.0
gamma = 2.0
k = 10
q = 1.0
delta = 0.1
reward = "flat"
c = 10
r = 10
"#;

    #[test]
    fn defaults_filled() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.cluster.servers, 4);
        assert_eq!(cfg.cluster.switch_delay, 0.0);
        assert_eq!(cfg.policy.window_events, 50);
        assert_eq!(cfg.policy.ewma_beta, 0.5);
        assert_eq!(cfg.policy.epsilon, 0.01);
        assert_eq!(cfg.run.sample_period, 600.0);
        assert_eq!(cfg.run.duration, 7200.0);
        assert_eq!(cfg.classes[0].class.alpha, 1.0);
        assert_eq!(cfg.policy.admission, AdmissionKind::AdmitAll);
    }

    #[test]
    fn missing_servers() {
        let text = MINIMAL.replace("N = 4", "");
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Missing(_)));
        assert_eq!(err.field().as_deref(), Some("cluster.N"));
    }

    #[test]
    fn syntax_error_has_line() {
        let text = MINIMAL.replace("k = 10", "k = = 10");
        match parse_config(&text).unwrap_err() {
            ConfigError::Syntax { line, .. } => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("N = 4", "N = 4\nservers = 3");
        assert!(matches!(parse_config(&text), Err(ConfigError::Syntax { .. })));
    }

    #[test]
    fn class_validation_error() {
        let text = MINIMAL.replace("b = 1.0", "b = 0.0");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.field().as_deref(), Some("classes[1].b"));
    }

    #[test]
    fn round_trip() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn set_param_paths() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.set_param("classes[1].delta", 0.3).unwrap();
        assert_eq!(cfg.classes[0].traffic.delta, 0.3);
        cfg.set_param("cluster.N", 8.0).unwrap();
        assert_eq!(cfg.cluster.servers, 8);
        assert!(cfg.set_param("classes[2].delta", 0.3).is_err());
        assert!(cfg.set_param("cluster.N", 2.5).is_err());
        assert!(cfg.set_param("classes[1].b", 0.0).is_err());
        assert_eq!(param_column_name("classes[4].delta"), "delta4");
        assert_eq!(param_column_name("cluster.N"), "N");
    }
}
