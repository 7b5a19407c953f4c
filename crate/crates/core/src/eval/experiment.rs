//! Experiment specifications and their dispatch to the runners.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{Aggregation, MetricsReport};
use super::runners::{run_multistream, run_occlusion, run_recovery, run_self_match};
use super::scenarios::{CrossingParams, StreamParams, OCCLUSION_LEVELS};
use crate::pipeline::Pipeline;
use crate::tracker::TrackerConfig;
use crate::{Error, Result};

/// Background noise used by `recovery_noise`, in events per pixel per second.
pub const DEFAULT_NOISE_RATE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    Multistream,
    Occlusion {
        pct: u32,
    },
    Recovery {
        #[serde(default)]
        noise_rate: f64,
    },
    SelfMatch {
        #[serde(default = "default_ks")]
        k: Vec<usize>,
        #[serde(default)]
        include_query: bool,
    },
}

fn default_ks() -> Vec<usize> {
    vec![1, 3, 10]
}

impl ScenarioSpec {
    pub fn name(&self) -> String {
        match self {
            Self::Multistream => "multistream".into(),
            Self::Occlusion { pct } => format!("occlusion_{pct}"),
            Self::Recovery { noise_rate } if *noise_rate > 0.0 => "recovery_noise".into(),
            Self::Recovery { .. } => "recovery".into(),
            Self::SelfMatch {
                include_query: true, ..
            } => "self_match_with_query".into(),
            Self::SelfMatch { .. } => "self_match".into(),
        }
    }
}

/// Accepts the names produced by [`ScenarioSpec::name`].
impl FromStr for ScenarioSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s {
            "multistream" => Self::Multistream,
            "recovery" => Self::Recovery { noise_rate: 0.0 },
            "recovery_noise" => Self::Recovery {
                noise_rate: DEFAULT_NOISE_RATE,
            },
            "self_match" => Self::SelfMatch {
                k: default_ks(),
                include_query: false,
            },
            "self_match_with_query" => Self::SelfMatch {
                k: default_ks(),
                include_query: true,
            },
            _ => match s.strip_prefix("occlusion_").and_then(|p| p.parse().ok()) {
                Some(pct) if OCCLUSION_LEVELS.contains(&pct) => Self::Occlusion { pct },
                _ => {
                    return Err(Error::Config(format!(
                        "unknown scenario `{s}`; expected multistream, occlusion_{{0,5,25,50}}, recovery, \
                         recovery_noise, self_match or self_match_with_query"
                    )))
                }
            },
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub scenarios: Vec<ScenarioSpec>,
    pub seeds: Vec<u64>,
    pub aggregation: Aggregation,
    pub stream: StreamParams,
    pub crossing: CrossingParams,
    pub tracker: TrackerConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            scenarios: vec![
                ScenarioSpec::Multistream,
                ScenarioSpec::Occlusion { pct: 5 },
                ScenarioSpec::Occlusion { pct: 25 },
                ScenarioSpec::Occlusion { pct: 50 },
                ScenarioSpec::Recovery { noise_rate: 0.0 },
                ScenarioSpec::Recovery {
                    noise_rate: DEFAULT_NOISE_RATE,
                },
                ScenarioSpec::SelfMatch {
                    k: default_ks(),
                    include_query: false,
                },
            ],
            seeds: (0..10).collect(),
            aggregation: Aggregation::Majority,
            stream: StreamParams::default(),
            crossing: CrossingParams::default(),
            tracker: TrackerConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("experiment spec serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment needs at least one seed".into()));
        }
        for s in &self.scenarios {
            match s {
                ScenarioSpec::Occlusion { pct } if !OCCLUSION_LEVELS.contains(pct) => {
                    return Err(Error::Config(format!(
                        "occlusion level {pct}% not in {OCCLUSION_LEVELS:?}"
                    )))
                }
                ScenarioSpec::Recovery { noise_rate } if !(*noise_rate >= 0.0) => {
                    return Err(Error::Config(format!("noise rate {noise_rate} must be >= 0")))
                }
                ScenarioSpec::SelfMatch { k, .. } if k.is_empty() || k.contains(&0) => {
                    return Err(Error::Config("self-match k values must be >= 1".into()))
                }
                _ => {}
            }
        }
        if self.stream.window_us == 0 || self.stream.step_us == 0 {
            return Err(Error::Config("window_us and step_us must be positive".into()));
        }
        Ok(())
    }
}

pub fn run_scenario(pipeline: &Pipeline, spec: &ExperimentSpec, scenario: &ScenarioSpec) -> Result<MetricsReport> {
    let seeds = &spec.seeds;
    match scenario {
        ScenarioSpec::Multistream => run_multistream(pipeline, seeds, &spec.stream, spec.aggregation),
        ScenarioSpec::Occlusion { pct } => run_occlusion(pipeline, *pct, seeds, &spec.stream, spec.aggregation),
        ScenarioSpec::Recovery { noise_rate } => {
            let cross = CrossingParams {
                noise_rate: *noise_rate,
                ..spec.crossing
            };
            run_recovery(pipeline, seeds, &spec.stream, &cross, spec.tracker)
        }
        ScenarioSpec::SelfMatch { k, include_query } => {
            run_self_match(pipeline, seeds, &spec.stream, k, *include_query)
        }
    }
}

/// Every scenario of `spec`, in order.
pub fn run_experiment(pipeline: &Pipeline, spec: &ExperimentSpec) -> Result<Vec<MetricsReport>> {
    spec.validate()?;
    spec.scenarios.iter().map(|s| run_scenario(pipeline, spec, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in ExperimentSpec::default().scenarios {
            assert_eq!(s.name().parse::<ScenarioSpec>().unwrap().name(), s.name());
        }
        assert!("occlusion_30".parse::<ScenarioSpec>().is_err());
        assert!("tracking".parse::<ScenarioSpec>().is_err());
    }

    #[test]
    fn spec_toml_round_trip_and_validation() {
        let spec = ExperimentSpec::default();
        assert_eq!(ExperimentSpec::from_toml(&spec.to_toml()).unwrap(), spec);
        let partial =
            ExperimentSpec::from_toml("seeds = [3]\n[[scenarios]]\nkind = \"occlusion\"\npct = 25\n").unwrap();
        assert_eq!(partial.scenarios, vec![ScenarioSpec::Occlusion { pct: 25 }]);
        assert_eq!(partial.stream, StreamParams::default());
        assert!(ExperimentSpec::from_toml("seeds = []").is_err());
        assert!(ExperimentSpec::from_toml("[[scenarios]]\nkind = \"occlusion\"\npct = 7\n").is_err());
    }
}
