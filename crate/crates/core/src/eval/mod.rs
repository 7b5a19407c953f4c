//! Synthetic experiment protocols and metrics.

pub mod dataset;
pub mod experiment;
pub mod metrics;
pub mod runners;
pub mod scenarios;
pub mod shapes;

use crate::scnn::{LayerConfig, NetworkConfig, StdpConfig};
pub use experiment::{run_experiment, run_scenario, ExperimentSpec, ScenarioSpec, DEFAULT_NOISE_RATE};
pub use metrics::{Aggregation, BufferOutcome, Failure, MetricsReport, RecoveryOutcome, TopK};
pub use runners::{
    detection_outcomes, recovery_outcome, run_multistream, run_occlusion, run_recovery, run_self_match, self_match_set,
    top_k_rate, Signature,
};
pub use scenarios::{
    crossing, multistream, occlusion, single, training_corpus, CrossingParams, ObjectStream, SaccadePattern, Scenario,
    StreamParams,
};
pub use shapes::{Shape, PATCH_SIZE, SHAPE_SIZE, TILE};

/// Face layout with learning rates sized for the small synthetic corpus.
///
/// The classification layer learns without depression so its weights settle
/// on every feature that any identity produces.
pub fn synthetic_network_config() -> NetworkConfig {
    let mut cfg = NetworkConfig::face();
    cfg.stdp = StdpConfig {
        a_plus: 0.05,
        a_minus: -0.0375,
        ..StdpConfig::default()
    };
    if let Some(LayerConfig::Conv(class)) = cfg.layers.last_mut() {
        class.stdp = Some(StdpConfig {
            a_minus: 0.0,
            ..cfg.stdp
        });
    }
    cfg
}
