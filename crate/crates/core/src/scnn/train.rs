use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    conv_forward, select_winners, stdp_update, Kernel, LayerConfig, Network, NetworkConfig, TickMap, WeightInit,
};
use crate::event_io::SequenceBuffer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Passes over the dataset for each learned layer.
    pub epochs: usize,
    pub seed: u64,
    /// Present buffers in a fresh seeded order each epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            seed: 0,
            shuffle: true,
        }
    }
}

/// Convergence of one learned layer after an epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConvergence {
    pub layer: String,
    /// Mean of `w (1 - w)` over the whole layer.
    pub convergence: f32,
    /// The same metric per feature map.
    pub per_map: Vec<f32>,
    /// Number of STDP updates applied during the epoch.
    pub updates: usize,
}

/// Epoch `epoch` of every learned layer (layers are trained one after another).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub layers: Vec<LayerConvergence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trained {
    pub network: Network,
    pub log: Vec<EpochLog>,
}

/// `Σ w (1 - w) / n`; zero once every weight sits at a bound.
pub fn convergence(weights: &[f32]) -> f32 {
    if weights.is_empty() {
        return 0.0;
    }
    let sum: f64 = weights.iter().map(|&w| f64::from(w) * (1.0 - f64::from(w))).sum();
    (sum / weights.len() as f64) as f32
}

fn map_convergence(k: &Kernel) -> Vec<f32> {
    (0..k.out_features).map(|m| convergence(k.map(m))).collect()
}

/// Initialise a network from `config` and train it.
pub fn train(config: NetworkConfig, dataset: &[SequenceBuffer], tc: &TrainConfig) -> Result<Trained> {
    let mut network = Network::new(config, tc.seed)?;
    let log = train_network(&mut network, dataset, tc)?;
    Ok(Trained { network, log })
}

/// Layer-wise STDP: each learned layer is trained for `tc.epochs` epochs on
/// the frozen output of the layers below it before the next one starts.
pub fn train_network(network: &mut Network, dataset: &[SequenceBuffer], tc: &TrainConfig) -> Result<Vec<EpochLog>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x5d_7a11);
    let learned: Vec<usize> = network
        .config
        .conv_layers()
        .filter(|(_, c)| c.weights == WeightInit::Learned)
        .map(|(i, _)| i)
        .collect();
    let mut per_layer: Vec<Vec<LayerConvergence>> = Vec::new();
    for &li in &learned {
        let LayerConfig::Conv(conv) = network.config.layers[li].clone() else {
            unreachable!("learned layers are conv layers")
        };
        let layer_id = network.layer_id_of(li);
        let stdp = conv.stdp.unwrap_or(network.config.stdp);
        let frozen = &*network;
        let inputs: Vec<_> = dataset
            .par_iter()
            .map(|b| {
                frozen
                    .encode_layers(b, li)
                    .map(|a| a.stages.into_iter().last().expect("pixel stage").spikes)
            })
            .collect::<Result<Vec<_>>>()?;
        let inputs: Vec<_> = inputs.into_iter().filter(|t| !t.is_empty()).collect();
        let ticks: Vec<TickMap> = inputs.iter().map(TickMap::new).collect();
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut history = Vec::with_capacity(tc.epochs);
        for _ in 0..tc.epochs {
            if tc.shuffle {
                order.shuffle(&mut rng);
            }
            let mut updates = 0;
            let kernel = network.kernels[li].as_mut().expect("conv layer has weights");
            for &i in &order {
                let out = conv_forward(&inputs[i], &conv, kernel, layer_id)?;
                for w in select_winners(&out, &stdp) {
                    stdp_update(&ticks[i], &w, kernel, conv.stride, &stdp);
                    updates += 1;
                }
            }
            history.push(LayerConvergence {
                layer: conv.name.clone(),
                convergence: convergence(&kernel.weights),
                per_map: map_convergence(kernel),
                updates,
            });
        }
        per_layer.push(history);
    }
    Ok((0..tc.epochs)
        .map(|epoch| EpochLog {
            epoch,
            layers: per_layer.iter().map(|h| h[epoch].clone()).collect(),
        })
        .collect())
}
