//! Spiking convolutional encoder: fixed edge layer, STDP-learned feature
//! layers, integrate-and-fire dynamics with one spike per neuron per buffer.

mod checkpoint;
mod forward;
mod kernels;
mod network;
mod stdp;
mod train;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use forward::{conv_forward, pool_forward, ConvOutput, PoolOutput};
pub use kernels::{make_edge_kernels, make_edge_kernels_with, EdgeKernelParams, Kernel};
pub use network::{
    ConvConfig, EncoderActivity, Inhibition, LayerConfig, Network, NetworkConfig, PoolConfig, Stage, WeightInit,
};
pub use stdp::{select_winners, stdp_update, StdpConfig, TickMap};
pub use train::{convergence, train, EpochLog, LayerConvergence, TrainConfig, Trained};

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Layer id of the pixel (input) layer. Conv layers are numbered from 1.
pub const PIXEL_LAYER: u8 = 0;
/// Marker for "never fired" in dense tick maps.
pub const NO_SPIKE: u8 = u8::MAX;

/// One spike: which layer, where, which feature map and at which tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub layer: u8,
    pub x: u16,
    pub y: u16,
    pub feature: u16,
    pub tick: u8,
}

impl SpikeRecord {
    pub fn new(layer: u8, x: u16, y: u16, feature: u16, tick: u8) -> Self {
        Self {
            layer,
            x,
            y,
            feature,
            tick,
        }
    }

    fn key(&self) -> (u8, u16, u16, u16, u8) {
        (self.tick, self.y, self.x, self.feature, self.layer)
    }
}

/// Canonical spike order: tick, then y, then x, then feature.
impl Ord for SpikeRecord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for SpikeRecord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for SpikeRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "L{}({}, {}) f{} t{}",
            self.layer, self.x, self.y, self.feature, self.tick
        )
    }
}

/// Sparse spikes of one layer over one buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeTensor {
    pub layer: u8,
    pub width: u16,
    pub height: u16,
    pub features: u16,
    pub ticks: u8,
    pub spikes: Vec<SpikeRecord>,
}

impl SpikeTensor {
    pub fn empty(layer: u8, width: u16, height: u16, features: u16, ticks: u8) -> Self {
        Self {
            layer,
            width,
            height,
            features,
            ticks,
            spikes: Vec::new(),
        }
    }

    /// Build from unsorted spikes; validates coordinates and sorts canonically.
    pub fn from_spikes(
        layer: u8,
        width: u16,
        height: u16,
        features: u16,
        ticks: u8,
        mut spikes: Vec<SpikeRecord>,
    ) -> crate::Result<Self> {
        for s in &mut spikes {
            if s.x >= width || s.y >= height || s.feature >= features || s.tick >= ticks {
                return Err(crate::Error::Geometry(format!(
                    "spike {s} outside {width}x{height}x{features} over {ticks} ticks"
                )));
            }
            s.layer = layer;
        }
        spikes.sort();
        Ok(Self {
            layer,
            width,
            height,
            features,
            ticks,
            spikes,
        })
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    pub fn index(&self, x: u16, y: u16, feature: u16) -> usize {
        (usize::from(y) * usize::from(self.width) + usize::from(x)) * usize::from(self.features) + usize::from(feature)
    }

    /// Dense first-spike tick per neuron, [`NO_SPIKE`] where silent.
    pub fn tick_map(&self) -> Vec<u8> {
        let mut map = vec![NO_SPIKE; usize::from(self.width) * usize::from(self.height) * usize::from(self.features)];
        for s in &self.spikes {
            let i = self.index(s.x, s.y, s.feature);
            map[i] = map[i].min(s.tick);
        }
        map
    }
}
