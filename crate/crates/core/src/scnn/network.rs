use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::forward::conv_out_dims;
use super::{
    conv_forward, make_edge_kernels_with, pool_forward, EdgeKernelParams, Kernel, SpikeRecord, SpikeTensor, StdpConfig,
    NO_SPIKE, PIXEL_LAYER,
};
use crate::event_io::SequenceBuffer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inhibition {
    /// One feature per location fires per buffer.
    #[default]
    PerLocation,
    /// A spike silences every location within this Chebyshev radius.
    Lateral(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    /// Fixed oriented edge detectors (four maps, single input feature).
    Edge,
    /// Gaussian initialisation, trained by STDP.
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvConfig {
    pub name: String,
    pub features: u16,
    /// Square kernel side.
    pub kernel: u16,
    #[serde(default = "one")]
    pub stride: u16,
    pub threshold: f32,
    #[serde(default)]
    pub inhibition: Inhibition,
    pub weights: WeightInit,
    /// Smallest weight along which the decoder propagates a spike.
    #[serde(default)]
    pub decode_floor: f32,
    /// Learning parameters for this layer, overriding the network-wide ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stdp: Option<StdpConfig>,
}

fn one() -> u16 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub size: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerConfig {
    Conv(ConvConfig),
    Pool(PoolConfig),
}

fn ten() -> u8 {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Time slices per buffered input.
    #[serde(default = "ten")]
    pub ticks: u8,
    #[serde(default)]
    pub edge: EdgeKernelParams,
    #[serde(default)]
    pub stdp: StdpConfig,
    pub layers: Vec<LayerConfig>,
}

impl NetworkConfig {
    /// Single-class layout: 4 edge maps, 36 learned maps, 1 class map.
    pub fn face() -> Self {
        Self::with_classes(1, 36)
    }

    /// Multi-class layout with 16 learned maps per class.
    pub fn multi_class(classes: u16) -> Self {
        Self::with_classes(classes, 16 * classes)
    }

    fn with_classes(classes: u16, features: u16) -> Self {
        Self {
            ticks: 10,
            edge: EdgeKernelParams::default(),
            stdp: StdpConfig::default(),
            layers: vec![
                LayerConfig::Conv(ConvConfig {
                    name: "conv1".into(),
                    features: 4,
                    kernel: 5,
                    stride: 1,
                    threshold: 0.6,
                    inhibition: Inhibition::PerLocation,
                    weights: WeightInit::Edge,
                    decode_floor: 0.0,
                    stdp: None,
                }),
                LayerConfig::Pool(PoolConfig { size: 2 }),
                LayerConfig::Conv(ConvConfig {
                    name: "conv2".into(),
                    features,
                    kernel: 5,
                    stride: 1,
                    threshold: 6.0,
                    inhibition: Inhibition::PerLocation,
                    weights: WeightInit::Learned,
                    decode_floor: 0.5,
                    stdp: None,
                }),
                LayerConfig::Pool(PoolConfig { size: 2 }),
                LayerConfig::Conv(ConvConfig {
                    name: "class".into(),
                    features: classes,
                    kernel: 7,
                    stride: 1,
                    threshold: 38.0,
                    inhibition: Inhibition::Lateral(10),
                    weights: WeightInit::Learned,
                    decode_floor: 0.5,
                    stdp: None,
                }),
            ],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("network config serialises")
    }

    pub fn conv_layers(&self) -> impl Iterator<Item = (usize, &ConvConfig)> {
        self.layers.iter().enumerate().filter_map(|(i, l)| match l {
            LayerConfig::Conv(c) => Some((i, c)),
            LayerConfig::Pool(_) => None,
        })
    }

    /// Input feature count of every layer, in order.
    pub fn input_features(&self) -> Vec<u16> {
        let mut features = 1;
        self.layers
            .iter()
            .map(|l| {
                let input = features;
                if let LayerConfig::Conv(c) = l {
                    features = c.features;
                }
                input
            })
            .collect()
    }

    /// Feature count per conv layer id (index 0 is the pixel layer).
    pub fn layer_features(&self) -> Vec<u16> {
        let mut v = vec![1];
        v.extend(self.conv_layers().map(|(_, c)| c.features));
        v
    }

    pub fn class_layer(&self) -> u8 {
        self.conv_layers().count() as u8
    }

    pub fn class_count(&self) -> u16 {
        self.conv_layers().last().map_or(0, |(_, c)| c.features)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ticks == 0 || self.ticks == NO_SPIKE {
            return Err(Error::Config(format!("ticks must be in 1..{NO_SPIKE}")));
        }
        if self.conv_layers().count() == 0 {
            return Err(Error::Config("network needs at least one conv layer".into()));
        }
        if !matches!(self.layers.last(), Some(LayerConfig::Conv(_))) {
            return Err(Error::Config(
                "the last layer must be the classification conv layer".into(),
            ));
        }
        let inputs = self.input_features();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                LayerConfig::Pool(p) if p.size == 0 => {
                    return Err(Error::Config(format!("layer {i}: pool size must be positive")))
                }
                LayerConfig::Pool(_) => {}
                LayerConfig::Conv(c) => {
                    if c.features == 0 || c.kernel == 0 || c.stride == 0 {
                        return Err(Error::Config(format!(
                            "layer `{}`: features, kernel and stride must be >= 1",
                            c.name
                        )));
                    }
                    if !(c.threshold > 0.0) {
                        return Err(Error::Config(format!("layer `{}`: threshold must be > 0", c.name)));
                    }
                    if c.weights == WeightInit::Edge && (c.features != 4 || inputs[i] != 1) {
                        return Err(Error::Config(format!(
                            "layer `{}`: edge kernels need 4 maps over a single input feature",
                            c.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one layer (or of the pixel input) for one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub spikes: SpikeTensor,
    /// Dense first-spike tick per neuron.
    pub tick_map: Vec<u8>,
    /// For pool stages: winning input location per neuron (valid where fired).
    pub switches: Vec<(u16, u16)>,
    /// For conv stages: potential at firing, parallel to `spikes.spikes`.
    pub potentials: Vec<f32>,
    pub pooled: bool,
}

impl Stage {
    fn plain(spikes: SpikeTensor) -> Self {
        Self {
            tick_map: spikes.tick_map(),
            spikes,
            switches: Vec::new(),
            potentials: Vec::new(),
            pooled: false,
        }
    }

    pub fn tick_at(&self, x: u16, y: u16, feature: u16) -> Option<u8> {
        let t = self.tick_map[self.spikes.index(x, y, feature)];
        (t != NO_SPIKE).then_some(t)
    }

    pub fn switch_at(&self, x: u16, y: u16, feature: u16) -> (u16, u16) {
        self.switches[self.spikes.index(x, y, feature)]
    }
}

/// Every stage of one encoder pass; `stages[0]` is the pixel input and
/// `stages[i]` the output of network layer `i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderActivity {
    pub width: u16,
    pub height: u16,
    pub ticks: u8,
    pub stages: Vec<Stage>,
}

impl EncoderActivity {
    pub fn classification(&self) -> &SpikeTensor {
        &self.stages.last().expect("activity has stages").spikes
    }

    /// Stage holding the output of conv layer `layer_id` (before pooling).
    pub fn conv_stage(&self, layer_id: u8) -> Option<&Stage> {
        if layer_id == PIXEL_LAYER {
            return self.stages.first();
        }
        self.stages.iter().find(|s| !s.pooled && s.spikes.layer == layer_id)
    }

    pub fn spike_count(&self) -> usize {
        self.stages.iter().map(|s| s.spikes.len()).sum()
    }
}

/// Encoder configuration together with its weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    /// One kernel per layer; `None` for pooling layers.
    pub kernels: Vec<Option<Kernel>>,
}

impl Network {
    /// Edge kernels for fixed layers, `N(w_init_mean, w_init_sd)` clipped to
    /// `[0, 1]` for learned ones.
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = config.input_features();
        let mut kernels = Vec::with_capacity(config.layers.len());
        for (layer, &input) in config.layers.iter().zip(&inputs) {
            kernels.push(match layer {
                LayerConfig::Pool(_) => None,
                LayerConfig::Conv(c) => Some(match c.weights {
                    WeightInit::Edge => make_edge_kernels_with(&EdgeKernelParams {
                        size: c.kernel,
                        ..config.edge
                    }),
                    WeightInit::Learned => {
                        let stdp = c.stdp.unwrap_or(config.stdp);
                        let normal = Normal::new(stdp.w_init_mean, stdp.w_init_sd.max(0.0))
                            .map_err(|e| Error::Config(e.to_string()))?;
                        let mut k = Kernel::zeros(c.features, input, c.kernel, c.kernel);
                        for w in &mut k.weights {
                            *w = normal.sample(&mut rng).clamp(0.0, 1.0);
                        }
                        k
                    }
                }),
            });
        }
        Ok(Self { config, kernels })
    }

    pub fn face(seed: u64) -> Self {
        Self::new(NetworkConfig::face(), seed).expect("face config is valid")
    }

    /// Total feature maps across conv layers: the ASH row count.
    pub fn total_features(&self) -> usize {
        self.config.conv_layers().map(|(_, c)| usize::from(c.features)).sum()
    }

    /// Conv layer `(layer index, layer id, config, kernel)` tuples in forward order.
    pub fn convs(&self) -> impl Iterator<Item = (usize, u8, &ConvConfig, &Kernel)> {
        self.config.conv_layers().enumerate().map(move |(n, (i, c))| {
            (
                i,
                (n + 1) as u8,
                c,
                self.kernels[i].as_ref().expect("conv layer has weights"),
            )
        })
    }

    /// Layer id produced by network layer `index`: conv ids count from 1,
    /// pool stages inherit the id of the layer they pool.
    pub fn layer_id_of(&self, index: usize) -> u8 {
        self.config.layers[..=index]
            .iter()
            .filter(|l| matches!(l, LayerConfig::Conv(_)))
            .count() as u8
    }

    /// First-spike-per-pixel input tensor for one buffer; polarity is merged.
    pub fn pixel_tensor(&self, buffer: &SequenceBuffer) -> Result<SpikeTensor> {
        let ticks = u32::from(self.config.ticks);
        let (w, h) = (buffer.width, buffer.height);
        let mut first = vec![NO_SPIKE; usize::from(w) * usize::from(h)];
        for e in &buffer.events {
            if e.x >= w || e.y >= h {
                return Err(Error::Geometry(format!("event at ({}, {}) outside {w}x{h}", e.x, e.y)));
            }
            if e.t < buffer.window_start || e.t >= buffer.window_end() {
                return Err(Error::Geometry(format!(
                    "event at t={} outside window [{}, {})",
                    e.t,
                    buffer.window_start,
                    buffer.window_end()
                )));
            }
            let i = usize::from(e.y) * usize::from(w) + usize::from(e.x);
            first[i] = first[i].min(buffer.tick_of(e.t, ticks) as u8);
        }
        let spikes = first
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != NO_SPIKE)
            .map(|(i, &t)| {
                SpikeRecord::new(
                    PIXEL_LAYER,
                    (i % usize::from(w)) as u16,
                    (i / usize::from(w)) as u16,
                    0,
                    t,
                )
            })
            .collect();
        SpikeTensor::from_spikes(PIXEL_LAYER, w, h, 1, self.config.ticks, spikes)
    }

    pub fn encode(&self, buffer: &SequenceBuffer) -> Result<EncoderActivity> {
        self.encode_layers(buffer, self.config.layers.len())
    }

    /// Run the first `count` layers.
    pub fn encode_layers(&self, buffer: &SequenceBuffer, count: usize) -> Result<EncoderActivity> {
        let pixels = self.pixel_tensor(buffer)?;
        self.encode_tensor(pixels, count)
    }

    pub fn encode_tensor(&self, pixels: SpikeTensor, count: usize) -> Result<EncoderActivity> {
        let (width, height, ticks) = (pixels.width, pixels.height, pixels.ticks);
        let mut stages = vec![Stage::plain(pixels)];
        for (i, layer) in self.config.layers.iter().enumerate().take(count) {
            let input = &stages.last().expect("pixel stage").spikes;
            let stage = match layer {
                LayerConfig::Conv(c) => {
                    let k = self.kernels[i].as_ref().expect("conv layer has weights");
                    let out = conv_forward(input, c, k, self.layer_id_of(i))?;
                    let mut st = Stage::plain(out.spikes);
                    st.potentials = out.potentials;
                    st
                }
                LayerConfig::Pool(p) => {
                    let out = pool_forward(input, p.size)?;
                    let mut switches = vec![(0, 0); out.spikes.tick_map().len()];
                    for (s, &sw) in out.spikes.spikes.iter().zip(&out.switches) {
                        switches[out.spikes.index(s.x, s.y, s.feature)] = sw;
                    }
                    let mut st = Stage::plain(out.spikes);
                    st.switches = switches;
                    st.pooled = true;
                    st
                }
            };
            stages.push(stage);
        }
        Ok(EncoderActivity {
            width,
            height,
            ticks,
            stages,
        })
    }

    /// Output geometry of every stage for a `width` x `height` input.
    pub fn stage_dims(&self, width: u16, height: u16) -> Vec<(u16, u16)> {
        let mut dims = vec![(width, height)];
        for layer in &self.config.layers {
            let &(w, h) = dims.last().expect("non-empty");
            dims.push(match layer {
                LayerConfig::Conv(c) => conv_out_dims(w, h, c.stride),
                LayerConfig::Pool(p) => (w.div_ceil(p.size), h.div_ceil(p.size)),
            });
        }
        dims
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_io::{Event, Polarity};

    #[test]
    fn face_layout_has_41_features() {
        let net = Network::face(0);
        assert_eq!(net.total_features(), 41);
        assert_eq!(net.config.layer_features(), vec![1, 4, 36, 1]);
        assert_eq!(net.config.class_layer(), 3);
    }

    #[test]
    fn multi_class_uses_sixteen_maps_per_class() {
        let cfg = NetworkConfig::multi_class(5);
        assert_eq!(cfg.layer_features(), vec![1, 4, 80, 5]);
    }

    #[test]
    fn learned_init_is_clipped_normal() {
        let net = Network::face(3);
        let k = net.kernels[2].as_ref().unwrap();
        assert_eq!(k.len(), 36 * 4 * 25);
        assert!(k.weights.iter().all(|w| (0.0..=1.0).contains(w)));
        let mean = k.weights.iter().sum::<f32>() / k.len() as f32;
        assert!((mean - 0.8).abs() < 0.01);
        assert_eq!(Network::face(3), net);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = NetworkConfig::face();
        assert_eq!(NetworkConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn invalid_threshold_is_rejected() {
        let mut cfg = NetworkConfig::face();
        if let LayerConfig::Conv(c) = &mut cfg.layers[0] {
            c.threshold = 0.0;
        }
        assert!(Network::new(cfg, 0).is_err());
    }

    #[test]
    fn pixel_tensor_keeps_first_tick() {
        let net = Network::face(0);
        let mut buf = SequenceBuffer::empty(0, 8, 8, 10_000, 10_000);
        buf.events = vec![
            Event::new(2, 3, Polarity::On, 13_500),
            Event::new(2, 3, Polarity::Off, 18_000),
            Event::new(7, 7, Polarity::Off, 19_999),
        ];
        let t = net.pixel_tensor(&buf).unwrap();
        assert_eq!(
            t.spikes,
            vec![SpikeRecord::new(0, 2, 3, 0, 3), SpikeRecord::new(0, 7, 7, 0, 9)]
        );
    }

    #[test]
    fn stage_geometry_follows_pooling() {
        let net = Network::face(0);
        assert_eq!(
            net.stage_dims(64, 40),
            vec![(64, 40), (64, 40), (32, 20), (32, 20), (16, 10), (16, 10)]
        );
    }
}
