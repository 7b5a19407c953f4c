use serde::{Deserialize, Serialize};

use super::{ConvOutput, Kernel, SpikeRecord, SpikeTensor, NO_SPIKE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StdpConfig {
    pub a_plus: f32,
    pub a_minus: f32,
    pub w_init_mean: f32,
    pub w_init_sd: f32,
    pub winners_per_map: usize,
    /// Chebyshev radius around a winner in which no other map may win.
    pub inhibition_radius: u16,
}

impl Default for StdpConfig {
    fn default() -> Self {
        Self {
            a_plus: 0.004,
            a_minus: -0.003,
            w_init_mean: 0.8,
            w_init_sd: 0.05,
            winners_per_map: 1,
            inhibition_radius: 2,
        }
    }
}

/// Dense first-spike ticks of a layer's input, for synapse lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickMap {
    pub width: u16,
    pub height: u16,
    pub features: u16,
    pub ticks: Vec<u8>,
}

impl TickMap {
    pub fn new(tensor: &SpikeTensor) -> Self {
        Self {
            width: tensor.width,
            height: tensor.height,
            features: tensor.features,
            ticks: tensor.tick_map(),
        }
    }

    /// First spike tick at a possibly out-of-range location.
    pub fn get(&self, x: i32, y: i32, feature: u16) -> Option<u8> {
        if x < 0 || y < 0 || x >= i32::from(self.width) || y >= i32::from(self.height) {
            return None;
        }
        let i = (y as usize * usize::from(self.width) + x as usize) * usize::from(self.features) + usize::from(feature);
        let t = self.ticks[i];
        (t != NO_SPIKE).then_some(t)
    }
}

/// Learning neurons for one buffer: earliest spikes first, higher potential
/// breaking ties, at most `winners_per_map` per map, and no two winners of
/// any map closer than `inhibition_radius`.
pub fn select_winners(output: &ConvOutput, cfg: &StdpConfig) -> Vec<SpikeRecord> {
    let mut order: Vec<usize> = (0..output.spikes.spikes.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&output.spikes.spikes[a], &output.spikes.spikes[b]);
        sa.tick
            .cmp(&sb.tick)
            .then(output.potentials[b].total_cmp(&output.potentials[a]))
            .then(sa.cmp(sb))
    });
    let mut per_map = vec![0usize; usize::from(output.spikes.features)];
    let mut winners: Vec<SpikeRecord> = Vec::new();
    let r = i32::from(cfg.inhibition_radius);
    for i in order {
        let s = output.spikes.spikes[i];
        if per_map[usize::from(s.feature)] >= cfg.winners_per_map {
            continue;
        }
        let near = winners
            .iter()
            .any(|w| (i32::from(w.x) - i32::from(s.x)).abs() <= r && (i32::from(w.y) - i32::from(s.y)).abs() <= r);
        if near {
            continue;
        }
        per_map[usize::from(s.feature)] += 1;
        winners.push(s);
    }
    winners
}

/// Multiplicative STDP on the synapses of one winning neuron.
///
/// Synapses whose presynaptic neuron fired at or before the winner's tick are
/// potentiated by `a_plus * w * (1 - w)`; all others (later or silent) are
/// depressed by `a_minus * w * (1 - w)`. Padding taps outside the input are
/// left unchanged.
pub fn stdp_update(pre: &TickMap, post: &SpikeRecord, weights: &mut Kernel, stride: u16, cfg: &StdpConfig) {
    let (kh, kw) = (i32::from(weights.height), i32::from(weights.width));
    let (pad_y, pad_x) = (kh / 2, kw / 2);
    let stride = i32::from(stride.max(1));
    for c in 0..weights.in_features {
        for ky in 0..kh {
            let iy = i32::from(post.y) * stride + ky - pad_y;
            if iy < 0 || iy >= i32::from(pre.height) {
                continue;
            }
            for kx in 0..kw {
                let ix = i32::from(post.x) * stride + kx - pad_x;
                if ix < 0 || ix >= i32::from(pre.width) {
                    continue;
                }
                let causal = pre.get(ix, iy, c).is_some_and(|t| t <= post.tick);
                let a = if causal { cfg.a_plus } else { cfg.a_minus };
                let i = weights.index(post.feature, c, ky as u16, kx as u16);
                let w = weights.weights[i];
                weights.weights[i] = (w + a * w * (1.0 - w)).clamp(0.0, 1.0);
            }
        }
    }
}
