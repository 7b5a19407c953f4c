//! Event-driven integrate-and-fire convolution and spike-forwarding pooling.

use super::{ConvConfig, Inhibition, Kernel, SpikeRecord, SpikeTensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvOutput {
    pub spikes: SpikeTensor,
    /// Membrane potential at the moment each spike fired, parallel to `spikes.spikes`.
    pub potentials: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolOutput {
    pub spikes: SpikeTensor,
    /// Winning input location `(x, y)` per output spike, parallel to `spikes.spikes`.
    pub switches: Vec<(u16, u16)>,
}

/// Output geometry of a `same`-padded convolution.
pub(crate) fn conv_out_dims(width: u16, height: u16, stride: u16) -> (u16, u16) {
    (width.div_ceil(stride), height.div_ceil(stride))
}

/// Integrate weighted input spikes tick by tick. A neuron fires when its
/// potential reaches the threshold; the first feature to fire at a location
/// inhibits the rest of that location (or its neighbourhood, for lateral
/// inhibition) for the remainder of the buffer. Simultaneous crossings at a
/// location resolve to the lowest feature index, and locations are visited in
/// raster order within a tick.
pub fn conv_forward(input: &SpikeTensor, layer: &ConvConfig, weights: &Kernel, out_layer: u8) -> Result<ConvOutput> {
    if input.features != weights.in_features {
        return Err(Error::Dimension(format!(
            "layer `{}` expects {} input features, got {}",
            layer.name, weights.in_features, input.features
        )));
    }
    if weights.out_features != layer.features {
        return Err(Error::Dimension(format!(
            "layer `{}` has {} maps but weights for {}",
            layer.name, layer.features, weights.out_features
        )));
    }
    let stride = i32::from(layer.stride.max(1));
    let (out_w, out_h) = conv_out_dims(input.width, input.height, layer.stride.max(1));
    let features = usize::from(layer.features);
    let (kw, kh) = (i32::from(weights.width), i32::from(weights.height));
    let (pad_x, pad_y) = (kw / 2, kh / 2);
    let locations = usize::from(out_w) * usize::from(out_h);

    let mut potential = vec![0.0f32; locations * features];
    let mut inhibited = vec![false; locations];
    let mut stamp = vec![u32::MAX; locations];
    let mut touched: Vec<u32> = Vec::new();
    let mut out = Vec::new();
    let mut fired_at = Vec::new();

    let mut cursor = 0;
    for tick in 0..input.ticks {
        touched.clear();
        while cursor < input.spikes.len() && input.spikes[cursor].tick == tick {
            let s = input.spikes[cursor];
            cursor += 1;
            for ky in 0..kh {
                let num_y = i32::from(s.y) + pad_y - ky;
                if num_y < 0 || num_y % stride != 0 || num_y / stride >= i32::from(out_h) {
                    continue;
                }
                let oy = (num_y / stride) as usize;
                for kx in 0..kw {
                    let num_x = i32::from(s.x) + pad_x - kx;
                    if num_x < 0 || num_x % stride != 0 || num_x / stride >= i32::from(out_w) {
                        continue;
                    }
                    let loc = oy * usize::from(out_w) + (num_x / stride) as usize;
                    if inhibited[loc] {
                        continue;
                    }
                    let base = weights.index(0, s.feature, ky as u16, kx as u16);
                    let step = weights.map_len();
                    let pot = &mut potential[loc * features..(loc + 1) * features];
                    for (f, p) in pot.iter_mut().enumerate() {
                        *p += weights.weights[base + f * step];
                    }
                    if stamp[loc] != u32::from(tick) {
                        stamp[loc] = u32::from(tick);
                        touched.push(loc as u32);
                    }
                }
            }
        }
        touched.sort_unstable();
        for &loc in &touched {
            let loc = loc as usize;
            if inhibited[loc] {
                continue;
            }
            let pot = &potential[loc * features..(loc + 1) * features];
            let Some(f) = pot.iter().position(|&p| p >= layer.threshold) else {
                continue;
            };
            let (x, y) = ((loc % usize::from(out_w)) as u16, (loc / usize::from(out_w)) as u16);
            out.push(SpikeRecord::new(out_layer, x, y, f as u16, tick));
            fired_at.push(pot[f]);
            match layer.inhibition {
                Inhibition::PerLocation => inhibited[loc] = true,
                Inhibition::Lateral(r) => {
                    let r = usize::from(r);
                    let (x, y) = (usize::from(x), usize::from(y));
                    for ny in y.saturating_sub(r)..=(y + r).min(usize::from(out_h) - 1) {
                        for nx in x.saturating_sub(r)..=(x + r).min(usize::from(out_w) - 1) {
                            inhibited[ny * usize::from(out_w) + nx] = true;
                        }
                    }
                }
            }
            potential[loc * features..(loc + 1) * features].fill(0.0);
        }
    }

    Ok(ConvOutput {
        spikes: SpikeTensor {
            layer: out_layer,
            width: out_w,
            height: out_h,
            features: layer.features,
            ticks: input.ticks,
            spikes: out,
        },
        potentials: fired_at,
    })
}

/// Max pooling for spikes: per feature and window, the earliest input spike
/// is forwarded (ties go to the lowest `(y, x)`), and its location is kept as
/// the unpooling switch.
pub fn pool_forward(input: &SpikeTensor, size: u16) -> Result<PoolOutput> {
    if size == 0 {
        return Err(Error::Config("pool size must be positive".into()));
    }
    let (out_w, out_h) = (input.width.div_ceil(size), input.height.div_ceil(size));
    let mut taken = vec![false; usize::from(out_w) * usize::from(out_h) * usize::from(input.features)];
    let mut spikes = Vec::new();
    let mut switches = Vec::new();
    // canonical order is (tick, y, x, feature), so the first hit per window wins
    for s in &input.spikes {
        let (px, py) = (s.x / size, s.y / size);
        let i = (usize::from(py) * usize::from(out_w) + usize::from(px)) * usize::from(input.features)
            + usize::from(s.feature);
        if !taken[i] {
            taken[i] = true;
            spikes.push(SpikeRecord::new(input.layer, px, py, s.feature, s.tick));
            switches.push((s.x, s.y));
        }
    }
    // restore canonical order for the coarser grid
    let mut order: Vec<usize> = (0..spikes.len()).collect();
    order.sort_by_key(|&i| spikes[i]);
    let spikes_sorted = order.iter().map(|&i| spikes[i]).collect();
    let switches_sorted = order.iter().map(|&i| switches[i]).collect();
    Ok(PoolOutput {
        spikes: SpikeTensor {
            layer: input.layer,
            width: out_w,
            height: out_h,
            features: input.features,
            ticks: input.ticks,
            spikes: spikes_sorted,
        },
        switches: switches_sorted,
    })
}
