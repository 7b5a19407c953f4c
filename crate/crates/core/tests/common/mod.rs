//! Brute-force reference implementations and random generators shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hulksmash::decoder::within_footprint;
use hulksmash::scnn::{
    ConvConfig, EncoderActivity, Inhibition, Kernel, LayerConfig, NetworkConfig, PoolConfig, WeightInit,
};
use hulksmash::smash::{AshMatrix, BoundingBox, Instance};
use hulksmash::{Network, SpikeRecord, SpikeTensor};

pub const ASH_ROWS: usize = 41;
pub const TICKS: usize = 10;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weights that are multiples of 1/16, so every partial sum is exact in f32
/// whatever the summation order.
pub fn dyadic(rng: &mut impl Rng) -> f32 {
    f32::from(rng.random_range(0u8..=16)) / 16.0
}

pub fn random_kernel(rng: &mut impl Rng, out: u16, input: u16, k: u16) -> Kernel {
    let mut kernel = Kernel::zeros(out, input, k, k);
    for w in &mut kernel.weights {
        *w = dyadic(rng);
    }
    kernel
}

/// Random spikes with at most one spike per neuron.
pub fn random_tensor(rng: &mut impl Rng, layer: u8, w: u16, h: u16, f: u16, ticks: u8, density: f64) -> SpikeTensor {
    let mut spikes = Vec::new();
    for y in 0..h {
        for x in 0..w {
            for c in 0..f {
                if rng.random_bool(density) {
                    spikes.push(SpikeRecord::new(layer, x, y, c, rng.random_range(0..ticks)));
                }
            }
        }
    }
    SpikeTensor::from_spikes(layer, w, h, f, ticks, spikes).expect("in range")
}

/// Integrate-and-fire evaluated densely: at every tick, every location's
/// potential is recomputed from scratch as the weighted count of input spikes
/// so far, and locations are tested in raster order.
pub fn dense_conv(input: &SpikeTensor, layer: &ConvConfig, w: &Kernel, out_layer: u8) -> Vec<SpikeRecord> {
    let stride = usize::from(layer.stride.max(1));
    let (iw, ih) = (usize::from(input.width), usize::from(input.height));
    let (ow, oh) = (iw.div_ceil(stride), ih.div_ceil(stride));
    let (kw, kh) = (usize::from(w.width), usize::from(w.height));
    let nf = usize::from(input.features);
    let mut inhibited = vec![false; ow * oh];
    let mut out = Vec::new();
    for tick in 0..input.ticks {
        let mut count = vec![0u32; iw * ih * nf];
        for s in input.spikes.iter().filter(|s| s.tick <= tick) {
            count[(usize::from(s.y) * iw + usize::from(s.x)) * nf + usize::from(s.feature)] += 1;
        }
        for oy in 0..oh {
            for ox in 0..ow {
                if inhibited[oy * ow + ox] {
                    continue;
                }
                let mut fired = None;
                for f in 0..layer.features {
                    let mut p = 0.0f32;
                    for c in 0..input.features {
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let ix = (ox * stride + kx) as isize - (kw / 2) as isize;
                                let iy = (oy * stride + ky) as isize - (kh / 2) as isize;
                                if ix < 0 || iy < 0 || ix as usize >= iw || iy as usize >= ih {
                                    continue;
                                }
                                let n = count[(iy as usize * iw + ix as usize) * nf + usize::from(c)];
                                p += n as f32 * w.get(f, c, ky as u16, kx as u16);
                            }
                        }
                    }
                    if p >= layer.threshold {
                        fired = Some(f);
                        break;
                    }
                }
                let Some(f) = fired else { continue };
                out.push(SpikeRecord::new(out_layer, ox as u16, oy as u16, f, tick));
                let r = match layer.inhibition {
                    Inhibition::PerLocation => 0,
                    Inhibition::Lateral(r) => usize::from(r),
                };
                for ny in oy.saturating_sub(r)..=(oy + r).min(oh - 1) {
                    for nx in ox.saturating_sub(r)..=(ox + r).min(ow - 1) {
                        inhibited[ny * ow + nx] = true;
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// Set Jaccard over explicit `(row, tick)` supports.
pub fn set_jaccard(a: &BTreeSet<(usize, usize)>, b: &BTreeSet<(usize, usize)>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

pub fn random_support(rng: &mut impl Rng, density: f64) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    for r in 0..ASH_ROWS {
        for c in 0..TICKS {
            if rng.random_bool(density) {
                s.insert((r, c));
            }
        }
    }
    s
}

pub fn matrix_of(support: &BTreeSet<(usize, usize)>) -> AshMatrix {
    AshMatrix::from_support(ASH_ROWS, TICKS, support.iter().copied())
}

pub fn random_box(rng: &mut impl Rng, extent: u16) -> BoundingBox {
    let x0 = rng.random_range(0..extent);
    let y0 = rng.random_range(0..extent);
    let x1 = rng.random_range(x0..extent);
    let y1 = rng.random_range(y0..extent);
    BoundingBox::new(x0, y0, x1, y1)
}

/// Intersection over union from pixel-inclusive coordinates.
pub fn box_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = i64::from(a.x_max.min(b.x_max)) - i64::from(a.x_min.max(b.x_min)) + 1;
    let iy = i64::from(a.y_max.min(b.y_max)) - i64::from(a.y_min.max(b.y_min)) + 1;
    if ix <= 0 || iy <= 0 {
        return 0.0;
    }
    let area = |b: &BoundingBox| (i64::from(b.x_max - b.x_min) + 1) * (i64::from(b.y_max - b.y_min) + 1);
    let inter = ix * iy;
    inter as f64 / (area(a) + area(b) - inter) as f64
}

pub struct RandomInstance {
    pub class: u16,
    pub support: BTreeSet<(usize, usize)>,
    pub bbox: BoundingBox,
}

impl RandomInstance {
    pub fn instance(&self) -> Instance {
        Instance {
            class: self.class,
            ash: matrix_of(&self.support),
            bbox: self.bbox,
        }
    }
}

pub fn random_instances(rng: &mut impl Rng, max: usize) -> Vec<RandomInstance> {
    let n = rng.random_range(0..=max);
    let classes = rng.random_range(1..=2u16);
    (0..n)
        .map(|_| RandomInstance {
            class: rng.random_range(0..classes),
            support: {
                let d = rng.random_range(0.02..0.3);
                random_support(rng, d)
            },
            bbox: random_box(rng, 48),
        })
        .collect()
}

/// Groups from the full score matrix: each instance links to its highest
/// positive same-class score (lowest index on ties), and groups are the
/// connected components of those links found by transitive closure.
/// Components are listed by smallest member with members ascending.
pub fn brute_force_groups(items: &[RandomInstance]) -> Vec<Vec<usize>> {
    let n = items.len();
    let mut score = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && items[i].class == items[j].class {
                score[i][j] =
                    set_jaccard(&items[i].support, &items[j].support) * box_iou(&items[i].bbox, &items[j].bbox);
            }
        }
    }
    let mut linked = vec![vec![false; n]; n];
    for i in 0..n {
        linked[i][i] = true;
        let mut best: Option<usize> = None;
        for j in 0..n {
            if score[i][j] > 0.0 && best.is_none_or(|b| score[i][j] > score[i][b]) {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            linked[i][j] = true;
            linked[j][i] = true;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if linked[i][k] && linked[k][j] {
                    linked[i][j] = true;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if !groups.iter().any(|g| g.contains(&i)) {
            groups.push((0..n).filter(|&j| linked[i][j]).collect());
        }
    }
    groups
}

/// Edge conv, pool, learned conv, optional pool and class conv with random
/// dyadic weights and thresholds.
pub fn random_network(rng: &mut impl Rng) -> Network {
    fn conv(rng: &mut impl Rng, name: &str, features: u16, scale: f32, inhibition: Inhibition) -> LayerConfig {
        LayerConfig::Conv(ConvConfig {
            name: name.into(),
            features,
            kernel: 3,
            stride: 1,
            threshold: 0.5 + scale * dyadic(rng),
            inhibition,
            weights: WeightInit::Learned,
            decode_floor: dyadic(rng).min(0.75),
            stdp: None,
        })
    }
    let mut layers = Vec::new();
    let f1 = rng.random_range(1..=3u16);
    layers.push(conv(rng, "c1", f1, 1.0, Inhibition::PerLocation));
    layers.push(LayerConfig::Pool(PoolConfig { size: 2 }));
    let f2 = rng.random_range(1..=4u16);
    layers.push(conv(rng, "c2", f2, 2.0, Inhibition::PerLocation));
    if rng.random_bool(0.5) {
        layers.push(LayerConfig::Pool(PoolConfig { size: 2 }));
    }
    let inhibition = if rng.random_bool(0.5) {
        Inhibition::Lateral(rng.random_range(0..3))
    } else {
        Inhibition::PerLocation
    };
    let classes = rng.random_range(1..=2);
    layers.push(conv(rng, "cls", classes, 2.0, inhibition));
    let config = NetworkConfig {
        ticks: 10,
        edge: Default::default(),
        stdp: Default::default(),
        layers,
    };
    let mut net = Network::new(config, rng.random()).expect("valid random config");
    let inputs = net.config.input_features();
    for (i, layer) in net.config.layers.clone().iter().enumerate() {
        if let LayerConfig::Conv(c) = layer {
            net.kernels[i] = Some(random_kernel(rng, c.features, inputs[i], c.kernel));
        }
    }
    net
}

pub fn random_activity(rng: &mut impl Rng, net: &Network) -> EncoderActivity {
    let (w, h) = (rng.random_range(4..=16u16), rng.random_range(4..=16u16));
    let density = rng.random_range(0.1..0.6);
    let pixels = random_tensor(rng, 0, w, h, 1, net.config.ticks, density);
    net.encode_tensor(pixels, net.config.layers.len()).expect("encodes")
}

/// Pixels reachable from the classification spikes of `class`, by a dense
/// downward sweep over whole stages: a neuron is active when an active
/// neuron above it reaches it through a tap above the layer's decode floor
/// and it fired no later than that neuron; pooled neurons hand activity to
/// their switch location.
pub fn reachable_pixels(net: &Network, activity: &EncoderActivity, class: u16) -> BTreeSet<(u16, u16)> {
    let stages = &activity.stages;
    let last = stages.len() - 1;
    let mut active: Vec<BTreeSet<(u16, u16, u16)>> = vec![BTreeSet::new(); stages.len()];
    for s in stages[last].spikes.spikes.iter().filter(|s| s.feature == class) {
        active[last].insert((s.x, s.y, s.feature));
    }
    for stage in (1..=last).rev() {
        let li = stage - 1;
        let current: Vec<_> = active[stage].iter().copied().collect();
        match &net.config.layers[li] {
            LayerConfig::Pool(_) => {
                for (x, y, f) in current {
                    let (sx, sy) = stages[stage].switch_at(x, y, f);
                    active[li].insert((sx, sy, f));
                }
            }
            LayerConfig::Conv(c) => {
                let k = net.kernels[li].as_ref().unwrap();
                let stride = i32::from(c.stride.max(1));
                let input = &stages[li];
                let (iw, ih) = (i32::from(input.spikes.width), i32::from(input.spikes.height));
                for (x, y, f) in current {
                    let tp = stages[stage].tick_at(x, y, f).expect("active neurons fired");
                    for ch in 0..k.in_features {
                        for ky in 0..k.height {
                            for kx in 0..k.width {
                                let ix = i32::from(x) * stride + i32::from(kx) - i32::from(k.width / 2);
                                let iy = i32::from(y) * stride + i32::from(ky) - i32::from(k.height / 2);
                                if ix < 0 || iy < 0 || ix >= iw || iy >= ih || k.get(f, ch, ky, kx) <= c.decode_floor {
                                    continue;
                                }
                                if input.tick_at(ix as u16, iy as u16, ch).is_some_and(|t| t <= tp) {
                                    active[li].insert((ix as u16, iy as u16, ch));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    active[0].iter().map(|&(x, y, _)| (x, y)).collect()
}

/// Every non-root node of a decode tree lies inside its parent's footprint
/// and fired no later than it.
pub fn footprints_hold(net: &Network, activity: &EncoderActivity) -> bool {
    let paths = hulksmash::record_provenance(net, activity).expect("decodes");
    paths.trees.iter().all(|t| {
        t.nodes.iter().all(|n| match n.parent {
            None => true,
            Some(p) => {
                let parent = &t.nodes[p as usize].record;
                n.record.tick <= parent.tick && within_footprint(net, parent, &n.record)
            }
        })
    })
}
