//! Transposed pass from classification spikes back to pixels, gated by the
//! encoder activity of the same buffer and unpooled through the encoder's
//! switch locations.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scnn::{EncoderActivity, LayerConfig, Network, SpikeRecord, PIXEL_LAYER};
use crate::{Error, Result};

/// One decoder spike and the index of its parent within the same tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeNode {
    pub record: SpikeRecord,
    pub parent: Option<u32>,
}

/// Everything decoded from one classification spike; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeTree {
    pub root: SpikeRecord,
    pub nodes: Vec<DecodeNode>,
    /// Decoder spikes emitted while building the tree, root included.
    pub emitted: usize,
}

impl DecodeTree {
    pub fn records(&self) -> impl Iterator<Item = &SpikeRecord> {
        self.nodes.iter().map(|n| &n.record)
    }

    pub fn pixels(&self) -> Vec<(u16, u16)> {
        let mut px: Vec<_> = self
            .records()
            .filter(|r| r.layer == PIXEL_LAYER)
            .map(|r| (r.x, r.y))
            .collect();
        px.sort_unstable_by_key(|&(x, y)| (y, x));
        px.dedup();
        px
    }
}

/// Parent-annotated decoder spikes for every classification spike of a buffer,
/// in canonical classification-spike order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodePath {
    pub width: u16,
    pub height: u16,
    pub trees: Vec<DecodeTree>,
}

impl DecodePath {
    pub fn tree_of(&self, source: &SpikeRecord) -> Option<&DecodeTree> {
        self.trees.iter().find(|t| t.root == *source)
    }

    pub fn record_count(&self) -> usize {
        self.trees.iter().map(|t| t.nodes.len()).sum()
    }
}

/// Per-class decoded pixels of one buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticMask {
    pub width: u16,
    pub height: u16,
    /// Row-major sorted pixels per class.
    pub classes: Vec<Vec<(u16, u16)>>,
}

impl SemanticMask {
    pub fn is_empty(&self) -> bool {
        self.classes.iter().all(Vec::is_empty)
    }

    pub fn pixel_count(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }

    /// Dense label image: 0 for background, `class + 1` for decoded pixels
    /// (the highest class wins where classes overlap).
    pub fn labels(&self) -> Vec<u8> {
        let mut img = vec![0u8; usize::from(self.width) * usize::from(self.height)];
        for (c, px) in self.classes.iter().enumerate() {
            for &(x, y) in px {
                img[usize::from(y) * usize::from(self.width) + usize::from(x)] = (c + 1).min(255) as u8;
            }
        }
        img
    }
}

/// Geometry shared by the tree builder and the dense mask pass.
struct Geometry<'a> {
    network: &'a Network,
    activity: &'a EncoderActivity,
}

/// Where a decoder step lands in the encoder: either a conv layer neuron to
/// expand further or a pixel.
#[derive(Clone, Copy)]
struct Target {
    stage: usize,
    x: u16,
    y: u16,
    feature: u16,
    tick: u8,
}

impl<'a> Geometry<'a> {
    fn new(network: &'a Network, activity: &'a EncoderActivity) -> Result<Self> {
        let expected = network.config.layers.len() + 1;
        if activity.stages.len() != expected {
            return Err(Error::MissingActivity);
        }
        let dims = network.stage_dims(activity.width, activity.height);
        for (stage, &(w, h)) in activity.stages.iter().zip(&dims) {
            if (stage.spikes.width, stage.spikes.height) != (w, h) {
                return Err(Error::MissingActivity);
            }
        }
        Ok(Self { network, activity })
    }

    /// Stage holding the output of the layer that produced `record`.
    fn stage_of(&self, record: &SpikeRecord) -> usize {
        if record.layer == PIXEL_LAYER {
            return 0;
        }
        let (li, _) = self
            .network
            .config
            .conv_layers()
            .nth(usize::from(record.layer) - 1)
            .expect("record layer is a conv layer");
        li + 1
    }

    /// Follow pooling switches from a neuron in `stage` down to the unpooled
    /// stage it was forwarded from.
    fn unpool(&self, mut stage: usize, mut x: u16, mut y: u16, feature: u16) -> (usize, u16, u16) {
        while self.activity.stages[stage].pooled {
            (x, y) = self.activity.stages[stage].switch_at(x, y, feature);
            stage -= 1;
        }
        (stage, x, y)
    }

    /// Visit every gated child of the conv neuron `(x, y, feature, tick)` in
    /// `stage` (the output of a conv layer).
    fn children(&self, stage: usize, x: u16, y: u16, feature: u16, tick: u8, mut visit: impl FnMut(Target)) {
        let li = stage - 1;
        let LayerConfig::Conv(conv) = &self.network.config.layers[li] else {
            unreachable!("decoder expands conv outputs only")
        };
        let kernel = self.network.kernels[li].as_ref().expect("conv layer has weights");
        let input = &self.activity.stages[li];
        let (kh, kw) = (i32::from(kernel.height), i32::from(kernel.width));
        let stride = i32::from(conv.stride.max(1));
        let (iw, ih) = (i32::from(input.spikes.width), i32::from(input.spikes.height));
        for c in 0..kernel.in_features {
            for ky in 0..kh {
                let iy = i32::from(y) * stride + ky - kh / 2;
                if iy < 0 || iy >= ih {
                    continue;
                }
                for kx in 0..kw {
                    let ix = i32::from(x) * stride + kx - kw / 2;
                    if ix < 0 || ix >= iw {
                        continue;
                    }
                    if kernel.get(feature, c, ky as u16, kx as u16) <= conv.decode_floor {
                        continue;
                    }
                    let (ix, iy) = (ix as u16, iy as u16);
                    let Some(t) = input.tick_at(ix, iy, c) else {
                        continue;
                    };
                    if t > tick {
                        continue;
                    }
                    let (s, ux, uy) = self.unpool(li, ix, iy, c);
                    visit(Target {
                        stage: s,
                        x: ux,
                        y: uy,
                        feature: c,
                        tick: t,
                    });
                }
            }
        }
    }

    fn layer_id(&self, stage: usize) -> u8 {
        if stage == 0 {
            PIXEL_LAYER
        } else {
            self.network.layer_id_of(stage - 1)
        }
    }

    fn tree(&self, root: SpikeRecord) -> DecodeTree {
        let mut nodes = vec![DecodeNode {
            record: root,
            parent: None,
        }];
        let mut seen: HashSet<(usize, u16, u16, u16)> = HashSet::new();
        seen.insert((self.stage_of(&root), root.x, root.y, root.feature));
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let r = nodes[i].record;
            let stage = self.stage_of(&r);
            if stage == 0 {
                continue;
            }
            self.children(stage, r.x, r.y, r.feature, r.tick, |t| {
                if seen.insert((t.stage, t.x, t.y, t.feature)) {
                    nodes.push(DecodeNode {
                        record: SpikeRecord::new(self.layer_id(t.stage), t.x, t.y, t.feature, t.tick),
                        parent: Some(i as u32),
                    });
                    queue.push_back(nodes.len() - 1);
                }
            });
        }
        DecodeTree {
            root,
            emitted: nodes.len(),
            nodes,
        }
    }
}

/// Decode every classification spike into its own provenance tree. Children
/// are reached through kernel taps above the layer's `decode_floor` whose
/// encoder neuron fired no later than the parent; the first parent to reach
/// a record keeps it.
pub fn record_provenance(network: &Network, activity: &EncoderActivity) -> Result<DecodePath> {
    let geo = Geometry::new(network, activity)?;
    let roots = &activity.classification().spikes;
    let trees = roots.par_iter().map(|&r| geo.tree(r)).collect();
    Ok(DecodePath {
        width: activity.width,
        height: activity.height,
        trees,
    })
}

/// Semantic segmentation: the same gated transposed pass, propagated as dense
/// per-layer active sets for all spikes of a class at once.
pub fn decode_semantic(network: &Network, activity: &EncoderActivity) -> Result<SemanticMask> {
    let geo = Geometry::new(network, activity)?;
    let class_stage = activity.stages.len() - 1;
    let classes = activity.stages[class_stage].spikes.features;
    let per_class = (0..classes)
        .into_par_iter()
        .map(|class| {
            let roots: Vec<_> = activity
                .classification()
                .spikes
                .iter()
                .filter(|s| s.feature == class)
                .collect();
            let mut active: Vec<Vec<bool>> = activity.stages.iter().map(|s| vec![false; s.tick_map.len()]).collect();
            for r in roots {
                let st = &activity.stages[class_stage].spikes;
                active[class_stage][st.index(r.x, r.y, r.feature)] = true;
            }
            // deeper stages only feed shallower ones, so one sweep suffices
            for stage in (1..activity.stages.len()).rev() {
                if activity.stages[stage].pooled {
                    continue;
                }
                let st = &activity.stages[stage];
                for s in &st.spikes.spikes {
                    if !active[stage][st.spikes.index(s.x, s.y, s.feature)] {
                        continue;
                    }
                    geo.children(stage, s.x, s.y, s.feature, s.tick, |t| {
                        let target = &activity.stages[t.stage].spikes;
                        active[t.stage][target.index(t.x, t.y, t.feature)] = true;
                    });
                }
            }
            let w = activity.width;
            active[0]
                .iter()
                .enumerate()
                .filter(|(_, &a)| a)
                .map(|(i, _)| ((i % usize::from(w)) as u16, (i / usize::from(w)) as u16))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SemanticMask {
        width: activity.width,
        height: activity.height,
        classes: per_class,
    })
}

/// Whether `child` lies inside the kernel footprint of `parent`, with the
/// child's coordinates mapped through any pooling in between.
pub fn within_footprint(network: &Network, parent: &SpikeRecord, child: &SpikeRecord) -> bool {
    let mut convs = network.config.conv_layers();
    let Some((li, conv)) = convs.nth(usize::from(parent.layer).wrapping_sub(1)) else {
        return false;
    };
    let child_stage = if child.layer == PIXEL_LAYER {
        0
    } else {
        match network.config.conv_layers().nth(usize::from(child.layer) - 1) {
            Some((ci, _)) => ci + 1,
            None => return false,
        }
    };
    if child_stage > li {
        return false;
    }
    let (mut x, mut y) = (child.x, child.y);
    for layer in &network.config.layers[child_stage..li] {
        match layer {
            LayerConfig::Pool(p) => (x, y) = (x / p.size, y / p.size),
            LayerConfig::Conv(_) => return false,
        }
    }
    let k = i32::from(conv.kernel);
    let s = i32::from(conv.stride.max(1));
    let (x0, y0) = (i32::from(parent.x) * s - k / 2, i32::from(parent.y) * s - k / 2);
    (x0..x0 + k).contains(&i32::from(x)) && (y0..y0 + k).contains(&i32::from(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scnn::{ConvConfig, Inhibition, Kernel, NetworkConfig, WeightInit};
    use crate::SpikeTensor;

    /// Pixel copy layer, then a class layer that sees its own location with
    /// weight 1 and the right-hand neighbour with weight 0.5.
    fn net(floor: f32) -> Network {
        let conv = |name: &str, kernel, threshold, inhibition| {
            LayerConfig::Conv(ConvConfig {
                name: String::from(name),
                features: 1,
                kernel,
                stride: 1,
                threshold,
                inhibition,
                weights: WeightInit::Learned,
                decode_floor: floor,
                stdp: None,
            })
        };
        let config = NetworkConfig {
            ticks: 10,
            edge: Default::default(),
            stdp: Default::default(),
            layers: vec![
                conv("c1", 1, 0.5, Inhibition::PerLocation),
                conv("cls", 3, 1.0, Inhibition::Lateral(5)),
            ],
        };
        let mut n = Network::new(config, 0).unwrap();
        let mut copy = Kernel::zeros(1, 1, 1, 1);
        copy.weights[0] = 1.0;
        let mut cls = Kernel::zeros(1, 1, 3, 3);
        cls.weights[4] = 1.0;
        cls.weights[5] = 0.5;
        n.kernels = vec![Some(copy), Some(cls)];
        n
    }

    fn activity(n: &Network, pixels: &[(u16, u16, u8)]) -> EncoderActivity {
        let spikes = pixels
            .iter()
            .map(|&(x, y, t)| SpikeRecord::new(0, x, y, 0, t))
            .collect();
        let t = SpikeTensor::from_spikes(0, 4, 3, 1, 10, spikes).unwrap();
        n.encode_tensor(t, 2).unwrap()
    }

    fn decoded(floor: f32, pixels: &[(u16, u16, u8)]) -> Vec<Vec<(u16, u16)>> {
        let n = net(floor);
        let path = record_provenance(&n, &activity(&n, pixels)).unwrap();
        path.trees.iter().map(DecodeTree::pixels).collect()
    }

    #[test]
    fn taps_at_or_below_floor_are_not_followed() {
        assert_eq!(decoded(0.5, &[(1, 1, 0), (2, 1, 0)]), vec![vec![(1, 1)]]);
        assert_eq!(decoded(0.25, &[(1, 1, 0), (2, 1, 0)]), vec![vec![(1, 1), (2, 1)]]);
    }

    #[test]
    fn children_that_fired_after_the_parent_are_skipped() {
        assert_eq!(decoded(0.25, &[(1, 1, 0), (2, 1, 4)]), vec![vec![(1, 1)]]);
    }

    #[test]
    fn semantic_mask_is_union_of_trees() {
        let n = net(0.25);
        let act = activity(&n, &[(0, 0, 0), (1, 2, 1), (3, 2, 2)]);
        let path = record_provenance(&n, &act).unwrap();
        let mut union: Vec<_> = path.trees.iter().flat_map(DecodeTree::pixels).collect();
        union.sort_unstable_by_key(|&(x, y)| (y, x));
        union.dedup();
        assert_eq!(decode_semantic(&n, &act).unwrap().classes, vec![union]);
    }

    #[test]
    fn mismatched_activity_is_rejected() {
        let n = net(0.25);
        let mut act = activity(&n, &[(1, 1, 0)]);
        act.stages.pop();
        assert!(matches!(record_provenance(&n, &act), Err(Error::MissingActivity)));
        assert!(matches!(decode_semantic(&n, &act), Err(Error::MissingActivity)));
    }

    #[test]
    fn footprint_follows_kernel_extent() {
        let n = net(0.25);
        let parent = SpikeRecord::new(2, 1, 1, 0, 3);
        assert!(within_footprint(&n, &parent, &SpikeRecord::new(1, 2, 2, 0, 0)));
        assert!(!within_footprint(&n, &parent, &SpikeRecord::new(1, 3, 1, 0, 0)));
        // a pixel is two conv layers below the class layer
        assert!(!within_footprint(&n, &parent, &SpikeRecord::new(0, 1, 1, 0, 0)));
    }
}
