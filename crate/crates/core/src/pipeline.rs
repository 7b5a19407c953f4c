//! Per-buffer segmentation (encode, decode, unravel, hash, group) and
//! sequence tracking on top of it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{decode_semantic, record_provenance, SemanticMask};
use crate::event_io::SequenceBuffer;
use crate::hulk::{unravel_all, InstanceTrace};
use crate::scnn::Network;
use crate::smash::{ash_hash, bbox_of, group_instances, AshLayout, BoundingBox, Grouping, Instance};
use crate::tracker::{Registry, Status, TrackerConfig};
use crate::Result;

/// Everything derived from one buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub index: usize,
    pub event_count: usize,
    pub class_spikes: usize,
    pub mask: SemanticMask,
    pub instances: Vec<InstanceTrace>,
    pub signatures: Vec<Instance>,
    pub grouping: Grouping,
}

impl Segmentation {
    pub fn object_count(&self) -> usize {
        self.grouping.objects.len()
    }
}

/// One object's identity in one buffer of a tracked sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackEntry {
    pub buffer: usize,
    pub id: u64,
    pub class: u16,
    pub bbox: BoundingBox,
    pub members: Vec<usize>,
    pub similarity: f64,
    pub new: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: usize,
    pub objects: Vec<TrackEntry>,
    /// Remembered ids that were not matched in this buffer.
    pub occluded: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub network: Network,
    pub layout: AshLayout,
}

impl Pipeline {
    pub fn new(network: Network) -> Self {
        let layout = AshLayout::of(&network);
        Self { network, layout }
    }

    pub fn segment(&self, buffer: &SequenceBuffer) -> Result<Segmentation> {
        let activity = self.network.encode(buffer)?;
        let mask = decode_semantic(&self.network, &activity)?;
        let path = record_provenance(&self.network, &activity)?;
        let instances = unravel_all(&path);
        let signatures = instances
            .par_iter()
            .map(|t| {
                Ok(Instance {
                    class: t.class(),
                    ash: ash_hash(t, &self.layout),
                    bbox: bbox_of(&t.pixels)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let grouping = group_instances(&signatures)?;
        Ok(Segmentation {
            index: buffer.index,
            event_count: buffer.events.len(),
            class_spikes: activity.classification().len(),
            mask,
            instances,
            signatures,
            grouping,
        })
    }

    /// Segment buffers in parallel; errors carry the failing buffer index.
    pub fn segment_all(&self, buffers: &[SequenceBuffer]) -> Result<Vec<Segmentation>> {
        buffers
            .par_iter()
            .map(|b| self.segment(b).map_err(|e| e.in_buffer(b.index)))
            .collect()
    }

    pub fn track_sequence(&self, buffers: &[SequenceBuffer], config: TrackerConfig) -> Result<Vec<Frame>> {
        track_segmented(&self.segment_all(buffers)?, config)
    }
}

/// Run the inter-buffer matcher over already segmented buffers, in order.
pub fn track_segmented(segs: &[Segmentation], config: TrackerConfig) -> Result<Vec<Frame>> {
    let mut registry = Registry::new(config);
    segs.iter()
        .map(|s| {
            let objects = &s.grouping.objects;
            let assignments = registry
                .match_objects(objects, s.index)
                .map_err(|e| e.in_buffer(s.index))?;
            let entries = assignments
                .iter()
                .map(|a| {
                    let o = &objects[a.object];
                    TrackEntry {
                        buffer: s.index,
                        id: a.id,
                        class: o.class,
                        bbox: o.bbox,
                        members: o.members.clone(),
                        similarity: a.similarity,
                        new: a.new,
                    }
                })
                .collect();
            let occluded = registry
                .objects
                .iter()
                .filter(|o| o.status == Status::Occluded)
                .map(|o| o.id)
                .collect();
            Ok(Frame {
                index: s.index,
                objects: entries,
                occluded,
            })
        })
        .collect()
}
