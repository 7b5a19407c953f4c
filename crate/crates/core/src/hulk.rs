//! Per-spike unravelling: one instance trace per classification spike.

use serde::{Deserialize, Serialize};

use crate::decoder::{DecodePath, DecodeTree};
use crate::scnn::{SpikeRecord, PIXEL_LAYER};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceTrace {
    pub id: usize,
    pub source: SpikeRecord,
    /// Records per layer id: `layers[0]` holds pixels, the last entry the
    /// classification spike.
    pub layers: Vec<Vec<SpikeRecord>>,
    /// Decoded footprint, row-major and unique.
    pub pixels: Vec<(u16, u16)>,
}

impl InstanceTrace {
    pub fn class(&self) -> u16 {
        self.source.feature
    }

    pub fn records(&self) -> impl Iterator<Item = &SpikeRecord> {
        self.layers.iter().flatten()
    }

    /// Records above the pixel layer.
    pub fn feature_records(&self) -> impl Iterator<Item = &SpikeRecord> {
        self.layers.iter().skip(1).flatten()
    }

    pub fn record_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }
}

fn from_tree(id: usize, tree: &DecodeTree) -> Result<InstanceTrace> {
    let depth = usize::from(tree.root.layer) + 1;
    let mut layers = vec![Vec::new(); depth];
    for r in tree.records() {
        layers[usize::from(r.layer)].push(*r);
    }
    for l in &mut layers {
        l.sort_unstable();
    }
    let pixels = tree.pixels();
    if pixels.is_empty() {
        return Err(Error::EmptyPixels);
    }
    debug_assert!(layers[usize::from(PIXEL_LAYER)].len() == pixels.len());
    Ok(InstanceTrace {
        id,
        source: tree.root,
        layers,
        pixels,
    })
}

/// The trace of `source`: every decoder record whose parent chain ends at it.
pub fn unravel(source: &SpikeRecord, path: &DecodePath) -> Result<InstanceTrace> {
    let (id, tree) = path
        .trees
        .iter()
        .enumerate()
        .find(|(_, t)| t.root == *source)
        .ok_or_else(|| Error::SourceNotInPath(source.to_string()))?;
    from_tree(id, tree)
}

/// Traces for every classification spike that decodes to at least one pixel,
/// numbered consecutively in canonical spike order.
pub fn unravel_all(path: &DecodePath) -> Vec<InstanceTrace> {
    path.trees
        .iter()
        .filter_map(|t| from_tree(0, t).ok())
        .enumerate()
        .map(|(id, mut t)| {
            t.id = id;
            t
        })
        .collect()
}
