use serde::{Deserialize, Serialize};

use super::{bbox_iou, similarity, AshMatrix, BoundingBox};
use crate::Result;

/// What grouping needs to know about one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub class: u16,
    pub ash: AshMatrix,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmashPairing {
    pub a: usize,
    pub b: usize,
    pub similarity: f64,
    pub iou: f64,
    pub score: f64,
}

pub fn smash_score(a: usize, b: usize, ia: &Instance, ib: &Instance) -> Result<SmashPairing> {
    let similarity = similarity(&ia.ash, &ib.ash)?;
    let iou = bbox_iou(&ia.bbox, &ib.bbox);
    Ok(SmashPairing {
        a,
        b,
        similarity,
        iou,
        score: similarity * iou,
    })
}

/// A group of instances within one buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassObject {
    pub id: usize,
    pub class: u16,
    /// Member instance indices, ascending.
    pub members: Vec<usize>,
    pub ash: AshMatrix,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    /// Best partner of every instance that has one with a positive score.
    pub pairs: Vec<SmashPairing>,
    pub objects: Vec<ClassObject>,
}

/// Highest-scoring partner of every instance among instances of the same
/// class; ties go to the lower index and a best score of 0 means no partner.
pub fn best_partners(instances: &[Instance]) -> Result<Vec<Option<SmashPairing>>> {
    let n = instances.len();
    let mut best: Vec<Option<SmashPairing>> = vec![None; n];
    for i in 0..n {
        for j in i + 1..n {
            if instances[i].class != instances[j].class {
                continue;
            }
            let p = smash_score(i, j, &instances[i], &instances[j])?;
            if p.score <= 0.0 {
                continue;
            }
            if best[i].is_none_or(|b| p.score > b.score) {
                best[i] = Some(p);
            }
            let q = SmashPairing { a: j, b: i, ..p };
            // j scans partners in ascending order too, so only strictly better
            // scores from later i replace it
            if best[j].is_none_or(|b| q.score > b.score) {
                best[j] = Some(q);
            }
        }
    }
    Ok(best)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // the smaller index is the representative
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Link every instance to its best partner and merge links transitively.
///
/// A mutual-best-only rule would split chains such as 1-3, 3-5, 5-3 into
/// smaller groups; merging every per-instance link keeps them together.
/// Objects are numbered by their smallest member.
pub fn group_instances(instances: &[Instance]) -> Result<Grouping> {
    let best = best_partners(instances)?;
    let mut uf = UnionFind((0..instances.len()).collect());
    for p in best.iter().flatten() {
        uf.union(p.a, p.b);
    }
    let mut objects: Vec<ClassObject> = Vec::new();
    let mut slot = vec![usize::MAX; instances.len()];
    for (i, inst) in instances.iter().enumerate() {
        let root = uf.find(i);
        if slot[root] == usize::MAX {
            slot[root] = objects.len();
            objects.push(ClassObject {
                id: objects.len(),
                class: inst.class,
                members: vec![i],
                ash: inst.ash.clone(),
                bbox: inst.bbox,
            });
        } else {
            let o = &mut objects[slot[root]];
            o.members.push(i);
            o.ash.union_with(&inst.ash)?;
            o.bbox = o.bbox.hull(&inst.bbox);
        }
    }
    Ok(Grouping {
        pairs: best.into_iter().flatten().collect(),
        objects,
    })
}
