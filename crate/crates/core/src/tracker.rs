//! Persistent identities across buffers by binary-Jaccard matching of class
//! objects against a registry of previously seen objects.

use serde::{Deserialize, Serialize};

use crate::smash::{similarity, AshMatrix, BoundingBox, ClassObject};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Visible,
    Occluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdatePolicy {
    /// Keep only the latest matched signature.
    #[default]
    Replace,
    /// OR every matched signature into the stored one.
    Accumulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// Buffers an unseen object is remembered for.
    pub retention_horizon: usize,
    pub update: UpdatePolicy,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            retention_horizon: 30,
            update: UpdatePolicy::Replace,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackedObject {
    pub id: u64,
    pub class: u16,
    pub ash: AshMatrix,
    pub bbox: BoundingBox,
    pub last_seen: usize,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Registry {
    pub config: TrackerConfig,
    pub objects: Vec<TrackedObject>,
    next_id: u64,
}

/// Outcome for one current object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Index into the current objects.
    pub object: usize,
    pub id: u64,
    /// Similarity to the registry entry it inherited, 0 for new ids.
    pub similarity: f64,
    pub new: bool,
}

/// One-to-one matching in descending score order; only positive scores
/// match. Equal scores resolve to the lower row, then the lower column.
pub fn assign_greedy(scores: &[Vec<f64>]) -> Vec<Option<usize>> {
    let mut cells: Vec<(usize, usize, f64)> = scores
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &s)| (i, j, s)))
        .filter(|&(_, _, s)| s > 0.0)
        .collect();
    cells.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let cols = scores.iter().map(Vec::len).max().unwrap_or(0);
    let mut row_of = vec![None; scores.len()];
    let mut taken = vec![false; cols];
    for (i, j, _) in cells {
        if row_of[i].is_none() && !taken[j] {
            row_of[i] = Some(j);
            taken[j] = true;
        }
    }
    row_of
}

impl Registry {
    pub fn new(config: TrackerConfig) -> Self {
        Self {
            config,
            objects: Vec::new(),
            next_id: 0,
        }
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    /// Match `current` objects seen in buffer `index`, update the registry
    /// and return one assignment per current object.
    pub fn match_objects(&mut self, current: &[ClassObject], index: usize) -> Result<Vec<Assignment>> {
        let horizon = self.config.retention_horizon;
        self.objects.retain(|o| index.saturating_sub(o.last_seen) <= horizon);
        let scores = current
            .iter()
            .map(|c| {
                self.objects
                    .iter()
                    .map(|o| {
                        if o.class == c.class {
                            similarity(&c.ash, &o.ash)
                        } else {
                            Ok(0.0)
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let matched = assign_greedy(&scores);
        let mut seen = vec![false; self.objects.len()];
        let mut out = Vec::with_capacity(current.len());
        for (i, (c, m)) in current.iter().zip(&matched).enumerate() {
            match *m {
                Some(j) => {
                    seen[j] = true;
                    let o = &mut self.objects[j];
                    match self.config.update {
                        UpdatePolicy::Replace => o.ash = c.ash.clone(),
                        UpdatePolicy::Accumulate => o.ash.union_with(&c.ash)?,
                    }
                    o.bbox = c.bbox;
                    o.last_seen = index;
                    o.status = Status::Visible;
                    out.push(Assignment {
                        object: i,
                        id: o.id,
                        similarity: scores[i][j],
                        new: false,
                    });
                }
                None => {
                    let id = self.next_id;
                    self.next_id += 1;
                    out.push(Assignment {
                        object: i,
                        id,
                        similarity: 0.0,
                        new: true,
                    });
                }
            }
        }
        for (o, s) in self.objects.iter_mut().zip(&seen) {
            if !s {
                o.status = Status::Occluded;
            }
        }
        for a in out.iter().filter(|a| a.new) {
            let c = &current[a.object];
            self.objects.push(TrackedObject {
                id: a.id,
                class: c.class,
                ash: c.ash.clone(),
                bbox: c.bbox,
                last_seen: index,
                status: Status::Visible,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn object(bits: &[(usize, usize)]) -> ClassObject {
        ClassObject {
            id: 0,
            class: 0,
            members: vec![0],
            ash: AshMatrix::from_support(4, 4, bits.iter().copied()),
            bbox: BoundingBox::new(0, 0, 3, 3),
        }
    }

    #[test]
    fn greedy_takes_the_best_cell_first() {
        assert_eq!(assign_greedy(&[vec![0.9, 0.1], vec![0.2, 0.8]]), vec![Some(0), Some(1)]);
        assert_eq!(
            assign_greedy(&[vec![0.9, 0.8], vec![0.95, 0.0]]),
            vec![Some(1), Some(0)]
        );
        assert_eq!(assign_greedy(&[vec![0.0]]), vec![None]);
        assert_eq!(assign_greedy(&[]), Vec::<Option<usize>>::new());
    }

    #[test]
    fn empty_registry_issues_fresh_ids() {
        let mut r = Registry::new(TrackerConfig::default());
        let a = r.match_objects(&[object(&[(0, 0)]), object(&[(1, 1)])], 0).unwrap();
        assert_eq!(
            a.iter().map(|a| (a.id, a.new)).collect::<Vec<_>>(),
            vec![(0, true), (1, true)]
        );
    }

    #[test]
    fn reappearing_object_keeps_its_id() {
        let mut r = Registry::new(TrackerConfig::default());
        let first = r.match_objects(&[object(&[(0, 0), (1, 1)])], 0).unwrap();
        for b in 1..5 {
            assert!(r.match_objects(&[], b).unwrap().is_empty());
            assert_eq!(r.objects[0].status, Status::Occluded);
        }
        let back = r.match_objects(&[object(&[(1, 1), (2, 2)])], 5).unwrap();
        assert_eq!(back[0].id, first[0].id);
        assert!(!back[0].new);
        assert_eq!(r.objects[0].status, Status::Visible);
    }

    #[test]
    fn horizon_evicts_old_objects() {
        let mut r = Registry::new(TrackerConfig {
            retention_horizon: 2,
            ..TrackerConfig::default()
        });
        r.match_objects(&[object(&[(0, 0)])], 0).unwrap();
        let again = r.match_objects(&[object(&[(0, 0)])], 3).unwrap();
        assert!(again[0].new);
        assert_eq!(again[0].id, 1);
    }

    #[test]
    fn zero_horizon_starts_fresh_every_buffer() {
        let mut r = Registry::new(TrackerConfig {
            retention_horizon: 0,
            ..TrackerConfig::default()
        });
        for b in 0..4 {
            let a = r.match_objects(&[object(&[(0, 0)])], b).unwrap();
            assert!(a[0].new);
            assert_eq!(a[0].id, b as u64);
        }
    }

    #[test]
    fn accumulate_ors_signatures() {
        let mut r = Registry::new(TrackerConfig {
            update: UpdatePolicy::Accumulate,
            ..TrackerConfig::default()
        });
        r.match_objects(&[object(&[(0, 0), (1, 1)])], 0).unwrap();
        r.match_objects(&[object(&[(1, 1), (2, 2)])], 1).unwrap();
        assert_eq!(r.objects[0].ash.support(), vec![(0, 0), (1, 1), (2, 2)]);
    }
}
