//! Featural-temporal hashing of instance traces and SMASH grouping.

mod ash;
mod bbox;
mod grouping;

pub use ash::{ash_hash, compression_ratio, similarity, AshLayout, AshMatrix};
pub use bbox::{bbox_iou, bbox_of, BoundingBox};
pub use grouping::{best_partners, group_instances, smash_score, ClassObject, Grouping, Instance, SmashPairing};
