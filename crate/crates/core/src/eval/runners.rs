//! Experiment runners: detection counts, occlusion recovery and self-match.

use rayon::prelude::*;

use super::metrics::{percent, Aggregation, BufferOutcome, Failure, MetricsReport, RecoveryOutcome, TopK};
use super::scenarios::{crossing, multistream, occlusion, single, CrossingParams, Scenario, StreamParams};
use super::shapes::Shape;
use crate::pipeline::{track_segmented, Frame, Pipeline, Segmentation};
use crate::smash::{bbox_iou, similarity, AshMatrix, BoundingBox};
use crate::tracker::TrackerConfig;
use crate::{Error, Result};

/// Score every buffer of a scene: correct iff the number of reported
/// objects equals the number of identities in it.
pub fn detection_outcomes(scenario: &Scenario, segs: &[Segmentation], sequence: usize) -> Vec<BufferOutcome> {
    let ids = scenario.identity_placements();
    let buffers = scenario.buffers();
    segs.iter()
        .zip(&buffers)
        .map(|(s, b)| {
            let truth: Vec<BoundingBox> = ids.iter().map(|&i| scenario.shape_box_in(i, b)).collect();
            judge(s, &truth, sequence)
        })
        .collect()
}

/// Correct when the object count matches `truth`; otherwise the first of
/// missed, spurious or wrong grouping that explains the mismatch.
pub(crate) fn judge(s: &Segmentation, truth: &[BoundingBox], sequence: usize) -> BufferOutcome {
    let reported = s.object_count();
    let correct = reported == truth.len();
    let failure = (!correct).then(|| {
        let found = |t: &BoundingBox| s.signatures.iter().any(|i| i.bbox.intersection(t).is_some());
        if !truth.iter().all(found) {
            Failure::MissedClassification
        } else if s
            .grouping
            .objects
            .iter()
            .any(|o| truth.iter().all(|t| o.bbox.intersection(t).is_none()))
        {
            Failure::Spurious
        } else {
            Failure::WrongGrouping
        }
    });
    BufferOutcome {
        sequence,
        buffer: s.index,
        expected: truth.len(),
        reported,
        correct,
        failure,
    }
}

fn run_detection(
    pipeline: &Pipeline,
    name: String,
    seeds: &[u64],
    aggregation: Aggregation,
    build: impl Fn(u64) -> Result<Scenario> + Sync,
) -> Result<MetricsReport> {
    let per_seed = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            let sc = build(seed)?;
            let segs = pipeline.segment_all(&sc.buffers())?;
            Ok(detection_outcomes(&sc, &segs, i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::from_detection(name, per_seed.concat(), aggregation))
}

/// Three identities plus two distractors; one sequence per seed.
pub fn run_multistream(
    pipeline: &Pipeline,
    seeds: &[u64],
    params: &StreamParams,
    aggregation: Aggregation,
) -> Result<MetricsReport> {
    run_detection(pipeline, "multistream".into(), seeds, aggregation, |s| {
        multistream(s, params)
    })
}

pub fn run_occlusion(
    pipeline: &Pipeline,
    pct: u32,
    seeds: &[u64],
    params: &StreamParams,
    aggregation: Aggregation,
) -> Result<MetricsReport> {
    occlusion(pct, 0, params)?;
    run_detection(pipeline, format!("occlusion_{pct}"), seeds, aggregation, |s| {
        occlusion(pct, s, params)
    })
}

/// Id of the tracked object that best overlaps `truth`, skipping objects
/// that overlap one of the `others` more.
fn id_at(frame: &Frame, truth: &BoundingBox, others: &[BoundingBox]) -> Option<u64> {
    frame
        .objects
        .iter()
        .map(|o| (bbox_iou(&o.bbox, truth), o))
        .filter(|&(iou, o)| iou > 0.0 && others.iter().all(|g| bbox_iou(&o.bbox, g) <= iou))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.id.cmp(&a.1.id)))
        .map(|(_, o)| o.id)
}

/// Track a crossing scene and check that the hidden object gets its old id back.
pub fn recovery_outcome(
    pipeline: &Pipeline,
    scenario: &Scenario,
    seed: u64,
    tracker: TrackerConfig,
) -> Result<RecoveryOutcome> {
    let buffers = scenario.buffers();
    let segs = pipeline.segment_all(&buffers)?;
    let frames = track_segmented(&segs, tracker)?;
    let overlapping: Vec<bool> = buffers
        .iter()
        .map(|b| {
            let t_end = b.window_end() - 1;
            let a = scenario
                .tile_box_at(0, b.window_start)
                .hull(&scenario.tile_box_at(0, t_end));
            let c = scenario
                .tile_box_at(1, b.window_start)
                .hull(&scenario.tile_box_at(1, t_end));
            a.intersection(&c).is_some()
        })
        .collect();
    let hidden: Vec<bool> = buffers
        .iter()
        .map(|b| {
            let t_end = b.window_end() - 1;
            let tile = scenario.tile_box_at(1, b.window_start);
            tile == scenario.tile_box_at(1, t_end) && tile.contains(&scenario.shape_box_in(0, b))
        })
        .collect();
    let hidden_id = |i: usize| {
        let b = &buffers[i];
        id_at(&frames[i], &scenario.shape_box_in(0, b), &[scenario.shape_box_in(1, b)])
    };
    let first = overlapping.iter().position(|&o| o);
    let last = overlapping.iter().rposition(|&o| o);
    let (before, after) = match (first, last) {
        (Some(f), Some(l)) => {
            let before = (0..f).rev().find_map(|i| hidden_id(i).map(|id| (i, id)));
            let after = (l + 1..frames.len()).find_map(|i| hidden_id(i).map(|id| (i, id)));
            (before, after)
        }
        _ => {
            // never overlapping: identity is trivially kept
            let id = (0..frames.len()).find_map(|i| hidden_id(i).map(|id| (i, id)));
            (id, id)
        }
    };
    let recovered = matches!((before, after), (Some((_, a)), Some((_, b))) if a == b);
    let max_objects_while_hidden = frames
        .iter()
        .zip(&hidden)
        .filter(|(_, &h)| h)
        .map(|(f, _)| f.objects.len())
        .max()
        .unwrap_or(0);
    Ok(RecoveryOutcome {
        seed,
        before,
        after,
        recovered,
        max_objects_while_hidden,
    })
}

pub fn run_recovery(
    pipeline: &Pipeline,
    seeds: &[u64],
    params: &StreamParams,
    cross: &CrossingParams,
    tracker: TrackerConfig,
) -> Result<MetricsReport> {
    let recoveries = seeds
        .par_iter()
        .map(|&seed| recovery_outcome(pipeline, &crossing(seed, params, cross)?, seed, tracker))
        .collect::<Result<Vec<_>>>()?;
    let ok = recoveries.iter().filter(|r| r.recovered).count();
    Ok(MetricsReport {
        scenario: if cross.noise_rate > 0.0 {
            "recovery_noise"
        } else {
            "recovery"
        }
        .into(),
        recovery_rate: Some(percent(ok, recoveries.len())),
        recoveries,
        ..MetricsReport::default()
    })
}

/// One object signature in a self-match test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub identity: Shape,
    /// Identifies the source buffer: entries with equal `source` are never
    /// candidates for each other unless the query itself is included.
    pub source: (usize, usize),
    pub ash: AshMatrix,
}

/// Object signatures of every identity, recorded alone, for one seed.
pub fn self_match_set(pipeline: &Pipeline, seed: u64, params: &StreamParams) -> Result<Vec<Signature>> {
    let mut out = Vec::new();
    for (si, shape) in Shape::IDENTITIES.into_iter().enumerate() {
        let sc = single(shape, seed.wrapping_mul(31).wrapping_add(si as u64), params)?;
        for seg in pipeline.segment_all(&sc.buffers())? {
            for o in &seg.grouping.objects {
                out.push(Signature {
                    identity: shape,
                    source: (si, seg.index),
                    ash: o.ash.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Fraction of queries (in %) whose `k` most similar candidates contain the
/// same identity. Without `include_query`, candidates from the query's own
/// buffer are skipped; with it, the query ranks first among equal scores.
pub fn top_k_rate(set: &[Signature], k: usize, include_query: bool) -> Result<f64> {
    let mut hits = 0;
    for (qi, q) in set.iter().enumerate() {
        let mut cands: Vec<(f64, bool, usize)> = Vec::new();
        for (ci, c) in set.iter().enumerate() {
            let own = ci == qi;
            if !(own && include_query) && c.source == q.source {
                continue;
            }
            cands.push((similarity(&q.ash, &c.ash)?, !own, ci));
        }
        if cands.len() < k {
            return Err(Error::Experiment(format!(
                "query {qi} has {} candidates, fewer than k = {k}",
                cands.len()
            )));
        }
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        if cands[..k].iter().any(|&(_, _, ci)| set[ci].identity == q.identity) {
            hits += 1;
        }
    }
    Ok(percent(hits, set.len()))
}

/// Top-k self-match rates pooled over the queries of all seeds.
pub fn run_self_match(
    pipeline: &Pipeline,
    seeds: &[u64],
    params: &StreamParams,
    ks: &[usize],
    include_query: bool,
) -> Result<MetricsReport> {
    let sets = seeds
        .par_iter()
        .map(|&s| self_match_set(pipeline, s, params))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = sets.iter().map(Vec::len).sum();
    let self_match = ks
        .iter()
        .map(|&k| {
            let mut hits = 0.0;
            for set in &sets {
                hits += top_k_rate(set, k, include_query)? * set.len() as f64 / 100.0;
            }
            Ok(TopK {
                k,
                rate: if total == 0 { 0.0 } else { 100.0 * hits / total as f64 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport {
        scenario: if include_query {
            "self_match_with_query"
        } else {
            "self_match"
        }
        .into(),
        self_match,
        ..MetricsReport::default()
    })
}
