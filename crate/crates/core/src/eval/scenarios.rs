//! Scene builders with ground truth for the synthetic experiments.
//!
//! Multi-stream scenes use a 3 x 3 grid of 40 px tiles with 16 px gaps: the
//! identities sit top-right, bottom-left and in the centre, distractor patches
//! top-left and bottom-right. Every tile holds one shape performing a small
//! closed saccade that repeats once per buffer window.

use serde::{Deserialize, Serialize};

use super::shapes::{Shape, TILE};
use crate::event_io::{
    buffer, composite, synthesize_stream, EventStream, Placement, SceneComposition, SequenceBuffer, SynthConfig,
    Template, Trajectory, Waypoint,
};
use crate::smash::BoundingBox;
use crate::{Error, Result};

/// Gap between grid tiles.
pub const GAP: u16 = 16;
/// Distance between neighbouring tile origins.
pub const STRIDE: u16 = TILE + GAP;
/// Side of the multi-stream canvas.
pub const GRID_CANVAS: u16 = 2 * STRIDE + TILE;
/// Side of the crossing canvas.
pub const CROSSING_CANVAS: u16 = 120;
pub const OCCLUSION_LEVELS: [u32; 4] = [0, 5, 25, 50];

/// How each object's own recording is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamParams {
    pub event_rate: f64,
    pub duration_us: u64,
    pub step_us: u64,
    pub pattern: SaccadePattern,
    /// Saccade extent in pixels.
    pub amplitude: f64,
    /// Simulation steps per saccade leg.
    pub leg_steps: usize,
    pub window_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaccadePattern {
    Triangle,
    #[default]
    Square,
}

impl SaccadePattern {
    fn legs(self) -> usize {
        match self {
            Self::Triangle => 3,
            Self::Square => 4,
        }
    }
}

impl Default for StreamParams {
    fn default() -> Self {
        Self {
            event_rate: 200_000.0,
            duration_us: 300_000,
            step_us: 500,
            pattern: SaccadePattern::Square,
            amplitude: 5.0,
            leg_steps: 5,
            window_us: 10_000,
        }
    }
}

/// One shape recorded on its own tile.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectStream {
    pub shape: Shape,
    pub template: Template,
    pub trajectory: Trajectory,
    pub stream: EventStream,
}

impl ObjectStream {
    pub fn new(shape: Shape, seed: u64, params: &StreamParams) -> Result<Self> {
        let template = shape.template();
        let margin = (i32::from(TILE) - i32::from(template.width) - params.amplitude.ceil() as i32) / 2;
        let steps = params.duration_us.div_ceil(params.step_us) as usize;
        // the seed also picks where in the saccade cycle the recording starts
        let period = params.pattern.legs() * params.leg_steps.max(1);
        let phase = (seed % period as u64) as usize;
        let origin = (margin, margin);
        let mut trajectory = match params.pattern {
            SaccadePattern::Triangle => Trajectory::saccade(origin, params.amplitude, params.leg_steps, steps + phase),
            SaccadePattern::Square => Trajectory::square(origin, params.amplitude, params.leg_steps, steps + phase),
        };
        trajectory.positions.drain(..phase);
        let stream = synthesize_stream(
            &template,
            &trajectory,
            &SynthConfig {
                width: TILE,
                height: TILE,
                event_rate: params.event_rate,
                duration_us: params.duration_us,
                step_us: params.step_us,
                seed,
            },
        )?;
        Ok(Self {
            shape,
            template,
            trajectory,
            stream,
        })
    }

    /// Shape offset inside the tile at `t` microseconds.
    fn offset_at(&self, t: u64, step_us: u64) -> (i32, i32) {
        let k = (t / step_us.max(1)) as usize;
        *self
            .trajectory
            .positions
            .get(k)
            .or(self.trajectory.positions.last())
            .expect("non-empty trajectory")
    }
}

/// A composed scene and what is in it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub composition: SceneComposition,
    pub objects: Vec<ObjectStream>,
    pub params: StreamParams,
    pub stream: EventStream,
}

impl Scenario {
    fn compose(
        name: String,
        composition: SceneComposition,
        objects: Vec<ObjectStream>,
        params: StreamParams,
    ) -> Result<Self> {
        let inputs: Vec<_> = objects.iter().map(|o| o.stream.clone()).collect();
        let stream = composite(&composition, &inputs)?;
        Ok(Self {
            name,
            composition,
            objects,
            params,
            stream,
        })
    }

    pub fn buffers(&self) -> Vec<SequenceBuffer> {
        let mut b = buffer(&self.stream, self.params.window_us);
        let want = self.params.duration_us.div_ceil(self.params.window_us) as usize;
        // trailing silent windows still count as inputs
        while b.len() < want {
            let start = b.len() as u64 * self.params.window_us;
            b.push(SequenceBuffer::empty(
                b.len(),
                self.stream.width,
                self.stream.height,
                start,
                self.params.window_us,
            ));
        }
        b
    }

    /// Indices of placements holding identities (not distractors).
    pub fn identity_placements(&self) -> Vec<usize> {
        self.composition
            .placements
            .iter()
            .enumerate()
            .filter(|(_, p)| self.objects[p.stream].shape.is_identity())
            .map(|(i, _)| i)
            .collect()
    }

    /// Canvas box of the shape of placement `index` at absolute time `t`.
    pub fn shape_box_at(&self, index: usize, t: u64) -> BoundingBox {
        let p = &self.composition.placements[index];
        let o = &self.objects[p.stream];
        let rel = t.saturating_sub(p.start_us);
        let (tx, ty) = p.origin_at(rel);
        let (sx, sy) = o.offset_at(rel, self.params.step_us);
        let (x, y) = ((tx + sx) as u16, (ty + sy) as u16);
        BoundingBox::new(x, y, x + o.template.width - 1, y + o.template.height - 1)
    }

    /// Union of the shape's boxes over one buffer window.
    pub fn shape_box_in(&self, index: usize, b: &SequenceBuffer) -> BoundingBox {
        let step = self.params.step_us.max(1);
        let mut bbox = self.shape_box_at(index, b.window_start);
        let mut t = b.window_start;
        while t < b.window_end() {
            bbox = bbox.hull(&self.shape_box_at(index, t));
            t += step;
        }
        bbox
    }

    /// Tile rectangle of placement `index` at time `t` as a box.
    pub fn tile_box_at(&self, index: usize, t: u64) -> BoundingBox {
        let p = &self.composition.placements[index];
        let (x, y) = p.origin_at(t.saturating_sub(p.start_us));
        BoundingBox::new(x as u16, y as u16, x as u16 + TILE - 1, y as u16 + TILE - 1)
    }
}

fn object_seed(seed: u64, slot: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(slot)
}

/// Three identities and two distractors on the grid, all unoccluded.
pub fn multistream(seed: u64, params: &StreamParams) -> Result<Scenario> {
    grid("multistream".into(), seed, params, (STRIDE as i32, STRIDE as i32), None)
}

/// The multi-stream layout with the centre tile shifted onto the
/// bottom-left one so that it covers `pct` percent of that tile.
pub fn occlusion(pct: u32, seed: u64, params: &StreamParams) -> Result<Scenario> {
    if !OCCLUSION_LEVELS.contains(&pct) {
        return Err(Error::Experiment(format!(
            "occlusion level {pct}% not in {OCCLUSION_LEVELS:?}"
        )));
    }
    if pct == 0 {
        return multistream(seed, params);
    }
    // overlap side is sqrt(pct) of the tile; the centre moves by `a` along
    // the anti-diagonal towards the bottom-left tile
    let side = (f64::from(TILE) * (f64::from(pct) / 100.0).sqrt()).round() as i32;
    let a = i32::from(GAP) + side;
    let centre = (i32::from(STRIDE) - a, i32::from(STRIDE) + a);
    grid(format!("occlusion_{pct}"), seed, params, centre, Some(1))
}

fn grid(name: String, seed: u64, params: &StreamParams, centre: (i32, i32), centre_z: Option<i32>) -> Result<Scenario> {
    let s = i32::from(STRIDE);
    let layout = [
        (Shape::IDENTITIES[0], (2 * s, 0)),
        (Shape::IDENTITIES[1], (0, 2 * s)),
        (Shape::IDENTITIES[2], centre),
        (Shape::Patch, (0, 0)),
        (Shape::Patch, (2 * s, 2 * s)),
    ];
    let mut objects = Vec::new();
    let mut comp = SceneComposition::new(GRID_CANVAS, GRID_CANVAS);
    for (slot, &(shape, (x, y))) in layout.iter().enumerate() {
        objects.push(ObjectStream::new(shape, object_seed(seed, slot as u64), params)?);
        let mut p = Placement::at(slot, x, y);
        if let Some(z) = centre_z {
            p = p.with_z(if slot == 2 { z } else { 0 });
        }
        comp = comp.place(p);
    }
    Scenario::compose(name, comp, objects, *params)
}

/// Two identities crossing diagonally; the first passes behind the second,
/// both dwell fully overlapped in the middle, then separate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrossingParams {
    /// Background noise in events per pixel per second.
    pub noise_rate: f64,
    pub approach_end_us: u64,
    pub dwell_end_us: u64,
    pub occluded: Shape,
    pub occluder: Shape,
    /// Tiles move in whole multiples of this many pixels, once per window.
    pub snap_px: u16,
}

impl Default for CrossingParams {
    fn default() -> Self {
        Self {
            noise_rate: 0.0,
            approach_end_us: 110_000,
            dwell_end_us: 190_000,
            occluded: Shape::Cross,
            occluder: Shape::Diamond,
            snap_px: 4,
        }
    }
}

pub fn crossing(seed: u64, params: &StreamParams, cross: &CrossingParams) -> Result<Scenario> {
    let far = f64::from(CROSSING_CANVAS - TILE);
    let mid = far / 2.0;
    let end = params.duration_us;
    let path = |from: (f64, f64), to: (f64, f64)| {
        vec![
            Waypoint {
                t_us: 0,
                dx: 0.0,
                dy: 0.0,
            },
            Waypoint {
                t_us: cross.approach_end_us,
                dx: mid - from.0,
                dy: mid - from.1,
            },
            Waypoint {
                t_us: cross.dwell_end_us,
                dx: mid - from.0,
                dy: mid - from.1,
            },
            Waypoint {
                t_us: end,
                dx: to.0 - from.0,
                dy: to.1 - from.1,
            },
        ]
    };
    let objects = vec![
        ObjectStream::new(cross.occluded, object_seed(seed, 0), params)?,
        ObjectStream::new(cross.occluder, object_seed(seed, 1), params)?,
    ];
    let mut comp = SceneComposition::new(CROSSING_CANVAS, CROSSING_CANVAS)
        .place(
            Placement::at(0, 0, 0)
                .with_z(0)
                .with_path(path((0.0, 0.0), (far, far)))
                .with_hold(params.window_us)
                .with_snap(cross.snap_px),
        )
        .place(
            Placement::at(1, far as i32, 0)
                .with_z(1)
                .with_path(path((far, 0.0), (0.0, far)))
                .with_hold(params.window_us)
                .with_snap(cross.snap_px),
        );
    comp.noise_rate = cross.noise_rate;
    comp.seed = object_seed(seed, 99);
    let name = if cross.noise_rate > 0.0 {
        "recovery_noise"
    } else {
        "recovery"
    };
    Scenario::compose(name.into(), comp, objects, *params)
}

/// One identity alone on its own tile.
pub fn single(shape: Shape, seed: u64, params: &StreamParams) -> Result<Scenario> {
    let objects = vec![ObjectStream::new(shape, seed, params)?];
    let comp = SceneComposition::new(TILE, TILE).place(Placement::at(0, 0, 0));
    Scenario::compose(format!("single_{shape}"), comp, objects, *params)
}

/// Training buffers: every identity alone, for each seed.
pub fn training_corpus(seeds: &[u64], params: &StreamParams) -> Result<Vec<SequenceBuffer>> {
    let mut out = Vec::new();
    for &seed in seeds {
        for shape in Shape::IDENTITIES {
            out.extend(single(shape, object_seed(seed, 1000), params)?.buffers());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::SHAPE_SIZE;

    #[test]
    fn grid_geometry() {
        assert_eq!(GRID_CANVAS, 152);
        let s = multistream(0, &StreamParams::default()).unwrap();
        assert_eq!(s.buffers().len(), 30);
        assert_eq!(s.identity_placements(), vec![0, 1, 2]);
    }

    #[test]
    fn occlusion_covers_requested_fraction() {
        for pct in [5u32, 25, 50] {
            let s = occlusion(pct, 0, &StreamParams::default()).unwrap();
            let target = s.tile_box_at(1, 0);
            let centre = s.tile_box_at(2, 0);
            let covered = target.intersection(&centre).unwrap().area() as f64 / target.area() as f64;
            assert!((covered * 100.0 - f64::from(pct)).abs() < 2.5, "{pct}% -> {covered}");
        }
        assert!(occlusion(10, 0, &StreamParams::default()).is_err());
        assert_eq!(
            occlusion(0, 3, &StreamParams::default()).unwrap().stream,
            multistream(3, &StreamParams::default()).unwrap().stream
        );
    }

    #[test]
    fn crossing_overlaps_fully_in_the_middle() {
        let s = crossing(0, &StreamParams::default(), &CrossingParams::default()).unwrap();
        assert_eq!(s.tile_box_at(0, 150_000), s.tile_box_at(1, 150_000));
        assert!(s.tile_box_at(0, 0).intersection(&s.tile_box_at(1, 0)).is_none());
        assert!(s
            .tile_box_at(0, 299_000)
            .intersection(&s.tile_box_at(1, 299_000))
            .is_none());
    }

    #[test]
    fn shape_boxes_stay_inside_tiles() {
        let s = multistream(1, &StreamParams::default()).unwrap();
        for b in s.buffers() {
            for i in 0..5 {
                assert!(s.tile_box_at(i, 0).contains(&s.shape_box_in(i, &b)));
            }
        }
        assert_eq!(s.shape_box_at(0, 0).width(), u64::from(SHAPE_SIZE));
    }
}
