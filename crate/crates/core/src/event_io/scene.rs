//! Multi-stream scene compositing with z-ordered occlusion.
//!
//! Each placed stream occupies a rectangle the size of its sensor. Where a
//! higher placement's rectangle covers an event of a lower one at the same
//! instant, the lower event is dropped: placed recordings are opaque tiles.

use serde::{Deserialize, Serialize};

use super::{inject_noise_over, Event, EventStream};
use crate::{Error, Result};

/// Offset relative to the placement origin, reached at `t_us` after its start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t_us: u64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    /// Index into the input list handed to [`composite`].
    pub stream: usize,
    pub x: i32,
    pub y: i32,
    #[serde(default)]
    pub start_us: u64,
    /// Higher is nearer the viewer. Required whenever placements overlap.
    #[serde(default)]
    pub z: Option<i32>,
    /// Optional piecewise-linear motion of the whole tile.
    #[serde(default)]
    pub path: Vec<Waypoint>,
    /// When positive, the tile only moves on multiples of this many
    /// microseconds and holds still in between.
    #[serde(default)]
    pub hold_us: u64,
    /// When positive, path offsets are rounded to multiples of this many pixels.
    #[serde(default)]
    pub snap_px: u16,
}

impl Placement {
    pub fn at(stream: usize, x: i32, y: i32) -> Self {
        Self {
            stream,
            x,
            y,
            start_us: 0,
            z: None,
            path: Vec::new(),
            hold_us: 0,
            snap_px: 0,
        }
    }

    pub fn with_z(mut self, z: i32) -> Self {
        self.z = Some(z);
        self
    }

    pub fn with_path(mut self, path: Vec<Waypoint>) -> Self {
        self.path = path;
        self
    }

    pub fn with_hold(mut self, hold_us: u64) -> Self {
        self.hold_us = hold_us;
        self
    }

    pub fn with_snap(mut self, snap_px: u16) -> Self {
        self.snap_px = snap_px;
        self
    }

    /// Tile origin `rel_t` microseconds after the placement starts.
    pub fn origin_at(&self, rel_t: u64) -> (i32, i32) {
        let rel_t = if self.hold_us > 0 {
            rel_t - rel_t % self.hold_us
        } else {
            rel_t
        };
        let (dx, dy) = match self.path.as_slice() {
            [] => (0.0, 0.0),
            [only] => (only.dx, only.dy),
            path => {
                let next = path.iter().position(|w| w.t_us > rel_t);
                match next {
                    None => {
                        let w = path[path.len() - 1];
                        (w.dx, w.dy)
                    }
                    Some(0) => (path[0].dx, path[0].dy),
                    Some(i) => {
                        let (a, b) = (path[i - 1], path[i]);
                        let f = (rel_t - a.t_us) as f64 / (b.t_us - a.t_us) as f64;
                        (a.dx + f * (b.dx - a.dx), a.dy + f * (b.dy - a.dy))
                    }
                }
            }
        };
        let snap = f64::from(self.snap_px.max(1));
        let round = |d: f64| ((d / snap).round() * snap) as i32;
        (self.x + round(dx), self.y + round(dy))
    }

    fn origins(&self) -> Vec<(i32, i32)> {
        let mut v = vec![self.origin_at(0)];
        v.extend(self.path.iter().map(|w| self.origin_at(w.t_us)));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneComposition {
    pub width: u16,
    pub height: u16,
    pub placements: Vec<Placement>,
    /// Uniform background noise in events per pixel per second.
    #[serde(default)]
    pub noise_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy)]
struct Tile {
    z: i32,
    start: u64,
    end: Option<u64>,
    w: i32,
    h: i32,
}

impl SceneComposition {
    pub fn new(width: u16, height: u16) -> Self {
        Self {
            width,
            height,
            placements: Vec::new(),
            noise_rate: 0.0,
            seed: 0,
        }
    }

    pub fn place(mut self, p: Placement) -> Self {
        self.placements.push(p);
        self
    }

    /// Check geometry and z-order against concrete inputs.
    pub fn validate(&self, inputs: &[EventStream]) -> Result<()> {
        if self.noise_rate < 0.0 || !self.noise_rate.is_finite() {
            return Err(Error::Config(format!("noise_rate {} must be >= 0", self.noise_rate)));
        }
        for (i, p) in self.placements.iter().enumerate() {
            let s = inputs
                .get(p.stream)
                .ok_or_else(|| Error::Config(format!("placement {i} references missing stream {}", p.stream)))?;
            if p.path.windows(2).any(|w| w[1].t_us <= w[0].t_us) {
                return Err(Error::Config(format!("placement {i}: waypoint times must increase")));
            }
            for (ox, oy) in p.origins() {
                if ox < 0
                    || oy < 0
                    || ox + i32::from(s.width) > i32::from(self.width)
                    || oy + i32::from(s.height) > i32::from(self.height)
                {
                    return Err(Error::Geometry(format!(
                        "placement {i}: {}x{} stream at ({ox}, {oy}) leaves the {}x{} canvas",
                        s.width, s.height, self.width, self.height
                    )));
                }
            }
        }
        for i in 0..self.placements.len() {
            for j in i + 1..self.placements.len() {
                let (a, b) = (&self.placements[i], &self.placements[j]);
                if !may_overlap(a, &inputs[a.stream], b, &inputs[b.stream]) {
                    continue;
                }
                match (a.z, b.z) {
                    (Some(za), Some(zb)) if za != zb => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "placements {i} and {j} overlap but have no distinct z-order"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}

fn swept(p: &Placement, s: &EventStream) -> (i32, i32, i32, i32) {
    let o = p.origins();
    let x0 = o.iter().map(|v| v.0).min().unwrap_or(p.x);
    let y0 = o.iter().map(|v| v.1).min().unwrap_or(p.y);
    let x1 = o.iter().map(|v| v.0).max().unwrap_or(p.x) + i32::from(s.width);
    let y1 = o.iter().map(|v| v.1).max().unwrap_or(p.y) + i32::from(s.height);
    (x0, y0, x1, y1)
}

fn may_overlap(a: &Placement, sa: &EventStream, b: &Placement, sb: &EventStream) -> bool {
    let (Some(ea), Some(eb)) = (sa.end_time(), sb.end_time()) else {
        return false;
    };
    let time = a.start_us <= b.start_us + eb && b.start_us <= a.start_us + ea;
    let (ax0, ay0, ax1, ay1) = swept(a, sa);
    let (bx0, by0, bx1, by1) = swept(b, sb);
    time && ax0 < bx1 && bx0 < ax1 && ay0 < by1 && by0 < ay1
}

/// Merge placed streams onto the canvas, apply occlusion, then add the
/// scene's background noise. Output is sorted by timestamp; simultaneous
/// events keep placement order.
pub fn composite(scene: &SceneComposition, inputs: &[EventStream]) -> Result<EventStream> {
    scene.validate(inputs)?;
    let tiles: Vec<Tile> = scene
        .placements
        .iter()
        .map(|p| {
            let s = &inputs[p.stream];
            Tile {
                z: p.z.unwrap_or(0),
                start: p.start_us,
                end: s.end_time().map(|e| p.start_us + e),
                w: i32::from(s.width),
                h: i32::from(s.height),
            }
        })
        .collect();

    let mut merged: Vec<(u64, usize, Event)> = Vec::new();
    for (pi, p) in scene.placements.iter().enumerate() {
        let mine = tiles[pi];
        for e in &inputs[p.stream].events {
            let t = p.start_us + e.t;
            let (ox, oy) = p.origin_at(e.t);
            let x = ox + i32::from(e.x);
            let y = oy + i32::from(e.y);
            let hidden = scene.placements.iter().enumerate().any(|(qi, q)| {
                let tile = tiles[qi];
                if qi == pi || tile.z <= mine.z {
                    return false;
                }
                let Some(end) = tile.end else { return false };
                if t < tile.start || t > end {
                    return false;
                }
                let (qx, qy) = q.origin_at(t - tile.start);
                x >= qx && x < qx + tile.w && y >= qy && y < qy + tile.h
            });
            if !hidden {
                merged.push((t, pi, Event::new(x as u16, y as u16, e.polarity, t)));
            }
        }
    }
    merged.sort_by_key(|&(t, pi, _)| (t, pi));
    let stream = EventStream::new(
        scene.width,
        scene.height,
        merged.into_iter().map(|(_, _, e)| e).collect(),
    );
    if scene.noise_rate > 0.0 {
        let duration = tiles.iter().filter_map(|t| t.end).max().map_or(0, |e| e + 1);
        Ok(inject_noise_over(&stream, scene.noise_rate, duration, scene.seed))
    } else {
        Ok(stream)
    }
}
