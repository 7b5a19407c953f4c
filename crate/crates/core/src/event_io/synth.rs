//! Edge-driven synthetic DVS streams.
//!
//! A binary template is moved along a trajectory; every step, the pixels
//! whose occupancy changes (the moving contour) emit events. ON events mark
//! pixels the shape moves onto, OFF events the pixels it leaves.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Event, EventStream, Polarity};
use crate::{Error, Result};

/// Binary shape; `cells` is row-major, `true` = occupied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub width: u16,
    pub height: u16,
    pub cells: Vec<bool>,
}

impl Template {
    pub fn new(width: u16, height: u16, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != usize::from(width) * usize::from(height) {
            return Err(Error::Dimension(format!(
                "template {width}x{height} needs {} cells, got {}",
                usize::from(width) * usize::from(height),
                cells.len()
            )));
        }
        Ok(Self { width, height, cells })
    }

    /// Build from ASCII art, `#` occupied and anything else empty.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
        let mut cells = vec![false; width * height];
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.bytes().enumerate() {
                cells[y * width + x] = ch == b'#';
            }
        }
        Self::new(width as u16, height as u16, cells)
    }

    pub fn filled(width: u16, height: u16) -> Self {
        Self {
            width,
            height,
            cells: vec![true; usize::from(width) * usize::from(height)],
        }
    }

    pub fn from_fn(width: u16, height: u16, f: impl Fn(u16, u16) -> bool) -> Self {
        let cells = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, cells }
    }

    pub fn get(&self, x: i32, y: i32) -> bool {
        x >= 0
            && y >= 0
            && (x as u16) < self.width
            && (y as u16) < self.height
            && self.cells[y as usize * usize::from(self.width) + x as usize]
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

/// Top-left template offsets, one per simulation step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub positions: Vec<(i32, i32)>,
}

impl Trajectory {
    pub fn fixed(position: (i32, i32), steps: usize) -> Self {
        Self {
            positions: vec![position; steps + 1],
        }
    }

    /// Straight line from `from` to `to` in `steps` steps, rounded to pixels.
    pub fn linear(from: (i32, i32), to: (i32, i32), steps: usize) -> Self {
        let steps = steps.max(1);
        let positions = (0..=steps)
            .map(|k| {
                let a = k as f64 / steps as f64;
                (
                    (f64::from(from.0) + a * f64::from(to.0 - from.0)).round() as i32,
                    (f64::from(from.1) + a * f64::from(to.1 - from.1)).round() as i32,
                )
            })
            .collect();
        Self { positions }
    }

    /// Repeating three-leg triangular sweep around `origin`, in the style of
    /// the saccades used to record N-Caltech from static images.
    pub fn saccade(origin: (i32, i32), amplitude: f64, leg_steps: usize, total_steps: usize) -> Self {
        let corners = [(0.0, 0.0), (amplitude * 0.5, amplitude), (amplitude, 0.0)];
        Self::cycle(origin, &corners, leg_steps, total_steps)
    }

    /// Closed square sweep of side `amplitude`: every edge orientation moves
    /// once per cycle.
    pub fn square(origin: (i32, i32), amplitude: f64, leg_steps: usize, total_steps: usize) -> Self {
        let corners = [(0.0, 0.0), (amplitude, 0.0), (amplitude, amplitude), (0.0, amplitude)];
        Self::cycle(origin, &corners, leg_steps, total_steps)
    }

    /// Straight legs between consecutive `corners`, looping back to the first.
    pub fn cycle(origin: (i32, i32), corners: &[(f64, f64)], leg_steps: usize, total_steps: usize) -> Self {
        let leg = leg_steps.max(1);
        let n = corners.len().max(1);
        let positions = (0..=total_steps)
            .map(|k| {
                if corners.is_empty() {
                    return origin;
                }
                let which = (k / leg) % n;
                let a = (k % leg) as f64 / leg as f64;
                let (x0, y0) = corners[which];
                let (x1, y1) = corners[(which + 1) % n];
                (
                    origin.0 + (x0 + a * (x1 - x0)).round() as i32,
                    origin.1 + (y0 + a * (y1 - y0)).round() as i32,
                )
            })
            .collect();
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub width: u16,
    pub height: u16,
    /// Events per second emitted while the shape is moving.
    pub event_rate: f64,
    pub duration_us: u64,
    pub step_us: u64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 40,
            height: 40,
            event_rate: 200_000.0,
            duration_us: 300_000,
            step_us: 1_000,
            seed: 0,
        }
    }
}

pub fn synthesize_stream(template: &Template, trajectory: &Trajectory, cfg: &SynthConfig) -> Result<EventStream> {
    if cfg.step_us == 0 {
        return Err(Error::Config("step_us must be positive".into()));
    }
    let steps = cfg.duration_us.div_ceil(cfg.step_us) as usize;
    let position =
        |k: usize| -> Option<(i32, i32)> { trajectory.positions.get(k).or(trajectory.positions.last()).copied() };

    for k in 0..=steps.min(trajectory.len().saturating_sub(1)) {
        let (px, py) = trajectory.positions[k];
        let fits = px >= 0
            && py >= 0
            && px + i32::from(template.width) <= i32::from(cfg.width)
            && py + i32::from(template.height) <= i32::from(cfg.height);
        if !fits {
            return Err(Error::Geometry(format!(
                "trajectory step {k} puts the {}x{} template at ({px}, {py}), outside the {}x{} canvas",
                template.width, template.height, cfg.width, cfg.height
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut events = Vec::new();
    let mut changed: Vec<(u16, u16, Polarity)> = Vec::new();
    let quota = |k: usize| -> u64 {
        let at = |s: usize| (cfg.event_rate * (s as u64 * cfg.step_us) as f64 / 1e6).floor() as u64;
        at(k + 1) - at(k)
    };

    for k in 0..steps {
        let (Some(from), Some(to)) = (position(k), position(k + 1)) else {
            break;
        };
        if from == to {
            continue;
        }
        changed.clear();
        let x_lo = from.0.min(to.0);
        let y_lo = from.1.min(to.1);
        let x_hi = from.0.max(to.0) + i32::from(template.width);
        let y_hi = from.1.max(to.1) + i32::from(template.height);
        for y in y_lo..y_hi {
            for x in x_lo..x_hi {
                let before = template.get(x - from.0, y - from.1);
                let after = template.get(x - to.0, y - to.1);
                if before != after {
                    let pol = if after { Polarity::On } else { Polarity::Off };
                    changed.push((x as u16, y as u16, pol));
                }
            }
        }
        if changed.is_empty() {
            continue;
        }
        changed.shuffle(&mut rng);
        let start = k as u64 * cfg.step_us;
        let end = (start + cfg.step_us).min(cfg.duration_us);
        for j in 0..quota(k) as usize {
            let (x, y, polarity) = changed[j % changed.len()];
            let t = rng.random_range(start..end);
            events.push(Event::new(x, y, polarity, t));
        }
    }
    events.sort_by_key(|e| e.t);
    Ok(EventStream::new(cfg.width, cfg.height, events))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            width: 64,
            height: 64,
            event_rate: 50_000.0,
            duration_us: 40_000,
            step_us: 1_000,
            seed,
        }
    }

    #[test]
    fn static_shape_is_silent() {
        let s = synthesize_stream(&Template::filled(8, 8), &Trajectory::fixed((4, 4), 40), &cfg(1)).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn same_seed_same_stream() {
        let t = Template::filled(8, 8);
        let tr = Trajectory::linear((0, 0), (40, 20), 40);
        let a = synthesize_stream(&t, &tr, &cfg(7)).unwrap();
        let b = synthesize_stream(&t, &tr, &cfg(7)).unwrap();
        let c = synthesize_stream(&t, &tr, &cfg(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn moving_square_hits_requested_rate() {
        let t = Template::filled(10, 10);
        let tr = Trajectory::linear((0, 10), (40, 10), 40);
        let c = cfg(3);
        let s = synthesize_stream(&t, &tr, &c).unwrap();
        let expected = c.event_rate * c.duration_us as f64 / 1e6;
        let got = s.len() as f64;
        assert!((got - expected).abs() <= 0.1 * expected, "{got} vs {expected}");
        s.validate().unwrap();
    }

    #[test]
    fn events_lie_on_the_moving_contour() {
        let t = Template::filled(6, 6);
        let tr = Trajectory::linear((10, 10), (20, 10), 10);
        let s = synthesize_stream(
            &t,
            &tr,
            &SynthConfig {
                duration_us: 10_000,
                ..cfg(2)
            },
        )
        .unwrap();
        // horizontal motion only exposes the leading and trailing columns
        for e in &s.events {
            assert!((10..16).contains(&e.y));
            let k = (e.t / 1000) as u16;
            let lead = 16 + k;
            let trail = 10 + k;
            assert!(
                (e.x == lead && e.polarity == Polarity::On) || (e.x == trail && e.polarity == Polarity::Off),
                "{e:?}"
            );
        }
    }

    #[test]
    fn leaving_the_canvas_is_a_geometry_error() {
        let t = Template::filled(8, 8);
        let tr = Trajectory::linear((0, 0), (60, 0), 40);
        assert!(matches!(synthesize_stream(&t, &tr, &cfg(0)), Err(Error::Geometry(_))));
    }

    #[test]
    fn saccade_returns_to_origin() {
        let tr = Trajectory::saccade((5, 5), 4.0, 10, 30);
        assert_eq!(tr.positions[0], (5, 5));
        assert_eq!(tr.positions[30], (5, 5));
        assert_eq!(tr.positions[10], (7, 9));
    }

    #[test]
    fn ascii_templates() {
        let t = Template::from_ascii(&["#.#", ".#."]).unwrap();
        assert_eq!((t.width, t.height, t.occupied()), (3, 2, 3));
        assert!(t.get(1, 1) && !t.get(1, 0) && !t.get(-1, 0));
    }
}
