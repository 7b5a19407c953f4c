//! Synthetic object identities and distractors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::event_io::Template;
use crate::Error;

/// Side of the square canvas each object is recorded on.
pub const TILE: u16 = 40;
/// Side of the bounding square of every identity shape.
pub const SHAPE_SIZE: u16 = 24;
/// Side of a distractor patch.
pub const PATCH_SIZE: u16 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Face,
    Cross,
    Diamond,
    Triangle,
    /// Small square distractor.
    Patch,
}

impl Shape {
    pub const IDENTITIES: [Shape; 4] = [Shape::Face, Shape::Cross, Shape::Diamond, Shape::Triangle];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Face => "face",
            Shape::Cross => "cross",
            Shape::Diamond => "diamond",
            Shape::Triangle => "triangle",
            Shape::Patch => "patch",
        }
    }

    pub fn is_identity(self) -> bool {
        self != Shape::Patch
    }

    pub fn template(self) -> Template {
        let n = SHAPE_SIZE;
        let c = (f64::from(n) - 1.0) / 2.0;
        match self {
            Shape::Face => Template::from_fn(n, n, |x, y| {
                let (dx, dy) = (f64::from(x) - c, f64::from(y) - c);
                let r = (dx * dx + dy * dy).sqrt();
                let eye = |ex: f64, ey: f64| ((f64::from(x) - ex).powi(2) + (f64::from(y) - ey).powi(2)).sqrt() <= 2.0;
                let mouth = (15..=17).contains(&y) && (7..=16).contains(&x);
                (9.0..=c + 0.5).contains(&r) || eye(7.5, 8.5) || eye(15.5, 8.5) || mouth
            }),
            Shape::Cross => Template::from_fn(n, n, |x, y| (9..15).contains(&x) || (9..15).contains(&y)),
            Shape::Diamond => Template::from_fn(n, n, |x, y| {
                (f64::from(x) - c).abs() + (f64::from(y) - c).abs() <= c + 0.5
            }),
            Shape::Triangle => Template::from_fn(n, n, |x, y| (f64::from(x) - c).abs() <= (f64::from(y) + 1.0) / 2.0),
            Shape::Patch => Template::filled(PATCH_SIZE, PATCH_SIZE),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Shape::Face, Shape::Cross, Shape::Diamond, Shape::Triangle, Shape::Patch]
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown shape `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_are_distinct_and_sized() {
        let t: Vec<_> = Shape::IDENTITIES.iter().map(|s| s.template()).collect();
        for (i, a) in t.iter().enumerate() {
            assert_eq!((a.width, a.height), (SHAPE_SIZE, SHAPE_SIZE));
            assert!(a.occupied() > 100, "{} too sparse", Shape::IDENTITIES[i]);
            for b in &t[i + 1..] {
                assert_ne!(a.cells, b.cells);
            }
        }
        assert_eq!("diamond".parse::<Shape>().unwrap(), Shape::Diamond);
        assert!("blob".parse::<Shape>().is_err());
    }
}
