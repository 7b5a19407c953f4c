use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pixel-inclusive axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: u16,
    pub y_min: u16,
    pub x_max: u16,
    pub y_max: u16,
}

impl BoundingBox {
    pub fn new(x_min: u16, y_min: u16, x_max: u16, y_max: u16) -> Self {
        assert!(x_min <= x_max && y_min <= y_max, "inverted box");
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> u64 {
        u64::from(self.x_max - self.x_min) + 1
    }

    pub fn height(&self) -> u64 {
        u64::from(self.y_max - self.y_min) + 1
    }

    pub fn area(&self) -> u64 {
        self.width() * self.height()
    }

    pub fn intersection(&self, other: &Self) -> Option<Self> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min <= x_max && y_min <= y_max).then_some(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Smallest box covering both.
    pub fn hull(&self, other: &Self) -> Self {
        Self {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.x_min <= other.x_min && self.y_min <= other.y_min && self.x_max >= other.x_max && self.y_max >= other.y_max
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (f64::from(self.x_min) + f64::from(self.x_max)) / 2.0,
            (f64::from(self.y_min) + f64::from(self.y_max)) / 2.0,
        )
    }
}

/// Tight box over a pixel set.
pub fn bbox_of(pixels: &[(u16, u16)]) -> Result<BoundingBox> {
    let (&(x0, y0), rest) = pixels.split_first().ok_or(Error::EmptyPixels)?;
    let mut b = BoundingBox::new(x0, y0, x0, y0);
    for &(x, y) in rest {
        b = b.hull(&BoundingBox::new(x, y, x, y));
    }
    Ok(b)
}

/// Intersection over union with pixel-inclusive areas.
pub fn bbox_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    match a.intersection(b) {
        None => 0.0,
        Some(i) => {
            let inter = i.area();
            inter as f64 / (a.area() + b.area() - inter) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boxes_from_pixels() {
        assert_eq!(bbox_of(&[(5, 7)]).unwrap(), BoundingBox::new(5, 7, 5, 7));
        assert_eq!(bbox_of(&[(0, 0), (3, 4)]).unwrap(), BoundingBox::new(0, 0, 3, 4));
        assert!(matches!(bbox_of(&[]), Err(Error::EmptyPixels)));
    }

    #[test]
    fn iou_examples() {
        let a = BoundingBox::new(0, 0, 9, 9);
        assert_eq!(bbox_iou(&a, &a), 1.0);
        assert_eq!(bbox_iou(&a, &BoundingBox::new(10, 0, 12, 9)), 0.0);
        assert!((bbox_iou(&a, &BoundingBox::new(5, 0, 14, 9)) - 1.0 / 3.0).abs() < 1e-12);
    }

    fn boxes() -> impl Strategy<Value = BoundingBox> {
        (0u16..50, 0u16..50, 0u16..20, 0u16..20).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, x + w, y + h))
    }

    proptest! {
        #[test]
        fn bbox_matches_scan(px in proptest::collection::vec((0u16..300, 0u16..300), 1..40)) {
            let b = bbox_of(&px).unwrap();
            prop_assert_eq!(b.x_min, px.iter().map(|p| p.0).min().unwrap());
            prop_assert_eq!(b.y_min, px.iter().map(|p| p.1).min().unwrap());
            prop_assert_eq!(b.x_max, px.iter().map(|p| p.0).max().unwrap());
            prop_assert_eq!(b.y_max, px.iter().map(|p| p.1).max().unwrap());
        }

        #[test]
        fn iou_is_symmetric_and_bounded(a in boxes(), b in boxes()) {
            let v = bbox_iou(&a, &b);
            prop_assert_eq!(v, bbox_iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 0.0, a.intersection(&b).is_none());
        }
    }
}
