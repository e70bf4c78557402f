//! Artifact records, box geometry, cross-preset deduplication and the JSON
//! annotation document.

mod record;

pub use record::{dedup_across_presets, dedup_grouped, parse_records, serialize_records};
pub use record::{ArtifactRecord, QualityPreset};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned integer pixel rectangle; `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBox")]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Deserialize)]
struct RawBox {
    x: u32,
    y: u32,
    w: u32,
    h: u32,
}

impl TryFrom<RawBox> for BoundingBox {
    type Error = String;

    fn try_from(r: RawBox) -> std::result::Result<Self, Self::Error> {
        BoundingBox::try_new(r.x, r.y, r.w, r.h).map_err(|e| e.to_string())
    }
}

impl BoundingBox {
    /// Panics on an empty box; use [`BoundingBox::try_new`] for untrusted input.
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        assert!(w > 0 && h > 0, "bounding box must be non-empty ({w}x{h})");
        Self { x, y, w, h }
    }

    pub fn try_new(x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::validation(format!("empty bounding box {w}x{h}")));
        }
        Ok(Self { x, y, w, h })
    }

    /// Box covering the whole of a `width` x `height` image.
    pub fn full(width: usize, height: usize) -> Self {
        Self::new(0, 0, width as u32, height as u32)
    }

    /// Box spanning the half-open pixel ranges `[x0, x1) x [y0, y1)`.
    pub fn from_corners(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        Self::new(x0, y0, x1 - x0, y1 - y0)
    }

    #[inline]
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    #[inline]
    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    /// Geometric center in continuous pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            f64::from(self.x) + f64::from(self.w) / 2.0,
            f64::from(self.y) + f64::from(self.h) / 2.0,
        )
    }

    /// Integer pixel at (or just right/below of) the center; always inside the box.
    pub fn center_pixel(&self) -> (u32, u32) {
        (self.x + self.w / 2, self.y + self.h / 2)
    }

    pub fn contains_pixel(&self, px: u32, py: u32) -> bool {
        px >= self.x && px < self.right() && py >= self.y && py < self.bottom()
    }

    pub fn intersection(&self, other: &BoundingBox) -> Option<BoundingBox> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x0 < x1 && y0 < y1).then(|| BoundingBox::from_corners(x0, y0, x1, y1))
    }

    /// Smallest box containing both.
    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox::from_corners(
            self.x.min(other.x),
            self.y.min(other.y),
            self.right().max(other.right()),
            self.bottom().max(other.bottom()),
        )
    }

    /// Intersection with the `width` x `height` image, if any.
    pub fn clamp_to(&self, width: usize, height: usize) -> Option<BoundingBox> {
        self.intersection(&BoundingBox::full(width, height))
    }

    pub fn inside(&self, width: usize, height: usize) -> bool {
        self.right() as usize <= width && self.bottom() as usize <= height
    }
}

/// Intersection-over-union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection(b).map_or(0, |i| i.area());
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn iou_examples() {
        let a = BoundingBox::new(0, 0, 10, 10);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BoundingBox::new(20, 20, 5, 5)), 0.0);
        // touching edges share no pixels
        assert_eq!(iou(&a, &BoundingBox::new(10, 0, 10, 10)), 0.0);
        let b = BoundingBox::new(5, 5, 10, 10);
        assert!((iou(&a, &b) - 25.0 / 175.0).abs() < 1e-12);
        // two 300x300 boxes offset by 100 px horizontally
        let c = BoundingBox::new(0, 0, 300, 300);
        let d = BoundingBox::new(100, 0, 300, 300);
        assert!((iou(&c, &d) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_boxes_are_rejected() {
        assert!(BoundingBox::try_new(0, 0, 0, 5).is_err());
        let parsed: std::result::Result<BoundingBox, _> =
            serde_json::from_str(r#"{"x":0,"y":0,"w":3,"h":0}"#);
        assert!(parsed.is_err());
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (0u32..50, 0u32..50, 1u32..40, 1u32..40).prop_map(|(x, y, w, h)| BoundingBox::new(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_one_only_for_identical(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            prop_assert_eq!(ab, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(ab == 1.0, a == b);
        }
    }
}
