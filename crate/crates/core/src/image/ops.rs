//! Cropping, box enlargement and checkerboard composition.

use super::{Plane, RasterImage};
use crate::annotations::BoundingBox;
use crate::error::{Error, Result};

/// Copies the part of `img` covered by `bbox`, clamped to the image.
pub fn crop_region(img: &RasterImage, bbox: &BoundingBox) -> Result<RasterImage> {
    let clipped = bbox.clamp_to(img.width(), img.height()).ok_or_else(|| {
        Error::validation(format!(
            "box {bbox:?} does not intersect the {}x{} image",
            img.width(),
            img.height()
        ))
    })?;
    let planes = img
        .planes()
        .iter()
        .map(|p| crop_plane(p, &clipped))
        .collect();
    Ok(RasterImage::from_planes_unchecked(img.colorspace(), planes))
}

/// Crop of a single plane; `bbox` must already lie inside it.
pub(crate) fn crop_plane(p: &Plane, bbox: &BoundingBox) -> Plane {
    let (x0, y0) = (bbox.x as usize, bbox.y as usize);
    let (w, h) = (bbox.w as usize, bbox.h as usize);
    let mut data = Vec::with_capacity(w * h);
    for y in y0..y0 + h {
        let row = y * p.width();
        data.extend_from_slice(&p.data()[row + x0..row + x0 + w]);
    }
    Plane::from_vec(w, h, data)
}

/// Re-centers `bbox` as a `target_w` x `target_h` box (shrunk to the image if
/// the image is smaller) and translates it so that it lies inside the image.
pub fn expand_and_clamp_box(
    bbox: &BoundingBox,
    target_w: u32,
    target_h: u32,
    img_w: u32,
    img_h: u32,
) -> BoundingBox {
    assert!(target_w > 0 && target_h > 0 && img_w > 0 && img_h > 0);
    let (x, w) = place_span(bbox.x, bbox.w, target_w, img_w);
    let (y, h) = place_span(bbox.y, bbox.h, target_h, img_h);
    BoundingBox::new(x, y, w, h)
}

fn place_span(start: u32, len: u32, target: u32, limit: u32) -> (u32, u32) {
    let size = target.min(limit);
    // Doubled coordinates keep half-pixel centers exact.
    let center2 = 2 * i64::from(start) + i64::from(len);
    let origin = (center2 - i64::from(size)).div_euclid(2);
    let origin = origin.clamp(0, i64::from(limit - size));
    (origin as u32, size)
}

/// Interleaves `a` and `b` in square tiles: pixel `(x, y)` comes from `a`
/// when `x / tile + y / tile` is even and from `b` otherwise.
pub fn checkerboard_composite(a: &RasterImage, b: &RasterImage, tile: usize) -> Result<RasterImage> {
    if !a.same_shape(b) {
        return Err(Error::validation(format!(
            "checkerboard inputs differ: {}x{} {:?} vs {}x{} {:?}",
            a.width(),
            a.height(),
            a.colorspace(),
            b.width(),
            b.height(),
            b.colorspace()
        )));
    }
    if tile == 0 {
        return Err(Error::validation("checkerboard tile must be positive"));
    }
    let planes = a
        .planes()
        .iter()
        .zip(b.planes())
        .map(|(pa, pb)| {
            Plane::from_fn(pa.width(), pa.height(), |x, y| {
                if (x / tile + y / tile) % 2 == 0 {
                    pa.at(x, y)
                } else {
                    pb.at(x, y)
                }
            })
        })
        .collect();
    Ok(RasterImage::from_planes_unchecked(a.colorspace(), planes))
}
