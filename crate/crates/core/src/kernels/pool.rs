//! Average pooling with window bookkeeping, thresholding and local variance.

use super::filter::SummedArea;
use super::{BinaryMap, PixelMap};
use crate::annotations::BoundingBox;
use crate::error::{Error, Result};
use crate::image::Plane;

/// Result of [`avg_pool`]: the pooled values plus enough geometry to map
/// each cell back to its source window.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledMap {
    pub values: PixelMap,
    pub size: usize,
    pub step: usize,
    pub source_width: usize,
    pub source_height: usize,
}

impl PooledMap {
    /// Top-left corner of the window behind cell `(col, row)`.
    pub fn anchor(&self, col: usize, row: usize) -> (usize, usize) {
        (col * self.step, row * self.step)
    }

    /// Source window of cell `(col, row)`, clipped to the source map.
    pub fn window(&self, col: usize, row: usize) -> BoundingBox {
        let (x, y) = self.anchor(col, row);
        let x1 = (x + self.size).min(self.source_width);
        let y1 = (y + self.size).min(self.source_height);
        BoundingBox::from_corners(x as u32, y as u32, x1 as u32, y1 as u32)
    }

    /// Cell holding the maximum; ties resolve to the first cell in row-major order.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &v) in self.values.data().iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        let w = self.values.width();
        (best.0 % w, best.0 / w, best.1)
    }
}

fn pooled_len(dim: usize, size: usize, step: usize) -> usize {
    if size >= dim {
        1
    } else {
        (dim - size).div_ceil(step) + 1
    }
}

/// Mean over `size` x `size` windows anchored every `step` pixels.
///
/// Windows hanging over the right or bottom edge average only the samples
/// that fall inside the map.
pub fn avg_pool(map: &PixelMap, size: usize, step: usize) -> Result<PooledMap> {
    if size == 0 || step == 0 {
        return Err(Error::validation(format!(
            "pooling size ({size}) and step ({step}) must be positive"
        )));
    }
    let (w, h) = (map.width(), map.height());
    let (ow, oh) = (pooled_len(w, size, step), pooled_len(h, size, step));
    // Direct summation: a window of non-positive values never pools above 0.
    let data = map.data();
    let mut out = Vec::with_capacity(ow * oh);
    for row in 0..oh {
        let y0 = row * step;
        let y1 = (y0 + size).min(h);
        for col in 0..ow {
            let x0 = col * step;
            let x1 = (x0 + size).min(w);
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            let sum: f64 = (y0..y1).map(|y| data[y * w + x0..y * w + x1].iter().sum::<f64>()).sum();
            out.push(sum / n);
        }
    }
    Ok(PooledMap {
        values: Plane::from_vec(ow, oh, out),
        size,
        step,
        source_width: w,
        source_height: h,
    })
}

/// 0 where `map < low`, 1 otherwise.
pub fn threshold_mask(map: &PixelMap, low: f64) -> BinaryMap {
    BinaryMap::from_fn(map.width(), map.height(), |x, y| !(map.at(x, y) < low))
}

/// Keeps values inside the closed band `[lo, hi]` and zeroes the rest.
pub fn band_filter(map: &PixelMap, lo: f64, hi: f64) -> PixelMap {
    map.map(|v| if (lo..=hi).contains(&v) { v } else { 0.0 })
}

/// Population variance over the `n` x `n` window centered on every pixel;
/// windows are clipped at the borders.
pub fn local_variance_map(map: &PixelMap, n: usize) -> Result<PixelMap> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::validation(format!(
            "local variance window must be odd and at least 3, got {n}"
        )));
    }
    let (w, h) = (map.width(), map.height());
    // Centering first keeps the E[x^2] - E[x]^2 cancellation small.
    let mean = map.mean();
    let s1 = SummedArea::new(map, |v| v - mean);
    let s2 = SummedArea::new(map, |v| (v - mean) * (v - mean));
    let r = n / 2;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let cnt = ((x1 - x0) * (y1 - y0)) as f64;
            let m = s1.sum(x0, y0, x1, y1) / cnt;
            let v = s2.sum(x0, y0, x1, y1) / cnt - m * m;
            out.push(v.max(0.0));
        }
    }
    Ok(Plane::from_vec(w, h, out))
}
