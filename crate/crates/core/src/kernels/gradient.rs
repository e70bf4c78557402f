//! Sobel gradients, pixel-wise spatial information, Canny edges and gradient
//! orientation agreement.

use std::collections::VecDeque;

use super::filter::{convolve_separable, gaussian_kernel};
use super::{require_min_size, require_same_size, BinaryMap, GradientField, PixelMap};
use crate::error::{Error, Result};
use crate::image::Plane;

/// Largest Sobel magnitude reachable on a `[0, 1]` plane: |gx| = |gy| = 4.
pub const SOBEL_MAX: f64 = 4.0 * std::f64::consts::SQRT_2;

/// Below this gradient norm an orientation is treated as undefined.
pub const COSINE_EPS: f64 = 1e-6;

/// 3x3 Sobel derivatives with replicate-padded borders. `gx` grows to the
/// right, `gy` grows downwards.
pub fn sobel_gradients(plane: &Plane) -> Result<GradientField> {
    require_min_size(plane, 3, 3, "sobel")?;
    let (w, h) = (plane.width(), plane.height());
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let ym = y.saturating_sub(1);
        let yp = (y + 1).min(h - 1);
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            let p = |xx: usize, yy: usize| plane.at(xx, yy);
            let dx = (p(xp, ym) + 2.0 * p(xp, y) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(xm, y) + p(xm, yp));
            let dy = (p(xm, yp) + 2.0 * p(x, yp) + p(xp, yp)) - (p(xm, ym) + 2.0 * p(x, ym) + p(xp, ym));
            gx[y * w + x] = dx;
            gy[y * w + x] = dy;
        }
    }
    Ok(GradientField {
        gx: Plane::from_vec(w, h, gx),
        gy: Plane::from_vec(w, h, gy),
    })
}

/// Per-pixel spatial information: Sobel magnitude scaled into `[0, 1]`.
pub fn si_map(plane: &Plane) -> Result<PixelMap> {
    let g = sobel_gradients(plane)?;
    Ok(g.gx
        .zip_map(&g.gy, |a, b| (a.hypot(b) / SOBEL_MAX).min(1.0))
        .expect("same size"))
}

/// Per-pixel cosine of the angle between two gradient fields.
///
/// Both gradients (near) zero gives 1 (no disagreement); exactly one of them
/// (near) zero gives 0.
pub fn gradient_cosine_map(g1: &GradientField, g2: &GradientField) -> Result<PixelMap> {
    require_same_size(&g1.gx, &g2.gx, "gradient_cosine_map")?;
    let n = g1.gx.data().len();
    let (ax, ay, bx, by) = (g1.gx.data(), g1.gy.data(), g2.gx.data(), g2.gy.data());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let n1 = ax[i].hypot(ay[i]);
        let n2 = bx[i].hypot(by[i]);
        let v = match (n1 < COSINE_EPS, n2 < COSINE_EPS) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.0,
            (false, false) if ax[i] == bx[i] && ay[i] == by[i] => 1.0,
            (false, false) => ((ax[i] * bx[i] + ay[i] * by[i]) / (n1 * n2)).clamp(-1.0, 1.0),
        };
        out.push(v);
    }
    Ok(Plane::from_vec(g1.width(), g1.height(), out))
}

/// Hysteresis thresholds on the normalized (`[0, 1]`) gradient magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for CannyThresholds {
    fn default() -> Self {
        Self {
            low: 0.1,
            high: 0.2,
        }
    }
}

/// Peak smoothed gradient (in units of [`SOBEL_MAX`]) below which a plane
/// has no edges at all.
pub const CANNY_MIN_PEAK: f64 = 0.02;

/// Canny edge map: 5x5 Gaussian (sigma 1.4), Sobel, non-maximum suppression
/// and double-threshold hysteresis with 8-connectivity. `low` and `high` are
/// fractions of the plane's largest smoothed gradient magnitude.
pub fn canny_edges(plane: &Plane, low: f64, high: f64) -> Result<BinaryMap> {
    require_min_size(plane, 5, 5, "canny")?;
    if low > high {
        return Err(Error::validation(format!(
            "canny low threshold {low} exceeds high threshold {high}"
        )));
    }
    let k = gaussian_kernel(5, 1.4);
    let smooth = convolve_separable(plane, &k, &k);
    let g = sobel_gradients(&smooth)?;
    let (w, h) = (plane.width(), plane.height());
    let mag: Vec<f64> = g
        .gx
        .data()
        .iter()
        .zip(g.gy.data())
        .map(|(a, b)| a.hypot(*b) / SOBEL_MAX)
        .collect();
    let peak = mag.iter().copied().fold(0.0, f64::max);
    if peak < CANNY_MIN_PEAK {
        return Ok(BinaryMap::zeros(w, h));
    }
    let (low, high) = (low * peak, high * peak);
    let mag_at = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    // 0 = none, 1 = weak, 2 = strong
    let mut class = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m < low || m == 0.0 {
                continue;
            }
            let angle = g.gy.data()[i].atan2(g.gx.data()[i]).to_degrees().rem_euclid(180.0);
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = mag_at(xi - dx, yi - dy);
            let after = mag_at(xi + dx, yi + dy);
            // Asymmetric comparison keeps exactly one of two equal ridge pixels.
            if m > before && m >= after {
                class[i] = if m >= high { 2 } else { 1 };
            }
        }
    }

    let mut edges = BinaryMap::zeros(w, h);
    let mut queue = VecDeque::new();
    for (i, &c) in class.iter().enumerate() {
        if c == 2 {
            edges.set(i % w, i / w, true);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if class[j] == 1 && !edges.get(nx as usize, ny as usize) {
                    edges.set(nx as usize, ny as usize, true);
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(edges)
}
