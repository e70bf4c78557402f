//! Metric and filtering primitives shared by the detectors and the
//! evaluation harness. Every function here is pure.

pub mod ciede2000;
mod filter;
pub mod fsim;
pub mod gradient;
pub mod metrics;
pub mod pool;
pub mod ssim;

use crate::error::{Error, Result};
use crate::image::Plane;

pub use ciede2000::{ciede2000_map, delta_e00};
pub use filter::{box_blur, gaussian_blur};
pub use fsim::fsim;
pub use gradient::{canny_edges, gradient_cosine_map, si_map, sobel_gradients, CannyThresholds};
pub use metrics::{scalar_metric, MetricKind, MetricValue};
pub use pool::{avg_pool, band_filter, local_variance_map, threshold_mask, PooledMap};
pub use ssim::{msssim, pixelwise_msssim, ssim, ssim_map, MsSsimMap};

/// Single-channel float field produced by a kernel (metric maps, residuals,
/// variance maps). Shares the [`Plane`] representation.
pub type PixelMap = Plane;

/// Per-pixel horizontal and vertical derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub gx: PixelMap,
    pub gy: PixelMap,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.gx.width()
    }

    pub fn height(&self) -> usize {
        self.gx.height()
    }

    pub fn magnitude(&self) -> PixelMap {
        self.gx
            .zip_map(&self.gy, |a, b| a.hypot(b))
            .expect("gradient components share a size")
    }
}

/// Row-major field of 0/1 flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryMap {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::validation(format!(
                "binary map of {width}x{height} cannot hold {} samples",
                data.len()
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(Error::validation("binary map values must be 0 or 1"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(u8::from(f(x, y)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    #[inline]
    pub(crate) fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = u8::from(v);
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Pixel-wise logical AND.
    pub fn and(&self, other: &BinaryMap) -> Result<BinaryMap> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::validation("binary map size mismatch"));
        }
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a & b).collect(),
        })
    }

    /// Multiplies `map` by this mask (zeroing where the mask is 0).
    pub fn apply(&self, map: &PixelMap) -> Result<PixelMap> {
        if self.width != map.width() || self.height != map.height() {
            return Err(Error::validation("mask and map differ in size"));
        }
        Ok(Plane::from_vec(
            self.width,
            self.height,
            map.data()
                .iter()
                .zip(&self.data)
                .map(|(&v, &m)| if m != 0 { v } else { 0.0 })
                .collect(),
        ))
    }
}

pub(crate) fn require_same_size(a: &Plane, b: &Plane, what: &str) -> Result<()> {
    if !a.same_size(b) {
        return Err(Error::validation(format!(
            "{what}: inputs differ in size ({}x{} vs {}x{})",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

pub(crate) fn require_min_size(p: &Plane, min_w: usize, min_h: usize, what: &str) -> Result<()> {
    if p.width() < min_w || p.height() < min_h {
        return Err(Error::validation(format!(
            "{what} needs at least {min_w}x{min_h} pixels, got {}x{}",
            p.width(),
            p.height()
        )));
    }
    Ok(())
}
