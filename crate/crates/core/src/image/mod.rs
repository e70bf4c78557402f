//! Normalized raster images and the operations the detectors need on them.
//!
//! All samples are `f64` in `[0, 1]`. Lab images store `L/100` and
//! `(a + 128) / 255`, `(b + 128) / 255` so that the same range invariant
//! holds for every color space; [`color::decode_lab`] undoes the mapping.

pub mod color;
pub mod io;
pub mod ops;

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub use color::{lab_to_rgb, rgb_to_lab, rgb_to_yuv, yuv_to_rgb};
pub use io::{load_image, save_png};
pub use ops::{checkerboard_composite, crop_region, expand_and_clamp_box};

/// Color space tag carried by every [`RasterImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Gray,
    Rgb,
    Yuv,
    Lab,
}

impl ColorSpace {
    pub fn plane_count(self) -> usize {
        match self {
            ColorSpace::Gray => 1,
            _ => 3,
        }
    }
}

/// Single-channel row-major field of finite floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::validation(format!(
                "plane of {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite sample at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Constructor for kernel outputs whose values are finite by construction.
    pub(crate) fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0 && value.is_finite());
        Self::from_vec(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                assert!(v.is_finite(), "from_fn produced a non-finite value at ({x}, {y})");
                data.push(v);
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped into the plane (replicate padding).
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn same_size(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance over all samples.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.data.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Plane {
        Plane::from_vec(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise combination of two planes of identical size.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Plane> {
        if !self.same_size(other) {
            return Err(Error::validation(format!(
                "plane size mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(Plane::from_vec(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }
}

/// Multi-plane image in a tagged color space with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    colorspace: ColorSpace,
    planes: Vec<Plane>,
}

impl RasterImage {
    pub fn new(colorspace: ColorSpace, planes: Vec<Plane>) -> Result<Self> {
        if planes.len() != colorspace.plane_count() {
            return Err(Error::validation(format!(
                "{colorspace:?} image needs {} planes, got {}",
                colorspace.plane_count(),
                planes.len()
            )));
        }
        let (w, h) = (planes[0].width, planes[0].height);
        if planes.iter().any(|p| p.width != w || p.height != h) {
            return Err(Error::validation("planes differ in size"));
        }
        for (c, p) in planes.iter().enumerate() {
            if let Some(i) = p.data.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::validation(format!(
                    "sample {} in plane {c} at ({}, {}) is outside [0, 1]",
                    p.data[i],
                    i % w,
                    i / w
                )));
            }
        }
        Ok(Self {
            width: w,
            height: h,
            colorspace,
            planes,
        })
    }

    /// Builds an RGB image from per-pixel closures; values are clamped into `[0, 1]`.
    pub fn rgb_from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Self {
        let mut planes = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                for c in 0..3 {
                    planes[c].push(px[c].clamp(0.0, 1.0));
                }
            }
        }
        let planes = planes
            .into_iter()
            .map(|d| Plane::from_vec(width, height, d))
            .collect();
        Self {
            width,
            height,
            colorspace: ColorSpace::Rgb,
            planes,
        }
    }

    pub(crate) fn from_planes_unchecked(colorspace: ColorSpace, planes: Vec<Plane>) -> Self {
        let (width, height) = (planes[0].width, planes[0].height);
        Self {
            width,
            height,
            colorspace,
            planes,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn colorspace(&self) -> ColorSpace {
        self.colorspace
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn plane(&self, index: usize) -> &Plane {
        &self.planes[index]
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        match self.colorspace {
            ColorSpace::Gray => {
                let v = self.planes[0].at(x, y);
                [v, v, v]
            }
            _ => [
                self.planes[0].at(x, y),
                self.planes[1].at(x, y),
                self.planes[2].at(x, y),
            ],
        }
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.colorspace == other.colorspace
    }

    fn require(&self, cs: ColorSpace) -> Result<()> {
        if self.colorspace != cs {
            return Err(Error::validation(format!(
                "expected a {cs:?} image, got {:?}",
                self.colorspace
            )));
        }
        Ok(())
    }
}

/// Original, neural-compressed and traditionally-compressed versions of one image.
///
/// Color conversions of the three members are computed on first use and
/// cached, so running several detectors on one triplet converts once.
#[derive(Debug, Clone)]
pub struct ImageTriplet {
    pub orig: RasterImage,
    pub neural: RasterImage,
    pub trad: RasterImage,
    yuv: OnceLock<[RasterImage; 3]>,
    lab: OnceLock<[RasterImage; 3]>,
}

/// Selects one member of an [`ImageTriplet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Orig,
    Neural,
    Trad,
}

impl ImageTriplet {
    pub fn new(orig: RasterImage, neural: RasterImage, trad: RasterImage) -> Result<Self> {
        if !orig.same_shape(&neural) || !orig.same_shape(&trad) {
            return Err(Error::validation(format!(
                "triplet members differ: orig {}x{} {:?}, neural {}x{} {:?}, trad {}x{} {:?}",
                orig.width,
                orig.height,
                orig.colorspace,
                neural.width,
                neural.height,
                neural.colorspace,
                trad.width,
                trad.height,
                trad.colorspace
            )));
        }
        Ok(Self {
            orig,
            neural,
            trad,
            yuv: OnceLock::new(),
            lab: OnceLock::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.orig.width
    }

    pub fn height(&self) -> usize {
        self.orig.height
    }

    pub fn get(&self, role: Role) -> &RasterImage {
        match role {
            Role::Orig => &self.orig,
            Role::Neural => &self.neural,
            Role::Trad => &self.trad,
        }
    }

    /// Triplet with the neural and traditional members exchanged.
    pub fn swapped(&self) -> ImageTriplet {
        ImageTriplet::new(self.orig.clone(), self.trad.clone(), self.neural.clone())
            .expect("members already validated")
    }

    /// YUV versions in (orig, neural, trad) order. Requires RGB members.
    pub fn yuv(&self) -> Result<&[RasterImage; 3]> {
        self.orig.require(ColorSpace::Rgb)?;
        Ok(self.yuv.get_or_init(|| {
            [
                rgb_to_yuv(&self.orig).expect("rgb checked"),
                rgb_to_yuv(&self.neural).expect("rgb checked"),
                rgb_to_yuv(&self.trad).expect("rgb checked"),
            ]
        }))
    }

    /// Lab versions in (orig, neural, trad) order. Requires RGB members.
    pub fn lab(&self) -> Result<&[RasterImage; 3]> {
        self.orig.require(ColorSpace::Rgb)?;
        Ok(self.lab.get_or_init(|| {
            [
                rgb_to_lab(&self.orig).expect("rgb checked"),
                rgb_to_lab(&self.neural).expect("rgb checked"),
                rgb_to_lab(&self.trad).expect("rgb checked"),
            ]
        }))
    }

    /// Luma planes (Y of BT.601 YUV) in (orig, neural, trad) order.
    pub fn luma(&self) -> Result<[&Plane; 3]> {
        let yuv = self.yuv()?;
        Ok([yuv[0].plane(0), yuv[1].plane(0), yuv[2].plane(0)])
    }
}
