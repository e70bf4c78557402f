//! sRGB ↔ YUV (BT.601, full range) and sRGB ↔ CIE L*a*b* (D65).

use std::sync::LazyLock;

use super::{ColorSpace, Plane, RasterImage};
use crate::error::Result;

const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;

// D65 reference white for the sRGB primaries below.
const WHITE: [f64; 3] = [0.950_47, 1.0, 1.088_83];

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_453, 0.357_580, 0.180_423],
    [0.212_671, 0.715_160, 0.072_169],
    [0.019_334, 0.119_193, 0.950_227],
];

static XYZ_TO_RGB: LazyLock<[[f64; 3]; 3]> = LazyLock::new(|| invert3(&RGB_TO_XYZ));

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let det = m[0][0] * cof(1, 2, 1, 2) - m[0][1] * cof(1, 2, 0, 2) + m[0][2] * cof(1, 2, 0, 1);
    [
        [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
        [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
        [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
    ]
}

/// Full-range BT.601 conversion of one pixel; U and V carry a +0.5 offset.
#[inline]
pub fn yuv_from_rgb_pixel([r, g, b]: [f64; 3]) -> [f64; 3] {
    let y = KR * r + KG * g + KB * b;
    let u = 0.5 * (b - y) / (1.0 - KB) + 0.5;
    let v = 0.5 * (r - y) / (1.0 - KR) + 0.5;
    [y, u, v]
}

#[inline]
pub fn rgb_from_yuv_pixel([y, u, v]: [f64; 3]) -> [f64; 3] {
    let r = y + 2.0 * (1.0 - KR) * (v - 0.5);
    let b = y + 2.0 * (1.0 - KB) * (u - 0.5);
    let g = (y - KR * r - KB * b) / KG;
    [r, g, b]
}

#[inline]
fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.040_45 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

const DELTA: f64 = 6.0 / 29.0;

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

#[inline]
fn lab_f_inv(t: f64) -> f64 {
    if t > DELTA {
        t * t * t
    } else {
        3.0 * DELTA * DELTA * (t - 4.0 / 29.0)
    }
}

/// sRGB in `[0, 1]` to unmapped CIE L*a*b* (L* in `[0, 100]`).
pub fn lab_from_rgb_pixel(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_to_linear);
    let mut xyz = [0.0; 3];
    for (i, row) in RGB_TO_XYZ.iter().enumerate() {
        xyz[i] = (row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2]) / WHITE[i];
    }
    let [fx, fy, fz] = xyz.map(lab_f);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Unmapped L*a*b* back to (unclamped) sRGB.
pub fn rgb_from_lab_pixel([l, a, b]: [f64; 3]) -> [f64; 3] {
    let fy = (l + 16.0) / 116.0;
    let fx = fy + a / 500.0;
    let fz = fy - b / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE[0],
        lab_f_inv(fy) * WHITE[1],
        lab_f_inv(fz) * WHITE[2],
    ];
    let mut rgb = [0.0; 3];
    for (i, row) in XYZ_TO_RGB.iter().enumerate() {
        rgb[i] = linear_to_srgb(row[0] * xyz[0] + row[1] * xyz[1] + row[2] * xyz[2]);
    }
    rgb
}

/// Maps L*a*b* into the stored `[0, 1]` representation.
#[inline]
pub fn encode_lab([l, a, b]: [f64; 3]) -> [f64; 3] {
    [
        (l / 100.0).clamp(0.0, 1.0),
        ((a + 128.0) / 255.0).clamp(0.0, 1.0),
        ((b + 128.0) / 255.0).clamp(0.0, 1.0),
    ]
}

/// Inverse of [`encode_lab`].
#[inline]
pub fn decode_lab([l, a, b]: [f64; 3]) -> [f64; 3] {
    [l * 100.0, a * 255.0 - 128.0, b * 255.0 - 128.0]
}

fn convert(
    img: &RasterImage,
    from: ColorSpace,
    to: ColorSpace,
    f: impl Fn([f64; 3]) -> [f64; 3],
) -> Result<RasterImage> {
    img.require(from)?;
    let n = img.width() * img.height();
    let (p0, p1, p2) = (img.plane(0).data(), img.plane(1).data(), img.plane(2).data());
    let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        let px = f([p0[i], p1[i], p2[i]]);
        for c in 0..3 {
            out[c][i] = px[c].clamp(0.0, 1.0);
        }
    }
    let planes = out
        .into_iter()
        .map(|d| Plane::from_vec(img.width(), img.height(), d))
        .collect();
    Ok(RasterImage::from_planes_unchecked(to, planes))
}

pub fn rgb_to_yuv(img: &RasterImage) -> Result<RasterImage> {
    convert(img, ColorSpace::Rgb, ColorSpace::Yuv, yuv_from_rgb_pixel)
}

pub fn yuv_to_rgb(img: &RasterImage) -> Result<RasterImage> {
    convert(img, ColorSpace::Yuv, ColorSpace::Rgb, rgb_from_yuv_pixel)
}

pub fn rgb_to_lab(img: &RasterImage) -> Result<RasterImage> {
    convert(img, ColorSpace::Rgb, ColorSpace::Lab, |px| {
        encode_lab(lab_from_rgb_pixel(px))
    })
}

pub fn lab_to_rgb(img: &RasterImage) -> Result<RasterImage> {
    convert(img, ColorSpace::Lab, ColorSpace::Rgb, |px| {
        rgb_from_lab_pixel(decode_lab(px))
    })
}
