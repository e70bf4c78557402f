use crate::annotations::BoundingBox;
use crate::detectors::ArtifactType;
use crate::error::{Error, Result};
use crate::image::color::{lab_from_rgb_pixel, rgb_from_lab_pixel};
use crate::image::{ColorSpace, Plane, RasterImage};
use crate::kernels::{box_blur, delta_e00, gaussian_blur};

/// Direction of the synthetic tint in the a*b* plane.
const TINT_ANGLE_DEG: f64 = 35.0;

/// Applies a kind-specific degradation inside `region` and leaves every other
/// pixel untouched.
///
/// * texture: box blur of radius `strength` (rounded)
/// * boundary: content rotated by `strength` degrees about the region center
/// * color (both sizes): a*b* tint scaled so the mean CIEDE2000 inside the region is `strength`
/// * text: Gaussian blur with sigma `strength`
pub fn inject_synthetic_artifact(
    img: &RasterImage,
    kind: ArtifactType,
    region: &BoundingBox,
    strength: f64,
) -> Result<RasterImage> {
    if img.colorspace() != ColorSpace::Rgb {
        return Err(Error::validation("artifact injection needs an RGB image"));
    }
    if !region.inside(img.width(), img.height()) {
        return Err(Error::validation(format!(
            "injection region {region:?} leaves the {}x{} image",
            img.width(),
            img.height()
        )));
    }
    if !(strength.is_finite() && strength >= 0.0) {
        return Err(Error::validation(format!("strength must be finite and non-negative, got {strength}")));
    }
    if strength == 0.0 {
        return Ok(img.clone());
    }
    Ok(match kind {
        ArtifactType::Texture => {
            let r = strength.round() as usize;
            paste_planes(img, region, |p| box_blur(p, r))
        }
        ArtifactType::Text => paste_planes(img, region, |p| gaussian_blur(p, strength)),
        ArtifactType::Boundary => rotate_region(img, region, strength),
        ArtifactType::ColorLarge | ArtifactType::ColorSmall => tint_region(img, region, strength),
    })
}

/// Replaces `region` of every plane with the same region of `f(plane)`.
fn paste_planes(img: &RasterImage, region: &BoundingBox, f: impl Fn(&Plane) -> Plane) -> RasterImage {
    let planes = img
        .planes()
        .iter()
        .map(|p| {
            let done = f(p);
            Plane::from_fn(p.width(), p.height(), |x, y| {
                if region.contains_pixel(x as u32, y as u32) {
                    done.at(x, y).clamp(0.0, 1.0)
                } else {
                    p.at(x, y)
                }
            })
        })
        .collect();
    RasterImage::from_planes_unchecked(img.colorspace(), planes)
}

fn bilinear(p: &Plane, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    let top = p.at_clamped(x0, y0) * (1.0 - fx) + p.at_clamped(x0 + 1, y0) * fx;
    let bot = p.at_clamped(x0, y0 + 1) * (1.0 - fx) + p.at_clamped(x0 + 1, y0 + 1) * fx;
    top * (1.0 - fy) + bot * fy
}

fn rotate_region(img: &RasterImage, region: &BoundingBox, degrees: f64) -> RasterImage {
    let (s, c) = degrees.to_radians().sin_cos();
    let (cx, cy) = region.center();
    let planes = img
        .planes()
        .iter()
        .map(|p| {
            Plane::from_fn(p.width(), p.height(), |x, y| {
                if !region.contains_pixel(x as u32, y as u32) {
                    return p.at(x, y);
                }
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                let sx = cx + c * dx - s * dy - 0.5;
                let sy = cy + s * dx + c * dy - 0.5;
                bilinear(p, sx, sy).clamp(0.0, 1.0)
            })
        })
        .collect();
    RasterImage::from_planes_unchecked(ColorSpace::Rgb, planes)
}

fn tinted_pixels(lab: &[[f64; 3]], magnitude: f64) -> Vec<[f64; 3]> {
    let (s, c) = TINT_ANGLE_DEG.to_radians().sin_cos();
    lab.iter()
        .map(|&[l, a, b]| rgb_from_lab_pixel([l, a + magnitude * c, b + magnitude * s]).map(|v| v.clamp(0.0, 1.0)))
        .collect()
}

fn mean_de(lab: &[[f64; 3]], rgb: &[[f64; 3]]) -> f64 {
    lab.iter()
        .zip(rgb)
        .map(|(&o, &p)| delta_e00(o, lab_from_rgb_pixel(p)))
        .sum::<f64>()
        / lab.len() as f64
}

/// Tint whose magnitude is found by bisection on the region's mean CIEDE2000.
fn tint_region(img: &RasterImage, region: &BoundingBox, target: f64) -> RasterImage {
    let coords: Vec<(usize, usize)> = (region.y..region.bottom())
        .flat_map(|y| (region.x..region.right()).map(move |x| (x as usize, y as usize)))
        .collect();
    let lab: Vec<[f64; 3]> = coords.iter().map(|&(x, y)| lab_from_rgb_pixel(img.pixel(x, y))).collect();
    let (mut lo, mut hi) = (0.0, 160.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if mean_de(&lab, &tinted_pixels(&lab, mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tinted = tinted_pixels(&lab, 0.5 * (lo + hi));
    let mut planes: Vec<Plane> = img.planes().to_vec();
    let (w, _) = (img.width(), img.height());
    let mut data: Vec<Vec<f64>> = planes.iter().map(|p| p.data().to_vec()).collect();
    for (&(x, y), px) in coords.iter().zip(&tinted) {
        for c in 0..3 {
            data[c][y * w + x] = px[c];
        }
    }
    for (p, d) in planes.iter_mut().zip(data) {
        *p = Plane::from_vec(p.width(), p.height(), d);
    }
    RasterImage::from_planes_unchecked(ColorSpace::Rgb, planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::rgb_to_lab;
    use crate::kernels::{ciede2000_map, pixelwise_msssim};

    fn scene(w: usize, h: usize) -> RasterImage {
        RasterImage::rgb_from_fn(w, h, |x, y| {
            let t = ((x * 13 + y * 7) % 23) as f64 / 23.0;
            [0.3 + 0.4 * t, 0.5 + 0.1 * (x as f64 * 0.1).sin(), 0.4 + 0.2 * (y as f64 / h as f64)]
        })
    }

    fn outside_unchanged(a: &RasterImage, b: &RasterImage, r: &BoundingBox) {
        for y in 0..a.height() {
            for x in 0..a.width() {
                if !r.contains_pixel(x as u32, y as u32) {
                    assert_eq!(a.pixel(x, y), b.pixel(x, y));
                }
            }
        }
    }

    #[test]
    fn zero_strength_is_identity() {
        let img = scene(64, 48);
        let r = BoundingBox::new(10, 10, 20, 20);
        for kind in ArtifactType::ALL {
            assert_eq!(inject_synthetic_artifact(&img, kind, &r, 0.0).unwrap(), img);
        }
    }

    #[test]
    fn degradations_stay_inside_the_region() {
        let img = scene(80, 64);
        let r = BoundingBox::new(20, 12, 30, 40);
        for (kind, s) in [
            (ArtifactType::Texture, 3.0),
            (ArtifactType::Boundary, 25.0),
            (ArtifactType::ColorLarge, 5.0),
            (ArtifactType::Text, 1.5),
        ] {
            let out = inject_synthetic_artifact(&img, kind, &r, s).unwrap();
            assert_ne!(out, img, "{kind}");
            outside_unchanged(&img, &out, &r);
        }
        assert!(inject_synthetic_artifact(&img, ArtifactType::Text, &BoundingBox::new(70, 0, 20, 5), 1.0).is_err());
    }

    #[test]
    fn color_tint_hits_the_requested_delta_e() {
        let img = scene(200, 200);
        let r = BoundingBox::new(20, 30, 128, 128);
        let out = inject_synthetic_artifact(&img, ArtifactType::ColorLarge, &r, 5.0).unwrap();
        let h = ciede2000_map(&rgb_to_lab(&img).unwrap(), &rgb_to_lab(&out).unwrap()).unwrap();
        let mut s = 0.0;
        for y in r.y..r.bottom() {
            for x in r.x..r.right() {
                s += h.at(x as usize, y as usize);
            }
        }
        let mean = s / r.area() as f64;
        assert!((4.0..=6.0).contains(&mean), "{mean}");
    }

    #[test]
    fn texture_blur_drops_msssim_in_region() {
        let img = RasterImage::rgb_from_fn(256, 256, |x, y| {
            let v = 0.5 + 0.3 * ((x as f64 * 1.3).sin() * (y as f64 * 0.9).cos());
            [v, v, v]
        });
        let r = BoundingBox::new(64, 64, 128, 128);
        let out = inject_synthetic_artifact(&img, ArtifactType::Texture, &r, 3.0).unwrap();
        let m = pixelwise_msssim(img.plane(0), out.plane(0)).unwrap().map;
        let mut s = 0.0;
        for y in 64..192 {
            for x in 64..192 {
                s += m.at(x, y);
            }
        }
        assert!(s / (128.0 * 128.0) < 0.95);
    }
}
