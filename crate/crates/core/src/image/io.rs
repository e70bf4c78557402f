//! Decoding of PNG / PPM / PGM inputs and PNG export.

use std::path::Path;

use image::{DynamicImage, ImageReader};

use super::{ColorSpace, Plane, RasterImage};
use crate::error::{Error, Result};

/// Loads an 8- or 16-bit raster as an RGB image normalized to `[0, 1]`.
///
/// Grayscale inputs are replicated into three planes and alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: "unrecognized image format".into(),
        });
    }
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(source) => Error::io(path, source),
        other => Error::Format {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    from_dynamic(&decoded).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn from_dynamic(img: &DynamicImage) -> Result<RasterImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::validation(format!("image has zero dimension {w}x{h}")));
    }
    let n = w * h;
    let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut fill = |samples: &[f64], channels: usize| {
        for i in 0..n {
            let px = &samples[i * channels..];
            if channels < 3 {
                for plane in planes.iter_mut() {
                    plane[i] = px[0];
                }
            } else {
                for (c, plane) in planes.iter_mut().enumerate() {
                    plane[i] = px[c];
                }
            }
        }
    };
    match img {
        DynamicImage::ImageLuma8(b) => fill(&scale8(b.as_raw()), 1),
        DynamicImage::ImageLumaA8(b) => fill(&scale8(b.as_raw()), 2),
        DynamicImage::ImageRgb8(b) => fill(&scale8(b.as_raw()), 3),
        DynamicImage::ImageRgba8(b) => fill(&scale8(b.as_raw()), 4),
        DynamicImage::ImageLuma16(b) => fill(&scale16(b.as_raw()), 1),
        DynamicImage::ImageLumaA16(b) => fill(&scale16(b.as_raw()), 2),
        DynamicImage::ImageRgb16(b) => fill(&scale16(b.as_raw()), 3),
        DynamicImage::ImageRgba16(b) => fill(&scale16(b.as_raw()), 4),
        other => {
            return Err(Error::Format {
                path: Default::default(),
                reason: format!("unsupported sample layout {:?}", other.color()),
            })
        }
    }
    let planes = planes
        .into_iter()
        .map(|d| Plane::from_vec(w, h, d))
        .collect();
    Ok(RasterImage::from_planes_unchecked(ColorSpace::Rgb, planes))
}

fn scale8(raw: &[u8]) -> Vec<f64> {
    raw.iter().map(|&v| f64::from(v) / 255.0).collect()
}

fn scale16(raw: &[u16]) -> Vec<f64> {
    raw.iter().map(|&v| f64::from(v) / 65535.0).collect()
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an RGB or gray image as an 8-bit PNG.
pub fn save_png(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let dynamic = match img.colorspace() {
        ColorSpace::Gray => {
            let raw = img.plane(0).data().iter().map(|&v| quantize(v)).collect();
            DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, raw).expect("sized"))
        }
        ColorSpace::Rgb => {
            let mut raw = Vec::with_capacity(img.width() * img.height() * 3);
            let (r, g, b) = (img.plane(0).data(), img.plane(1).data(), img.plane(2).data());
            for i in 0..r.len() {
                raw.extend_from_slice(&[quantize(r[i]), quantize(g[i]), quantize(b[i])]);
            }
            DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, raw).expect("sized"))
        }
        other => {
            return Err(Error::validation(format!(
                "PNG export needs an RGB or gray image, got {other:?}"
            )))
        }
    };
    dynamic
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(source) => Error::io(path, source),
            other => Error::Format {
                path: path.to_path_buf(),
                reason: other.to_string(),
            },
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_pgm(dir: &Path, name: &str, w: usize, h: usize, maxval: u32, samples: &[u32]) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut bytes = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
        for &s in samples {
            if maxval > 255 {
                bytes.extend_from_slice(&(s as u16).to_be_bytes());
            } else {
                bytes.push(s as u8);
            }
        }
        std::fs::write(&path, bytes).unwrap();
        path
    }

    #[test]
    fn white_black_and_mid_gray() {
        let dir = tempfile::tempdir().unwrap();
        let white = load_image(write_pgm(dir.path(), "w.pgm", 2, 2, 255, &[255; 4])).unwrap();
        assert_eq!(white.colorspace(), ColorSpace::Rgb);
        assert!(white.planes().iter().all(|p| p.data().iter().all(|&v| v == 1.0)));
        let black = load_image(write_pgm(dir.path(), "k.pgm", 2, 2, 255, &[0; 4])).unwrap();
        assert!(black.planes().iter().all(|p| p.data().iter().all(|&v| v == 0.0)));
        let gray = load_image(write_pgm(dir.path(), "g.pgm", 1, 1, 255, &[128])).unwrap();
        assert!((gray.pixel(0, 0)[0] - 128.0 / 255.0).abs() < 1e-12);
        assert!((gray.pixel(0, 0)[0] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn sixteen_bit_is_normalized_by_its_own_maximum() {
        let dir = tempfile::tempdir().unwrap();
        let img = load_image(write_pgm(dir.path(), "d.pgm", 2, 1, 65535, &[65535, 32768])).unwrap();
        assert_eq!(img.pixel(0, 0)[0], 1.0);
        assert!((img.pixel(1, 0)[0] - 32768.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn png_round_trip_is_exact_for_8bit_values() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::rgb_from_fn(5, 3, |x, y| {
            [x as f64 * 51.0 / 255.0, y as f64 * 100.0 / 255.0, 7.0 / 255.0]
        });
        let path = dir.path().join("rt.png");
        save_png(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.width(), 5);
        assert_eq!(back.height(), 3);
        for (a, b) in img.planes().iter().zip(back.planes()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors_are_classified() {
        let dir = tempfile::tempdir().unwrap();
        match load_image(dir.path().join("missing.png")) {
            Err(Error::Io { .. }) => {}
            other => panic!("expected I/O error, got {other:?}"),
        }
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"definitely not an image").unwrap();
        match load_image(&junk) {
            Err(Error::Format { .. }) => {}
            other => panic!("expected format error, got {other:?}"),
        }
        let truncated = dir.path().join("trunc.pgm");
        std::fs::write(&truncated, b"P5\n4 4\n255\n\x01\x02").unwrap();
        assert!(load_image(&truncated).is_err());
    }
}
