//! SSIM maps and a per-pixel multi-scale SSIM.

use super::filter::{convolve_separable, gaussian_kernel};
use super::{require_min_size, require_same_size, PixelMap};
use crate::error::Result;
use crate::image::Plane;

const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;

/// Standard five-scale exponents.
pub const MSSSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

/// Luminance term and contrast-structure term of SSIM, per pixel.
struct SsimParts {
    luminance: Plane,
    cs: Plane,
}

fn ssim_parts(a: &Plane, b: &Plane) -> SsimParts {
    let k = gaussian_kernel(WINDOW, SIGMA);
    let blur = |p: &Plane| convolve_separable(p, &k, &k);
    let mu_a = blur(a);
    let mu_b = blur(b);
    let aa = blur(&a.zip_map(a, |x, y| x * y).unwrap());
    let bb = blur(&b.zip_map(b, |x, y| x * y).unwrap());
    let ab = blur(&a.zip_map(b, |x, y| x * y).unwrap());
    let n = a.data().len();
    let (mut lum, mut cs) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (ma, mb) = (mu_a.data()[i], mu_b.data()[i]);
        let va = aa.data()[i] - ma * ma;
        let vb = bb.data()[i] - mb * mb;
        let cov = ab.data()[i] - ma * mb;
        lum.push((2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1));
        cs.push((2.0 * cov + C2) / (va + vb + C2));
    }
    SsimParts {
        luminance: Plane::from_vec(a.width(), a.height(), lum),
        cs: Plane::from_vec(a.width(), a.height(), cs),
    }
}

/// Per-pixel SSIM (11x11 Gaussian window, sigma 1.5, unit dynamic range).
pub fn ssim_map(a: &Plane, b: &Plane) -> Result<PixelMap> {
    require_same_size(a, b, "ssim")?;
    require_min_size(a, WINDOW, WINDOW, "ssim")?;
    let p = ssim_parts(a, b);
    Ok(p.luminance.zip_map(&p.cs, |l, c| l * c).unwrap())
}

/// Mean of [`ssim_map`].
pub fn ssim(a: &Plane, b: &Plane) -> Result<f64> {
    Ok(ssim_map(a, b)?.mean())
}

/// Output of [`pixelwise_msssim`].
#[derive(Debug, Clone, PartialEq)]
pub struct MsSsimMap {
    pub map: PixelMap,
    pub scales_used: usize,
    /// Set when the input was too small for all five scales and the
    /// exponents were renormalized over the scales that fit.
    pub fallback: bool,
}

fn downsample2(p: &Plane) -> Plane {
    let (w, h) = (p.width() / 2, p.height() / 2);
    Plane::from_fn(w, h, |x, y| {
        let (sx, sy) = (2 * x, 2 * y);
        0.25 * (p.at(sx, sy) + p.at(sx + 1, sy) + p.at(sx, sy + 1) + p.at(sx + 1, sy + 1))
    })
}

/// Bilinear resize with pixel-center alignment and edge clamping.
fn upsample_bilinear(p: &Plane, w: usize, h: usize) -> Plane {
    if p.width() == w && p.height() == h {
        return p.clone();
    }
    let sx = p.width() as f64 / w as f64;
    let sy = p.height() as f64 / h as f64;
    let axis = |i: usize, s: f64, n: usize| {
        let f = ((i as f64 + 0.5) * s - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = f.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, f - i0 as f64)
    };
    let cols: Vec<_> = (0..w).map(|x| axis(x, sx, p.width())).collect();
    let rows: Vec<_> = (0..h).map(|y| axis(y, sy, p.height())).collect();
    Plane::from_fn(w, h, |x, y| {
        let (x0, x1, fx) = cols[x];
        let (y0, y1, fy) = rows[y];
        let top = p.at(x0, y0) * (1.0 - fx) + p.at(x1, y0) * fx;
        let bot = p.at(x0, y1) * (1.0 - fx) + p.at(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    })
}

/// Number of dyadic scales for which every level still fits an SSIM window.
fn feasible_scales(w: usize, h: usize) -> usize {
    let mut n = 0;
    let (mut w, mut h) = (w, h);
    while n < MSSSIM_WEIGHTS.len() && w >= WINDOW && h >= WINDOW {
        n += 1;
        w /= 2;
        h /= 2;
    }
    n
}

fn scale_weights(n: usize) -> Vec<f64> {
    let total: f64 = MSSSIM_WEIGHTS[..n].iter().sum();
    MSSSIM_WEIGHTS[..n].iter().map(|w| w / total).collect()
}

/// Per-scale maps: contrast-structure below the coarsest scale, full SSIM at it.
fn scale_maps(a: &Plane, b: &Plane, n: usize) -> Vec<Plane> {
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut maps = Vec::with_capacity(n);
    for s in 0..n {
        let parts = ssim_parts(&a, &b);
        if s + 1 == n {
            maps.push(parts.luminance.zip_map(&parts.cs, |l, c| l * c).unwrap());
        } else {
            maps.push(parts.cs);
            a = downsample2(&a);
            b = downsample2(&b);
        }
    }
    maps
}

/// MS-SSIM evaluated per pixel: each scale's map is upsampled back to full
/// resolution, clamped to `[0, 1]` and combined as a weighted geometric product.
pub fn pixelwise_msssim(a: &Plane, b: &Plane) -> Result<MsSsimMap> {
    require_same_size(a, b, "ms-ssim")?;
    require_min_size(a, WINDOW, WINDOW, "ms-ssim")?;
    let n = feasible_scales(a.width(), a.height());
    let weights = scale_weights(n);
    let (w, h) = (a.width(), a.height());
    let mut acc = vec![1.0; w * h];
    for (map, wt) in scale_maps(a, b, n).iter().zip(&weights) {
        let up = upsample_bilinear(map, w, h);
        for (o, v) in acc.iter_mut().zip(up.data()) {
            *o *= v.clamp(0.0, 1.0).powf(*wt);
        }
    }
    Ok(MsSsimMap {
        map: Plane::from_vec(w, h, acc),
        scales_used: n,
        fallback: n < MSSSIM_WEIGHTS.len(),
    })
}

/// Scalar MS-SSIM: product of per-scale means raised to the scale exponents.
pub fn msssim(a: &Plane, b: &Plane) -> Result<f64> {
    require_same_size(a, b, "ms-ssim")?;
    require_min_size(a, WINDOW, WINDOW, "ms-ssim")?;
    let n = feasible_scales(a.width(), a.height());
    let weights = scale_weights(n);
    Ok(scale_maps(a, b, n)
        .iter()
        .zip(&weights)
        .map(|(m, w)| m.mean().max(0.0).powf(*w))
        .product())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::box_blur;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn texture(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phase: f64 = rng.random::<f64>() * 6.0;
        Plane::from_fn(w, h, |x, y| {
            let (xf, yf) = (x as f64, y as f64);
            let v = 0.5
                + 0.2 * (xf * 0.21 + phase).sin() * (yf * 0.13).cos()
                + 0.15 * ((xf + yf) * 0.05).sin()
                + 0.1 * (rng.random::<f64>() - 0.5);
            v.clamp(0.0, 1.0)
        })
    }

    /// Direct weighted-window SSIM at one pixel with replicate padding.
    fn naive_ssim(a: &Plane, b: &Plane, x: usize, y: usize) -> f64 {
        let k = gaussian_kernel(WINDOW, SIGMA);
        let r = (WINDOW / 2) as isize;
        let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (j, ky) in k.iter().enumerate() {
            for (i, kx) in k.iter().enumerate() {
                let sx = x as isize + i as isize - r;
                let sy = y as isize + j as isize - r;
                let (va, vb) = (a.at_clamped(sx, sy), b.at_clamped(sx, sy));
                let wgt = kx * ky;
                ma += wgt * va;
                mb += wgt * vb;
                aa += wgt * va * va;
                bb += wgt * vb * vb;
                ab += wgt * va * vb;
            }
        }
        let (va, vb, cov) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
        ((2.0 * ma * mb + C1) * (2.0 * cov + C2)) / ((ma * ma + mb * mb + C1) * (va + vb + C2))
    }

    #[test]
    fn identical_inputs_give_one() {
        let a = texture(40, 30, 1);
        assert!(ssim_map(&a, &a).unwrap().data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let m = pixelwise_msssim(&a, &a).unwrap();
        assert!(m.map.data().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn inverted_image_scores_low() {
        let a = Plane::from_fn(32, 32, |x, y| if (x / 4 + y / 4) % 2 == 0 { 0.9 } else { 0.1 });
        let b = a.map(|v| 1.0 - v);
        assert!(ssim(&a, &b).unwrap() < 0.0);
    }

    #[test]
    fn ramp_offset_matches_naive_oracle() {
        let a = Plane::from_fn(24, 20, |x, y| (x + 2 * y) as f64 / 70.0);
        let b = a.map(|v| v + 0.1);
        let m = ssim_map(&a, &b).unwrap();
        for &(x, y) in &[(0, 0), (23, 19), (12, 10), (5, 17)] {
            assert!((m.at(x, y) - naive_ssim(&a, &b, x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_inputs_match_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let a = Plane::from_fn(64, 64, |_, _| rng.random::<f64>());
            let b = Plane::from_fn(64, 64, |_, _| rng.random::<f64>());
            let m = ssim_map(&a, &b).unwrap();
            for &(x, y) in &[(0, 0), (63, 0), (31, 33), (63, 63), (2, 50)] {
                assert!((m.at(x, y) - naive_ssim(&a, &b, x, y)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn size_checks() {
        let a = Plane::filled(10, 20, 0.5);
        assert!(ssim_map(&a, &a).is_err());
        assert!(ssim_map(&Plane::filled(12, 12, 0.5), &Plane::filled(12, 13, 0.5)).is_err());
    }

    #[test]
    fn scale_fallback_is_flagged() {
        assert_eq!(feasible_scales(176, 176), 5);
        assert_eq!(feasible_scales(175, 400), 4);
        assert_eq!(feasible_scales(11, 11), 1);
        let a = texture(176, 180, 2);
        let b = box_blur(&a, 1);
        let full = pixelwise_msssim(&a, &b).unwrap();
        assert_eq!((full.scales_used, full.fallback), (5, false));
        let small = pixelwise_msssim(&texture(64, 64, 2), &texture(64, 64, 3)).unwrap();
        assert_eq!((small.scales_used, small.fallback), (3, true));
    }

    #[test]
    fn map_mean_tracks_scalar_msssim() {
        for seed in 0..4 {
            let a = texture(192, 192, seed);
            let b = box_blur(&a, 1);
            let m = pixelwise_msssim(&a, &b).unwrap().map.mean();
            let s = msssim(&a, &b).unwrap();
            assert!((m - s).abs() < 0.02, "map mean {m} vs scalar {s}");
        }
    }

    #[test]
    fn blur_lowers_map_where_detail_lives() {
        // Left half carries fine detail, right half is smooth.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Plane::from_fn(192, 192, |x, _| {
            if x < 96 {
                rng.random::<f64>()
            } else {
                0.5 + 0.1 * (x as f64 * 0.02).sin()
            }
        });
        let b = box_blur(&a, 4);
        let m = pixelwise_msssim(&a, &b).unwrap().map;
        let region = |x0: usize, x1: usize| {
            let mut s = 0.0;
            for y in 0..192 {
                for x in x0..x1 {
                    s += m.at(x, y);
                }
            }
            s / ((x1 - x0) * 192) as f64
        };
        assert!(region(0, 80) < region(112, 192));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn ssim_is_symmetric_and_bounded(seed in any::<u64>()) {
            let a = texture(24, 24, seed);
            let b = texture(24, 24, seed.wrapping_add(1));
            let ab = ssim_map(&a, &b).unwrap();
            let ba = ssim_map(&b, &a).unwrap();
            for (x, y) in ab.data().iter().zip(ba.data()) {
                prop_assert!((x - y).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(x));
            }
            let ms = pixelwise_msssim(&a, &b).unwrap().map;
            prop_assert!(ms.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
