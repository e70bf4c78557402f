use super::{first_window, ArtifactType, Detection, DetectionFlag, DetectorConfig};
use crate::error::Result;
use crate::image::ImageTriplet;
use crate::kernels::{avg_pool, canny_edges, gradient_cosine_map, sobel_gradients, PooledMap};

/// Pooled `(H_trad - H_neural) * B` where `H` is the gradient cosine against
/// the original and `B` the Canny edges of the original; `None` without edges.
pub fn boundary_delta_map(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<Option<PooledMap>> {
    let [orig, neural, trad] = t.luma()?;
    let edges = canny_edges(orig, cfg.canny_low, cfg.canny_high)?;
    if edges.is_empty() {
        return Ok(None);
    }
    let g_orig = sobel_gradients(orig)?;
    let h_neural = gradient_cosine_map(&g_orig, &sobel_gradients(neural)?)?;
    let h_trad = gradient_cosine_map(&g_orig, &sobel_gradients(trad)?)?;
    let diff = h_trad.zip_map(&h_neural, |a, b| a - b)?;
    Ok(Some(avg_pool(&edges.apply(&diff)?, cfg.boundary_pool, cfg.boundary_step)?))
}

pub fn detect_boundary(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<Detection> {
    Ok(match boundary_delta_map(t, cfg)? {
        Some(pooled) => Detection::from_pooled(ArtifactType::Boundary, &pooled),
        None => Detection::new(ArtifactType::Boundary, first_window(t, cfg.boundary_pool), 0.0)
            .flagged(DetectionFlag::NoEdges),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RasterImage;

    fn grid(x: f64, y: f64) -> f64 {
        let gx = (x / 12.0).floor() as i64;
        let gy = (y / 12.0).floor() as i64;
        if (gx + gy) % 2 == 0 {
            0.25
        } else {
            0.75
        }
    }

    /// Grid image whose content inside the square `[x0, x0 + s)^2` is rotated
    /// by `deg` degrees about the square's center.
    fn rotated_grid(w: usize, h: usize, x0: usize, y0: usize, s: usize, deg: f64) -> RasterImage {
        let (c, sn) = (deg.to_radians().cos(), deg.to_radians().sin());
        let (cx, cy) = (x0 as f64 + s as f64 / 2.0, y0 as f64 + s as f64 / 2.0);
        RasterImage::rgb_from_fn(w, h, |x, y| {
            let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
            let inside = (x0..x0 + s).contains(&x) && (y0..y0 + s).contains(&y);
            let v = if inside {
                let (dx, dy) = (xf - cx, yf - cy);
                grid(cx + c * dx - sn * dy, cy + sn * dx + c * dy)
            } else {
                grid(xf, yf)
            };
            [v, v, v]
        })
    }

    #[test]
    fn identical_triplet_scores_zero() {
        let img = rotated_grid(96, 96, 0, 0, 1, 0.0);
        let t = ImageTriplet::new(img.clone(), img.clone(), img).unwrap();
        assert_eq!(detect_boundary(&t, &DetectorConfig::default()).unwrap().confidence, 0.0);
    }

    #[test]
    fn edge_free_image_is_flagged() {
        // Low-amplitude noise stays under the hysteresis thresholds.
        let img = RasterImage::rgb_from_fn(64, 64, |x, y| {
            let v = 0.5 + 0.004 * (((x * 7919 + y * 104729) % 13) as f64 / 13.0);
            [v, v, v]
        });
        let t = ImageTriplet::new(img.clone(), img.clone(), img).unwrap();
        let d = detect_boundary(&t, &DetectorConfig::default()).unwrap();
        assert_eq!((d.confidence, d.flag), (0.0, Some(DetectionFlag::NoEdges)));
    }

    #[test]
    fn rotated_block_is_localized() {
        let orig = rotated_grid(192, 160, 0, 0, 1, 0.0);
        let neural = rotated_grid(192, 160, 96, 48, 64, 15.0);
        let t = ImageTriplet::new(orig.clone(), neural, orig).unwrap();
        let cfg = DetectorConfig::default();
        let d = detect_boundary(&t, &cfg).unwrap();
        assert!(d.confidence > 0.0);
        let (cx, cy) = d.center;
        assert!((96..160).contains(&cx) && (48..112).contains(&cy), "{d:?}");

        // Oracle: evaluate the map directly at the reported cell.
        let [o, n, _] = t.luma().unwrap();
        let e = canny_edges(o, cfg.canny_low, cfg.canny_high).unwrap();
        let go = sobel_gradients(o).unwrap();
        let hn = gradient_cosine_map(&go, &sobel_gradients(n).unwrap()).unwrap();
        let mut s = 0.0;
        for y in d.bbox.y..d.bbox.bottom() {
            for x in d.bbox.x..d.bbox.right() {
                if e.get(x as usize, y as usize) {
                    s += 1.0 - hn.at(x as usize, y as usize);
                }
            }
        }
        assert!((s / d.bbox.area() as f64 - d.confidence).abs() < 1e-9);
    }

    #[test]
    fn swapping_codecs_negates_the_map() {
        let orig = rotated_grid(128, 128, 0, 0, 1, 0.0);
        let neural = rotated_grid(128, 128, 40, 40, 48, 20.0);
        let trad = rotated_grid(128, 128, 10, 70, 40, -10.0);
        let t = ImageTriplet::new(orig, neural, trad).unwrap();
        let cfg = DetectorConfig::default();
        let a = boundary_delta_map(&t, &cfg).unwrap().unwrap();
        let b = boundary_delta_map(&t.swapped(), &cfg).unwrap().unwrap();
        for (x, y) in a.values.data().iter().zip(b.values.data()) {
            assert_eq!(*x, -*y);
        }
    }
}
