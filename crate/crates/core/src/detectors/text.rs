use super::{ArtifactType, Detection, DetectorConfig, TextRegion};
use crate::annotations::{iou, BoundingBox};
use crate::error::Result;
use crate::image::ops::crop_plane;
use crate::image::{expand_and_clamp_box, ImageTriplet, Plane};
use crate::kernels::fsim::{fsim, FSIM_MIN_SIZE};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TextOutput {
    pub detections: Vec<Detection>,
    /// One message per region skipped because it left the image.
    pub warnings: Vec<String>,
}

/// Pixel box covering the polygon, or `None` if a vertex is outside the image.
fn polygon_box(region: &TextRegion, w: usize, h: usize) -> Option<BoundingBox> {
    let (x0, y0, x1, y1) = region.bounds();
    if x0 < 0.0 || y0 < 0.0 || x1 > w as f64 || y1 > h as f64 {
        return None;
    }
    let (bx0, by0) = (x0.floor() as u32, y0.floor() as u32);
    let bx1 = (x1.ceil() as u32).clamp(bx0 + 1, w as u32);
    let by1 = (y1.ceil() as u32).clamp(by0 + 1, h as u32);
    Some(BoundingBox::from_corners(bx0.min(bx1 - 1), by0.min(by1 - 1), bx1, by1))
}

/// FSIM of two crops taken over `bbox`, grown around its center to the
/// minimum FSIM size when needed.
fn crop_fsim(a: &Plane, b: &Plane, bbox: &BoundingBox) -> Result<f64> {
    let min = FSIM_MIN_SIZE as u32;
    let grown = expand_and_clamp_box(
        bbox,
        bbox.w.max(min),
        bbox.h.max(min),
        a.width() as u32,
        a.height() as u32,
    );
    fsim(&crop_plane(a, &grown), &crop_plane(b, &grown))
}

/// Transitively merges boxes whose IoU exceeds `threshold`. Each group
/// becomes its union rectangle with the largest member confidence; groups
/// are ordered by their first member.
pub fn merge_boxes(items: &[(BoundingBox, f64)], threshold: f64) -> Vec<(BoundingBox, f64)> {
    let n = items.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if iou(&items[i].0, &items[j].0) > threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<(usize, BoundingBox, f64)> = Vec::new();
    for (i, &(b, c)) in items.iter().enumerate() {
        let root = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == root) {
            Some(g) => {
                g.1 = g.1.union(&b);
                g.2 = g.2.max(c);
            }
            None => groups.push((root, b, c)),
        }
    }
    groups.into_iter().map(|(_, b, c)| (b, c)).collect()
}

/// Scores each confident, large-enough text polygon by
/// `FSIM(orig, trad) - FSIM(orig, neural)` on luma crops, keeps the
/// non-negative ones, enlarges their boxes and merges overlapping ones.
pub fn detect_text(t: &ImageTriplet, regions: &[TextRegion], cfg: &DetectorConfig) -> Result<TextOutput> {
    let mut out = TextOutput::default();
    let (w, h) = (t.width(), t.height());
    let mut scored = Vec::new();
    for (i, region) in regions.iter().enumerate() {
        region.validate()?;
        if region.detector_confidence < cfg.text_conf_min {
            continue;
        }
        let Some(bbox) = polygon_box(region, w, h) else {
            out.warnings.push(format!("text region {i} lies outside the {w}x{h} image; skipped"));
            continue;
        };
        if bbox.w < cfg.text_min_w || bbox.h < cfg.text_min_h {
            continue;
        }
        let [orig, neural, trad] = t.luma()?;
        let conf = crop_fsim(orig, trad, &bbox)? - crop_fsim(orig, neural, &bbox)?;
        if conf < 0.0 {
            continue;
        }
        let enlarged = expand_and_clamp_box(&bbox, cfg.text_crop_w, cfg.text_crop_h, w as u32, h as u32);
        scored.push((enlarged, conf));
    }
    out.detections = merge_boxes(&scored, cfg.text_merge_iou)
        .into_iter()
        .map(|(b, c)| Detection::new(ArtifactType::Text, b, c))
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RasterImage;
    use crate::kernels::gaussian_blur;

    fn page(w: usize, h: usize) -> RasterImage {
        RasterImage::rgb_from_fn(w, h, |x, y| {
            let ink = (y % 30) < 18 && (x % 9) < 3 && ((x / 9 + y / 30) % 5) != 0;
            let v = if ink { 0.1 } else { 0.9 };
            [v, v, v]
        })
    }

    fn blurred(img: &RasterImage, sigma: f64) -> RasterImage {
        let planes = img.planes().iter().map(|p| gaussian_blur(p, sigma)).collect();
        RasterImage::new(img.colorspace(), planes).unwrap()
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64, c: f64) -> TextRegion {
        TextRegion::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]], c).unwrap()
    }

    #[test]
    fn no_regions_no_detections() {
        let img = page(64, 64);
        let t = ImageTriplet::new(img.clone(), img.clone(), img).unwrap();
        let out = detect_text(&t, &[], &DetectorConfig::default()).unwrap();
        assert!(out.detections.is_empty() && out.warnings.is_empty());
    }

    #[test]
    fn equal_crops_score_zero() {
        let img = page(400, 300);
        let noisy = blurred(&img, 1.0);
        let t = ImageTriplet::new(img, noisy.clone(), noisy).unwrap();
        let out = detect_text(&t, &[rect(10.0, 10.0, 200.0, 40.0, 0.9)], &DetectorConfig::default()).unwrap();
        assert_eq!(out.detections.len(), 1);
        assert_eq!(out.detections[0].confidence, 0.0);
        assert_eq!(out.detections[0].bbox, BoundingBox::new(0, 0, 300, 300));
    }

    #[test]
    fn filtering_rules() {
        let img = page(400, 300);
        let t = ImageTriplet::new(img.clone(), blurred(&img, 1.0), img).unwrap();
        let cfg = DetectorConfig::default();
        let regions = [
            rect(10.0, 10.0, 200.0, 40.0, 0.69),  // below the confidence cut
            rect(10.0, 10.0, 200.0, 29.0, 0.95),  // 19 px tall
            rect(10.0, 10.0, 29.5, 200.0, 0.95),  // 20 px wide after rounding out
            rect(350.0, 250.0, 420.0, 290.0, 0.9), // leaves the image
        ];
        let out = detect_text(&t, &regions, &cfg).unwrap();
        assert_eq!(out.detections.len(), 1);
        assert!(out.detections[0].confidence > 0.0);
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("region 3"));
    }

    #[test]
    fn degraded_traditional_text_is_not_reported() {
        let img = page(320, 200);
        let t = ImageTriplet::new(img.clone(), img.clone(), blurred(&img, 1.2)).unwrap();
        let out = detect_text(&t, &[rect(10.0, 10.0, 200.0, 60.0, 0.9)], &DetectorConfig::default()).unwrap();
        assert!(out.detections.is_empty());
        let back = detect_text(&t.swapped(), &[rect(10.0, 10.0, 200.0, 60.0, 0.9)], &DetectorConfig::default()).unwrap();
        assert_eq!(back.detections.len(), 1);
        assert!(back.detections[0].confidence > 0.0);
    }

    #[test]
    fn merge_examples() {
        let a = BoundingBox::new(0, 0, 300, 300);
        let b = BoundingBox::new(100, 0, 300, 300);
        assert!((iou(&a, &b) - 0.5).abs() < 1e-12);
        let merged = merge_boxes(&[(a, 0.1), (b, 0.3)], 0.12);
        assert_eq!(merged, vec![(BoundingBox::new(0, 0, 400, 300), 0.3)]);

        // Chain a-b-c merges even though a and c do not overlap.
        let c = BoundingBox::new(200, 0, 300, 300);
        let far = BoundingBox::new(1000, 0, 300, 300);
        let m = merge_boxes(&[(far, -0.2), (a, 0.1), (c, 0.05), (b, 0.0)], 0.12);
        assert_eq!(m, vec![(far, -0.2), (BoundingBox::new(0, 0, 500, 300), 0.1)]);
    }
}
