use super::contours::component_boxes;
use super::{ArtifactType, Detection, DetectorConfig};
use crate::error::Result;
use crate::image::{ImageTriplet, Plane, RasterImage};
use crate::kernels::{local_variance_map, BinaryMap, PixelMap};

/// Intermediate maps of the small-color detector.
#[derive(Debug, Clone)]
pub struct SmallColorMaps {
    /// `S_neural - S_trad` over the (U, V) channels.
    pub delta_uv: PixelMap,
    /// `S_neural - S_trad` over the (a, b) channels.
    pub delta_ab: PixelMap,
    /// Pixels above threshold in both channel pairs.
    pub mask: BinaryMap,
}

/// Sum of absolute differences over planes 1 and 2 (the chroma pair).
fn chroma_residual(orig: &RasterImage, other: &RasterImage) -> PixelMap {
    let (o1, o2) = (orig.plane(1), orig.plane(2));
    let (r1, r2) = (other.plane(1), other.plane(2));
    Plane::from_fn(orig.width(), orig.height(), |x, y| {
        (o1.at(x, y) - r1.at(x, y)).abs() + (o2.at(x, y) - r2.at(x, y)).abs()
    })
}

/// `S = var(R)^(1/5) * localvar(R)`.
fn scaled_map(residual: &PixelMap, n: usize) -> Result<PixelMap> {
    let sigma = residual.variance().powf(0.2);
    Ok(local_variance_map(residual, n)?.map(|m| sigma * m))
}

fn delta_for(images: &[RasterImage; 3], n: usize) -> Result<PixelMap> {
    let [orig, neural, trad] = images;
    let s_neural = scaled_map(&chroma_residual(orig, neural), n)?;
    let s_trad = scaled_map(&chroma_residual(orig, trad), n)?;
    s_neural.zip_map(&s_trad, |a, b| a - b)
}

pub fn color_small_maps(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<SmallColorMaps> {
    let delta_uv = delta_for(t.yuv()?, cfg.var_window)?;
    let delta_ab = delta_for(t.lab()?, cfg.var_window)?;
    let thr = cfg.small_color_threshold;
    let mask = BinaryMap::from_fn(t.width(), t.height(), |x, y| {
        delta_uv.at(x, y) > thr && delta_ab.at(x, y) > thr
    });
    Ok(SmallColorMaps {
        delta_uv,
        delta_ab,
        mask,
    })
}

/// One detection per connected component of the joint threshold mask whose
/// bounding rectangle covers at least `min_component_area` pixels.
pub fn detect_color_small(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<Vec<Detection>> {
    let maps = color_small_maps(t, cfg)?;
    if maps.mask.is_empty() {
        return Ok(Vec::new());
    }
    Ok(component_boxes(&maps.mask)
        .into_iter()
        .filter(|b| b.area() >= cfg.min_component_area)
        .map(|b| {
            let mut conf = f64::NEG_INFINITY;
            for y in b.y as usize..b.bottom() as usize {
                for x in b.x as usize..b.right() as usize {
                    conf = conf.max(maps.delta_uv.at(x, y).max(maps.delta_ab.at(x, y)));
                }
            }
            Detection::new(ArtifactType::ColorSmall, b, conf)
        })
        .collect())
}
