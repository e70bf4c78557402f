use super::{first_window, ArtifactType, Detection, DetectionFlag, DetectorConfig};
use crate::error::Result;
use crate::image::ImageTriplet;
use crate::kernels::{avg_pool, pixelwise_msssim, si_map, threshold_mask, PooledMap};

/// Pooled `(H_trad - H_neural) * M` where `H` is pixel-wise MS-SSIM on luma
/// and `M` masks out flat regions of the original. Returns `None` when the
/// mask is empty, along with the number of MS-SSIM scales used.
pub fn texture_delta_map(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<(Option<PooledMap>, usize)> {
    let [orig, neural, trad] = t.luma()?;
    let mask = threshold_mask(&si_map(orig)?, cfg.si_threshold);
    if mask.is_empty() {
        return Ok((None, 0));
    }
    let h_neural = pixelwise_msssim(orig, neural)?;
    let h_trad = pixelwise_msssim(orig, trad)?;
    let diff = h_trad.map.zip_map(&h_neural.map, |a, b| a - b)?;
    let pooled = avg_pool(&mask.apply(&diff)?, cfg.texture_pool, cfg.texture_step)?;
    Ok((Some(pooled), h_neural.scales_used))
}

pub fn detect_texture(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<Detection> {
    let (pooled, scales) = texture_delta_map(t, cfg)?;
    let Some(pooled) = pooled else {
        let first = first_window(t, cfg.texture_pool);
        return Ok(Detection::new(ArtifactType::Texture, first, 0.0).flagged(DetectionFlag::NoTexturedRegion));
    };
    let d = Detection::from_pooled(ArtifactType::Texture, &pooled);
    Ok(if scales < 5 {
        d.flagged(DetectionFlag::ReducedMsSsimScales { scales })
    } else {
        d
    })
}
