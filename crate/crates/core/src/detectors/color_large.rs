use super::{ArtifactType, Detection, DetectorConfig};
use crate::error::Result;
use crate::image::ImageTriplet;
use crate::kernels::{avg_pool, band_filter, ciede2000_map, PooledMap};

/// Difference of the pooled, band-filtered CIEDE2000 maps. By default the
/// neural error minus the traditional error; `color_sign_flip` reverses it.
pub fn color_large_delta_map(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<PooledMap> {
    let [orig, neural, trad] = t.lab()?;
    let pooled = |img| -> Result<PooledMap> {
        let h = band_filter(&ciede2000_map(orig, img)?, cfg.color_band_lo, cfg.color_band_hi);
        avg_pool(&h, cfg.color_pool, cfg.color_step)
    };
    let p_neural = pooled(neural)?;
    let p_trad = pooled(trad)?;
    let (a, b) = if cfg.color_sign_flip {
        (&p_trad, &p_neural)
    } else {
        (&p_neural, &p_trad)
    };
    Ok(PooledMap {
        values: a.values.zip_map(&b.values, |x, y| x - y)?,
        ..p_neural.clone()
    })
}

pub fn detect_color_large(t: &ImageTriplet, cfg: &DetectorConfig) -> Result<Detection> {
    Ok(Detection::from_pooled(ArtifactType::ColorLarge, &color_large_delta_map(t, cfg)?))
}
