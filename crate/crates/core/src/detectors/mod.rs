//! The five artifact detectors. Each maps an [`ImageTriplet`] (plus text
//! polygons for the text detector) to detections.

mod boundary;
mod color_large;
mod color_small;
pub mod contours;
mod text;
mod texture;

pub use boundary::{boundary_delta_map, detect_boundary};
pub use color_large::{color_large_delta_map, detect_color_large};
pub use color_small::{color_small_maps, detect_color_small, SmallColorMaps};
pub use text::{detect_text, merge_boxes, TextOutput};
pub use texture::{detect_texture, texture_delta_map};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotations::BoundingBox;
use crate::error::{Error, Result};
use crate::image::ImageTriplet;
use crate::kernels::PooledMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactType {
    Texture,
    Boundary,
    ColorLarge,
    ColorSmall,
    Text,
}

impl ArtifactType {
    pub const ALL: [ArtifactType; 5] = [
        Self::Texture,
        Self::Boundary,
        Self::ColorLarge,
        Self::ColorSmall,
        Self::Text,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Texture => "texture",
            Self::Boundary => "boundary",
            Self::ColorLarge => "color_large",
            Self::ColorSmall => "color_small",
            Self::Text => "text",
        }
    }

    /// Color detections are validated with checkerboards rather than crops.
    pub fn is_color(self) -> bool {
        matches!(self, Self::ColorLarge | Self::ColorSmall)
    }
}

impl fmt::Display for ArtifactType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArtifactType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::validation(format!("unknown artifact type {s:?}")))
    }
}

/// Why a detector returned a zero-confidence placeholder, or a caveat on
/// how its score was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DetectionFlag {
    /// The SI mask of the original is empty.
    NoTexturedRegion,
    /// Canny found no edges in the original.
    NoEdges,
    /// The image was too small for five MS-SSIM scales.
    ReducedMsSsimScales { scales: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub artifact_type: ArtifactType,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub center: (u32, u32),
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<DetectionFlag>,
}

impl Detection {
    fn new(artifact_type: ArtifactType, bbox: BoundingBox, confidence: f64) -> Self {
        Self {
            artifact_type,
            bbox,
            center: bbox.center_pixel(),
            confidence,
            flag: None,
        }
    }

    /// Winning cell of a pooled difference map: box is the cell's window.
    fn from_pooled(artifact_type: ArtifactType, pooled: &PooledMap) -> Self {
        let (col, row, value) = pooled.argmax();
        Self::new(artifact_type, pooled.window(col, row), value)
    }

    fn flagged(mut self, flag: DetectionFlag) -> Self {
        self.flag = Some(flag);
        self
    }
}

/// Top-left pooling window, used as the box of placeholder results.
fn first_window(t: &ImageTriplet, size: usize) -> BoundingBox {
    BoundingBox::new(0, 0, size.min(t.width()) as u32, size.min(t.height()) as u32)
}

/// Text polygon from an external text detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRegion {
    pub polygon: Vec<[f64; 2]>,
    #[serde(rename = "confidence")]
    pub detector_confidence: f64,
}

impl TextRegion {
    pub fn new(polygon: Vec<[f64; 2]>, detector_confidence: f64) -> Result<Self> {
        let r = Self {
            polygon,
            detector_confidence,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if self.polygon.len() < 3 {
            return Err(Error::validation(format!(
                "text polygon needs at least 3 vertices, got {}",
                self.polygon.len()
            )));
        }
        if self.polygon.iter().flatten().any(|v| !v.is_finite()) || !self.detector_confidence.is_finite() {
            return Err(Error::validation("text region holds a non-finite value"));
        }
        Ok(())
    }

    /// Axis-aligned bounds `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.polygon.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), &[x, y]| (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        )
    }
}

/// Every tunable of the five detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub si_threshold: f64,
    pub texture_pool: usize,
    pub texture_step: usize,
    pub boundary_pool: usize,
    pub boundary_step: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    pub color_band_lo: f64,
    pub color_band_hi: f64,
    pub color_pool: usize,
    pub color_step: usize,
    /// `false`: score = pooled neural error minus pooled traditional error.
    /// `true`: the opposite difference.
    pub color_sign_flip: bool,
    pub var_window: usize,
    pub small_color_threshold: f64,
    pub min_component_area: u64,
    pub text_conf_min: f64,
    pub text_min_w: u32,
    pub text_min_h: u32,
    pub text_crop_w: u32,
    pub text_crop_h: u32,
    pub text_merge_iou: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            si_threshold: 0.05,
            texture_pool: 128,
            texture_step: 64,
            boundary_pool: 32,
            boundary_step: 16,
            canny_low: 0.1,
            canny_high: 0.2,
            color_band_lo: 3.0,
            color_band_hi: 8.0,
            color_pool: 128,
            color_step: 64,
            color_sign_flip: false,
            var_window: 33,
            small_color_threshold: 0.0015,
            min_component_area: 16,
            text_conf_min: 0.7,
            text_min_w: 20,
            text_min_h: 20,
            text_crop_w: 300,
            text_crop_h: 300,
            text_merge_iou: 0.12,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("si_threshold", self.si_threshold),
            ("canny_low", self.canny_low),
            ("canny_high", self.canny_high),
            ("color_band_hi", self.color_band_hi),
            ("small_color_threshold", self.small_color_threshold),
            ("text_merge_iou", self.text_merge_iou),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("texture_pool", self.texture_pool),
            ("texture_step", self.texture_step),
            ("boundary_pool", self.boundary_pool),
            ("boundary_step", self.boundary_step),
            ("color_pool", self.color_pool),
            ("color_step", self.color_step),
            ("text_crop_w", self.text_crop_w as usize),
            ("text_crop_h", self.text_crop_h as usize),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::validation(format!("{name} must be positive")));
            }
        }
        if self.var_window < 3 || self.var_window % 2 == 0 {
            return Err(Error::validation(format!(
                "var_window must be odd and at least 3, got {}",
                self.var_window
            )));
        }
        if self.canny_low > self.canny_high {
            return Err(Error::validation("canny_low exceeds canny_high"));
        }
        if !(self.color_band_lo >= 0.0 && self.color_band_lo < self.color_band_hi) {
            return Err(Error::validation("color band must satisfy 0 <= lo < hi"));
        }
        if !(0.0..=1.0).contains(&self.text_conf_min) || self.text_merge_iou > 1.0 {
            return Err(Error::validation("text thresholds must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Applies one `key=value` override. Values are read as JSON scalars, so
    /// `0.1`, `64` and `true` all work.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let map = doc.as_object_mut().expect("config is an object");
        let key = key.trim();
        if !map.contains_key(key) {
            return Err(Error::validation(format!("unknown detector parameter {key:?}")));
        }
        let parsed: serde_json::Value = serde_json::from_str(value.trim())
            .map_err(|_| Error::validation(format!("bad value {value:?} for {key}")))?;
        map.insert(key.to_owned(), parsed);
        *self = serde_json::from_value(doc)
            .map_err(|e| Error::validation(format!("bad value {value:?} for {key}: {e}")))?;
        Ok(())
    }

    /// Parses a `key=value` document; blank lines and `#` comments are ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                context: format!("line {}", n + 1),
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(k, v)?;
        }
        self.validate()
    }

    /// Canonical JSON of the configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`DetectorConfig::canonical_json`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Detections for one triplet plus any non-fatal warnings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorOutput {
    pub detections: Vec<Detection>,
    pub warnings: Vec<String>,
}

/// Runs the selected detectors in the order given.
pub fn run_detectors(
    triplet: &ImageTriplet,
    regions: &[TextRegion],
    cfg: &DetectorConfig,
    types: &[ArtifactType],
) -> Result<DetectorOutput> {
    let mut out = DetectorOutput::default();
    for &t in types {
        match t {
            ArtifactType::Texture => out.detections.push(detect_texture(triplet, cfg)?),
            ArtifactType::Boundary => out.detections.push(detect_boundary(triplet, cfg)?),
            ArtifactType::ColorLarge => out.detections.push(detect_color_large(triplet, cfg)?),
            ArtifactType::ColorSmall => out.detections.extend(detect_color_small(triplet, cfg)?),
            ArtifactType::Text => {
                let r = detect_text(triplet, regions, cfg)?;
                out.detections.extend(r.detections);
                out.warnings.extend(r.warnings);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_type_names() {
        for t in ArtifactType::ALL {
            assert_eq!(t.as_str().parse::<ArtifactType>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
        assert_eq!("color-large".parse::<ArtifactType>().unwrap(), ArtifactType::ColorLarge);
        assert!("blocking".parse::<ArtifactType>().is_err());
    }

    #[test]
    fn default_config_matches_published_constants() {
        let c = DetectorConfig::default();
        c.validate().unwrap();
        assert_eq!(c.si_threshold, 0.05);
        assert_eq!((c.texture_pool, c.boundary_pool, c.boundary_step), (128, 32, 16));
        assert_eq!((c.color_band_lo, c.color_band_hi, c.color_pool, c.color_step), (3.0, 8.0, 128, 64));
        assert_eq!((c.var_window, c.small_color_threshold), (33, 0.0015));
        assert_eq!((c.text_conf_min, c.text_min_w, c.text_min_h), (0.7, 20, 20));
        assert_eq!((c.text_crop_w, c.text_crop_h, c.text_merge_iou), (300, 300, 0.12));
    }

    #[test]
    fn overrides() {
        let mut c = DetectorConfig::default();
        c.apply_overrides("# tuned\ntexture_step = 32\ncolor_sign_flip=true\n\ncanny_low=0.05").unwrap();
        assert_eq!(c.texture_step, 32);
        assert!(c.color_sign_flip);
        assert_eq!(c.canny_low, 0.05);
        assert!(c.clone().set("nonsense", "1").is_err());
        assert!(c.clone().set("var_window", "abc").is_err());
        assert!(c.clone().apply_overrides("var_window=32").is_err());
        assert!(c.clone().apply_overrides("just text").is_err());
    }

    #[test]
    fn digest_tracks_every_field() {
        let a = DetectorConfig::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
        b.text_merge_iou = 0.13;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn text_region_schema() {
        let r: TextRegion = serde_json::from_str(r#"{"polygon": [[1,2],[5,2],[5,9]], "confidence": 0.8}"#).unwrap();
        assert_eq!(r.bounds(), (1.0, 2.0, 5.0, 9.0));
        assert!(TextRegion::new(vec![[0.0, 0.0], [1.0, 1.0]], 0.9).is_err());
    }
}
