//! Detection, localization and scoring of visual artifacts produced by
//! learning-based image codecs.
//!
//! Every detector compares a neural-compressed image against a
//! traditionally-compressed reference of matched bitrate, both measured
//! against the pristine original. The crate is organized bottom-up:
//!
//! 1. [`image`] – normalized rasters, color-space conversion, crops and
//!    checkerboard composites.
//! 2. [`kernels`] – metric and filtering primitives (SI, Sobel, Canny,
//!    SSIM / MS-SSIM maps, CIEDE2000, FSIM, local variance, pooling).
//! 3. [`detectors`] – the five artifact detectors (texture, boundary, large
//!    color, small color, text).
//! 4. [`annotations`] – bounding boxes, artifact records, cross-preset
//!    deduplication and the annotation document format.
//! 5. [`evaluation`] – delta scoring of baseline metrics, ROC-AUC,
//!    benchmark runs and the synthetic artifact generator.

pub mod annotations;
pub mod detectors;
pub mod error;
pub mod evaluation;
pub mod image;
pub mod kernels;

pub use annotations::{ArtifactRecord, BoundingBox, QualityPreset};
pub use detectors::{ArtifactType, Detection, DetectorConfig, TextRegion};
pub use error::{Error, Result};
pub use image::{ColorSpace, ImageTriplet, Plane, RasterImage};
pub use kernels::{BinaryMap, GradientField, PixelMap};
