//! Procedural test scenes and labeled benchmark sets.
//!
//! A scene has a textured mosaic in its upper part and a block of synthetic
//! text on a smooth background below. Artifacts are injected into the neural
//! member only; both compressed members get independent sensor-like noise.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{inject_synthetic_artifact, Manifest, ManifestEntry};
use crate::annotations::BoundingBox;
use crate::detectors::{ArtifactType, TextRegion};
use crate::error::{Error, Result};
use crate::image::{save_png, ImageTriplet, Plane, RasterImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    /// Range of the per-member Gaussian noise sigma.
    pub noise_min: f64,
    pub noise_max: f64,
    pub texture_radius: f64,
    pub boundary_degrees: f64,
    pub color_large_de: f64,
    pub color_small_de: f64,
    pub text_sigma: f64,
    pub texture_size: u32,
    pub boundary_size: u32,
    pub color_large_size: u32,
    pub color_small_size: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 384,
            height: 384,
            noise_min: 0.002,
            noise_max: 0.015,
            texture_radius: 3.0,
            boundary_degrees: 30.0,
            color_large_de: 5.0,
            color_small_de: 25.0,
            text_sigma: 0.9,
            texture_size: 128,
            boundary_size: 64,
            color_large_size: 160,
            color_small_size: 48,
        }
    }
}

impl SynthConfig {
    pub fn strength(&self, kind: ArtifactType) -> f64 {
        match kind {
            ArtifactType::Texture => self.texture_radius,
            ArtifactType::Boundary => self.boundary_degrees,
            ArtifactType::ColorLarge => self.color_large_de,
            ArtifactType::ColorSmall => self.color_small_de,
            ArtifactType::Text => self.text_sigma,
        }
    }

    fn region_size(&self, kind: ArtifactType) -> u32 {
        match kind {
            ArtifactType::Texture => self.texture_size,
            ArtifactType::Boundary => self.boundary_size,
            ArtifactType::ColorLarge => self.color_large_size,
            ArtifactType::ColorSmall => self.color_small_size,
            ArtifactType::Text => 0,
        }
    }

    /// Rows `0..top_rows()` hold the mosaic; the text block lives below.
    pub fn top_rows(&self) -> usize {
        self.height * 3 / 5
    }

    fn check(&self) -> Result<()> {
        let need = [self.texture_size, self.boundary_size, self.color_large_size, self.color_small_size]
            .into_iter()
            .max()
            .unwrap_or(0) as usize;
        if self.width < 300 || self.top_rows() < need || self.height - self.top_rows() < 140 {
            return Err(Error::validation(format!(
                "synthetic scenes need at least 300 px width, {need} mosaic rows and 140 text rows ({}x{} given)",
                self.width, self.height
            )));
        }
        if !(0.0 <= self.noise_min && self.noise_min <= self.noise_max) {
            return Err(Error::validation("noise range must satisfy 0 <= min <= max"));
        }
        Ok(())
    }
}

/// The artifact that was put into a sample's neural member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub kind: ArtifactType,
    pub region: BoundingBox,
    pub strength: f64,
}

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub id: String,
    pub triplet: ImageTriplet,
    pub text_regions: Vec<TextRegion>,
    pub injection: Option<Injection>,
}

pub struct Scene {
    pub image: RasterImage,
    pub text_regions: Vec<TextRegion>,
    /// Union of the text line boxes.
    pub text_block: BoundingBox,
}

/// Bilinearly interpolated lattice noise in `[-1, 1]`.
fn value_noise(rng: &mut ChaCha8Rng, w: usize, h: usize, cell: usize) -> Plane {
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
    Plane::from_fn(w, h, |x, y| {
        let (fx, fy) = (x as f64 / cell as f64, y as f64 / cell as f64);
        let (ix, iy) = (fx as usize, fy as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let g = |i: usize, j: usize| grid[j * gw + i];
        let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
        let bot = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bot * ty
    })
}

/// Glyph strokes inside a 12x22 cell: (x, y, w, h) rectangles.
const GLYPHS: [&[(usize, usize, usize, usize)]; 6] = [
    &[(1, 2, 3, 18), (1, 2, 9, 3), (1, 10, 7, 3)],
    &[(1, 2, 3, 18), (7, 2, 3, 18), (1, 10, 9, 3)],
    &[(1, 2, 9, 3), (4, 2, 3, 18)],
    &[(1, 2, 3, 18), (1, 17, 9, 3)],
    &[(1, 2, 9, 3), (1, 17, 9, 3), (1, 2, 3, 18), (7, 2, 3, 18)],
    &[(1, 8, 9, 3), (1, 8, 3, 12), (7, 8, 3, 12), (1, 17, 9, 3)],
];

pub fn generate_scene(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Scene> {
    cfg.check()?;
    let (w, h, top) = (cfg.width, cfg.height, cfg.top_rows());

    // Smooth background: a slow color ramp with random phase per channel.
    let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let freq: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.004..0.012));
    let mut rgb: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            (0..w * h)
                .map(|i| {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    0.55 + 0.12 * (freq[c] * (x + 0.7 * y) + phase[c]).sin()
                })
                .collect()
        })
        .collect();

    // Mosaic of flat rectangles in the upper part.
    let tiles = w * top / 900;
    for _ in 0..tiles {
        let (tw, th) = (rng.random_range(12..48), rng.random_range(12..48));
        let x0 = rng.random_range(0..w.saturating_sub(tw).max(1));
        let y0 = rng.random_range(0..top.saturating_sub(th).max(1));
        let color: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.28..0.72));
        for y in y0..(y0 + th).min(top) {
            for x in x0..(x0 + tw).min(w) {
                for c in 0..3 {
                    rgb[c][y * w + x] = color[c];
                }
            }
        }
    }
    // Fine luminance texture over the mosaic.
    let fine = value_noise(rng, w, top, 2);
    let medium = value_noise(rng, w, top, 5);
    for y in 0..top {
        for x in 0..w {
            let t = 0.09 * fine.at(x, y) + 0.05 * medium.at(x, y);
            for plane in rgb.iter_mut() {
                plane[y * w + x] += t;
            }
        }
    }

    // Text block: four lines of dark glyphs.
    let cols = 20;
    let (cell_w, cell_h, pitch) = (12usize, 22usize, 30usize);
    let x0 = rng.random_range(16..=(w - cols * cell_w - 16));
    let y0 = top + rng.random_range(10..=18);
    let ink = rng.random_range(0.08..0.18);
    let mut text_regions = Vec::new();
    let mut block: Option<BoundingBox> = None;
    for line in 0..4 {
        let ly = y0 + line * pitch;
        let mut used = 0;
        for col in 0..cols {
            if rng.random_bool(0.15) && col > 0 && col + 1 < cols {
                continue;
            }
            used = col + 1;
            let glyph = GLYPHS[rng.random_range(0..GLYPHS.len())];
            for &(gx, gy, gw, gh) in glyph {
                for y in ly + gy..ly + gy + gh {
                    for x in x0 + col * cell_w + gx..x0 + col * cell_w + gx + gw {
                        for plane in rgb.iter_mut() {
                            plane[y * w + x] = ink;
                        }
                    }
                }
            }
        }
        let (px0, py0) = (x0 as f64 - 2.0, ly as f64);
        let (px1, py1) = ((x0 + used * cell_w) as f64 + 2.0, (ly + cell_h) as f64 + 2.0);
        text_regions.push(TextRegion::new(vec![[px0, py0], [px1, py0], [px1, py1], [px0, py1]], 0.9)?);
        let b = BoundingBox::from_corners(px0 as u32, py0 as u32, px1 as u32, py1 as u32);
        block = Some(block.map_or(b, |k| k.union(&b)));
    }

    let planes = rgb
        .into_iter()
        .map(|d| Plane::new(w, h, d.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Scene {
        image: RasterImage::new(crate::image::ColorSpace::Rgb, planes)?,
        text_regions,
        text_block: block.expect("four lines drawn"),
    })
}

fn add_noise(img: &RasterImage, sigma: f64, rng: &mut ChaCha8Rng) -> Result<RasterImage> {
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::validation(e.to_string()))?;
    let planes = img
        .planes()
        .iter()
        .map(|p| Plane::new(p.width(), p.height(), p.data().iter().map(|v| (v + normal.sample(rng)).clamp(0.0, 1.0)).collect()))
        .collect::<Result<Vec<_>>>()?;
    RasterImage::new(img.colorspace(), planes)
}

/// Random region for `kind`: inside the mosaic, or the text block for text.
fn pick_region(cfg: &SynthConfig, kind: ArtifactType, scene: &Scene, rng: &mut ChaCha8Rng) -> BoundingBox {
    if kind == ArtifactType::Text {
        return scene.text_block;
    }
    let s = cfg.region_size(kind);
    let x = rng.random_range(0..=cfg.width as u32 - s);
    let y = rng.random_range(0..=cfg.top_rows() as u32 - s);
    BoundingBox::new(x, y, s, s)
}

/// One triplet, optionally carrying an artifact of `kind` in its neural member.
pub fn generate_sample(cfg: &SynthConfig, seed: u64, kind: Option<ArtifactType>) -> Result<SynthSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = generate_scene(cfg, &mut rng)?;
    let injection = match kind {
        Some(k) => Some(Injection {
            kind: k,
            region: pick_region(cfg, k, &scene, &mut rng),
            strength: cfg.strength(k),
        }),
        None => None,
    };
    let degraded = match &injection {
        Some(inj) => inject_synthetic_artifact(&scene.image, inj.kind, &inj.region, inj.strength)?,
        None => scene.image.clone(),
    };
    let sigma_n = rng.random_range(cfg.noise_min..=cfg.noise_max);
    let sigma_t = rng.random_range(cfg.noise_min..=cfg.noise_max);
    let neural = add_noise(&degraded, sigma_n, &mut rng)?;
    let trad = add_noise(&scene.image, sigma_t, &mut rng)?;
    let id = match kind {
        Some(k) => format!("s{seed:016x}_{k}"),
        None => format!("s{seed:016x}_clean"),
    };
    Ok(SynthSample {
        id,
        triplet: ImageTriplet::new(scene.image, neural, trad)?,
        text_regions: scene.text_regions,
        injection,
    })
}

fn family(k: ArtifactType) -> usize {
    match k {
        ArtifactType::Texture | ArtifactType::Boundary => 0,
        ArtifactType::ColorLarge | ArtifactType::ColorSmall => 1,
        ArtifactType::Text => 2,
    }
}

fn family_members(f: usize) -> &'static [ArtifactType] {
    match f {
        0 => &[ArtifactType::Texture, ArtifactType::Boundary],
        1 => &[ArtifactType::ColorLarge, ArtifactType::ColorSmall],
        _ => &[ArtifactType::Text],
    }
}

/// Labeled composition of one benchmark set: the injected kind of each
/// sample (`None` = clean) and its label. Positives carry `target`;
/// negatives are 16 clean samples plus 17 from each of the two other
/// artifact families, alternating within a family.
pub fn balanced_plan(target: ArtifactType) -> Vec<(Option<ArtifactType>, bool)> {
    let mut plan: Vec<(Option<ArtifactType>, bool)> = vec![(Some(target), true); 50];
    plan.extend(std::iter::repeat_n((None, false), 16));
    for f in (0..3).filter(|&f| f != family(target)) {
        let members = family_members(f);
        plan.extend((0..17).map(|i| (Some(members[i % members.len()]), false)));
    }
    plan
}

fn mix(seed: u64, i: u64) -> u64 {
    let mut z = seed ^ i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample seed for position `index` of the set for `target`.
pub fn sample_seed(seed: u64, target: ArtifactType, index: usize) -> u64 {
    mix(mix(seed, target as u64 + 1), index as u64)
}

/// Generates the full labeled set for `target`.
pub fn balanced_set(cfg: &SynthConfig, target: ArtifactType, seed: u64) -> Result<Vec<(SynthSample, bool)>> {
    use rayon::prelude::*;
    balanced_plan(target)
        .into_par_iter()
        .enumerate()
        .map(|(i, (kind, label))| Ok((generate_sample(cfg, sample_seed(seed, target, i), kind)?, label)))
        .collect()
}

/// Writes PNG triplets, text-region files and a JSON-lines manifest into
/// `dir`; returns the manifest.
pub fn write_samples(dir: &Path, samples: &[(SynthSample, Option<ArtifactType>, Option<bool>)]) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(samples.len());
    for (s, set, label) in samples {
        for (role, img) in [("orig", &s.triplet.orig), ("neural", &s.triplet.neural), ("trad", &s.triplet.trad)] {
            save_png(img, dir.join(format!("{}_{role}.png", s.id)))?;
        }
        let regions_name = format!("{}_text.json", s.id);
        let regions = serde_json::to_string(&s.text_regions).expect("regions serialize");
        let rp = dir.join(&regions_name);
        fs::write(&rp, regions).map_err(|e| Error::io(&rp, e))?;
        entries.push(ManifestEntry {
            id: s.id.clone(),
            orig: format!("{}_orig.png", s.id).into(),
            neural: format!("{}_neural.png", s.id).into(),
            trad: format!("{}_trad.png", s.id).into(),
            text_regions: Some(regions_name.into()),
            label: *label,
            artifact_type: *set,
            quality_preset: None,
            codec_version: None,
        });
    }
    let manifest = Manifest {
        entries,
        base_dir: dir.to_path_buf(),
    };
    let mp = dir.join("manifest.jsonl");
    fs::write(&mp, manifest.to_json_lines()).map_err(|e| Error::io(&mp, e))?;
    Ok(manifest)
}
