use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotations::QualityPreset;
use crate::detectors::{ArtifactType, TextRegion};
use crate::error::{Error, Result};
use crate::image::{load_image, ImageTriplet};

/// One triplet of a manifest. Relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub orig: PathBuf,
    pub neural: PathBuf,
    pub trad: PathBuf,
    /// JSON array of text regions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_regions: Option<PathBuf>,
    /// Whether the entry holds an artifact of `artifact_type`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
    /// Benchmark set the entry belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact_type: Option<ArtifactType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_preset: Option<QualityPreset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codec_version: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

fn parse_err(context: String, e: serde_json::Error) -> Error {
    Error::Parse {
        context,
        message: e.to_string(),
    }
}

impl Manifest {
    /// Accepts either a JSON array of entries or one JSON object per line
    /// (blank lines and lines starting with `#` are ignored).
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let trimmed = text.trim_start();
        let entries: Vec<ManifestEntry> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed)
                .map_err(|e| parse_err(format!("manifest line {} column {}", e.line(), e.column()), e))?
        } else {
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
                .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(format!("manifest line {}", i + 1), e)))
                .collect::<Result<_>>()?
        };
        let mut ids = std::collections::HashSet::new();
        for e in &entries {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::validation(format!("duplicate manifest id {:?}", e.id)));
            }
        }
        Ok(Self {
            entries,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    /// JSON-lines form, one entry per line.
    pub fn to_json_lines(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("manifest entries serialize") + "\n")
            .collect()
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn load_triplet(&self, e: &ManifestEntry) -> Result<ImageTriplet> {
        let [o, n, t] = [&e.orig, &e.neural, &e.trad].map(|p| load_image(self.resolve(p)));
        ImageTriplet::new(o?, n?, t?)
    }

    /// Text regions of the entry; an entry without a region file has none.
    pub fn load_regions(&self, e: &ManifestEntry) -> Result<Vec<TextRegion>> {
        let Some(p) = &e.text_regions else {
            return Ok(Vec::new());
        };
        let path = self.resolve(p);
        let text = fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
        let regions: Vec<TextRegion> = serde_json::from_str(&text)
            .map_err(|err| parse_err(format!("{} line {} column {}", path.display(), err.line(), err.column()), err))?;
        for r in &regions {
            r.validate()?;
        }
        Ok(regions)
    }
}
