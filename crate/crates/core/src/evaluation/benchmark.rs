use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{delta_score, roc_auc, LabeledSample, Manifest};
use crate::detectors::{run_detectors, ArtifactType, DetectorConfig, TextRegion};
use crate::error::{Error, Result};
use crate::image::ImageTriplet;
use crate::kernels::MetricKind;

/// A scoring method: the detector matching the set, or a baseline metric delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Proposed,
    Metric(MetricKind),
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Proposed,
        Method::Metric(MetricKind::Psnr),
        Method::Metric(MetricKind::Ssim),
        Method::Metric(MetricKind::Msssim),
        Method::Metric(MetricKind::Fsim),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Metric(k) => k.as_str(),
        }
    }

    /// Score of one triplet for the benchmark set `set`.
    pub fn score(self, set: ArtifactType, t: &ImageTriplet, regions: &[TextRegion], cfg: &DetectorConfig) -> Result<f64> {
        match self {
            Method::Proposed => detector_score(set, t, regions, cfg),
            Method::Metric(k) => delta_score(k, t),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("proposed") {
            return Ok(Method::Proposed);
        }
        s.parse().map(Method::Metric)
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Largest detection confidence of type `set`, or 0 when nothing was found.
pub fn detector_score(set: ArtifactType, t: &ImageTriplet, regions: &[TextRegion], cfg: &DetectorConfig) -> Result<f64> {
    let out = run_detectors(t, regions, cfg, &[set])?;
    Ok(out
        .detections
        .iter()
        .map(|d| d.confidence)
        .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
        .unwrap_or(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub id: String,
    pub artifact_type: ArtifactType,
    pub label: bool,
    /// One score per method, in the report's method order.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub index: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucRow {
    pub method: Method,
    pub artifact_type: ArtifactType,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config_digest: String,
    pub manifest_digest: String,
    pub methods: Vec<Method>,
    pub rows: Vec<AucRow>,
    pub entries: Vec<ScoredEntry>,
    pub skipped: Vec<SkippedEntry>,
}

impl BenchmarkReport {
    pub fn auc(&self, method: Method, set: ArtifactType) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.artifact_type == set)
            .map(|r| r.auc)
    }

    /// Method-by-set AUC table; sets without entries are left out.
    pub fn to_csv(&self) -> String {
        let sets: Vec<ArtifactType> = ArtifactType::ALL
            .into_iter()
            .filter(|s| self.rows.iter().any(|r| r.artifact_type == *s))
            .collect();
        let mut out = String::from("method");
        for s in &sets {
            out.push(',');
            out.push_str(s.as_str());
        }
        out.push('\n');
        for &m in &self.methods {
            out.push_str(m.name());
            for &s in &sets {
                out.push(',');
                if let Some(a) = self.auc(m, s) {
                    out.push_str(&format!("{a:.4}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Turns per-entry scores into AUC rows.
pub fn summarize(methods: &[Method], entries: &[ScoredEntry]) -> Result<Vec<AucRow>> {
    let mut rows = Vec::new();
    for set in ArtifactType::ALL {
        let members: Vec<&ScoredEntry> = entries.iter().filter(|e| e.artifact_type == set).collect();
        if members.is_empty() {
            continue;
        }
        let constant = (0..methods.len()).all(|m| members.iter().all(|e| e.scores[m] == members[0].scores[m]));
        if constant {
            return Err(Error::validation(format!(
                "every method scores the {set} set identically; the classes cannot be ranked"
            )));
        }
        for (m, &method) in methods.iter().enumerate() {
            let samples = members
                .iter()
                .map(|e| LabeledSample::new(e.scores[m], e.label))
                .collect::<Result<Vec<_>>>()?;
            let auc = roc_auc(&samples).map_err(|e| Error::validation(format!("{set} set, {method}: {e}")))?;
            let positives = samples.iter().filter(|s| s.label).count();
            rows.push(AucRow {
                method,
                artifact_type: set,
                auc,
                positives,
                negatives: samples.len() - positives,
            });
        }
    }
    Ok(rows)
}

/// Scores every labeled manifest entry with every method, in parallel on the
/// current rayon pool, and reports one AUC per method and set.
///
/// Entries that fail to load are skipped and listed; more than 10% skipped
/// entries is an error.
pub fn run_benchmark(manifest: &Manifest, methods: &[Method], cfg: &DetectorConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::validation("no benchmark methods selected"));
    }
    if manifest.entries.is_empty() {
        return Err(Error::validation("manifest has no entries"));
    }
    let mut sets = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        match (e.artifact_type, e.label) {
            (Some(s), Some(l)) => sets.push((s, l)),
            _ => {
                return Err(Error::validation(format!(
                    "entry {:?} needs both artifact_type and label for benchmarking",
                    e.id
                )))
            }
        }
    }

    let results: Vec<Result<Vec<f64>>> = manifest
        .entries
        .par_iter()
        .zip(sets.par_iter())
        .map(|(e, &(set, _))| {
            let t = manifest.load_triplet(e)?;
            let regions = manifest.load_regions(e)?;
            methods.iter().map(|m| m.score(set, &t, &regions, cfg)).collect()
        })
        .collect();

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (i, (r, e)) in results.into_iter().zip(&manifest.entries).enumerate() {
        let (artifact_type, label) = sets[i];
        match r {
            Ok(scores) => entries.push(ScoredEntry {
                id: e.id.clone(),
                artifact_type,
                label,
                scores,
            }),
            Err(err) => {
                log::warn!("skipping entry {}: {err}", e.id);
                skipped.push(SkippedEntry {
                    index: i,
                    id: e.id.clone(),
                    reason: err.to_string(),
                });
            }
        }
    }
    if skipped.len() * 10 > manifest.entries.len() {
        return Err(Error::validation(format!(
            "{} of {} entries could not be scored (first: {}: {})",
            skipped.len(),
            manifest.entries.len(),
            skipped[0].id,
            skipped[0].reason
        )));
    }
    let rows = summarize(methods, &entries)?;
    Ok(BenchmarkReport {
        config_digest: cfg.digest(),
        manifest_digest: hex::encode(Sha256::digest(manifest.to_json_lines().as_bytes())),
        methods: methods.to_vec(),
        rows,
        entries,
        skipped,
    })
}
