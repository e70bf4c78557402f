use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{iou, BoundingBox};
use crate::detectors::ArtifactType;
use crate::error::{Error, Result};

/// Neural-codec quality preset. Ordering follows the rate: `Q006` is the
/// lowest-quality preset, `Q075` the highest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QualityPreset {
    Q006,
    Q012,
    Q025,
    Q050,
    Q075,
}

impl QualityPreset {
    pub const ALL: [QualityPreset; 5] = [
        QualityPreset::Q006,
        QualityPreset::Q012,
        QualityPreset::Q025,
        QualityPreset::Q050,
        QualityPreset::Q075,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityPreset::Q006 => "006",
            QualityPreset::Q012 => "012",
            QualityPreset::Q025 => "025",
            QualityPreset::Q050 => "050",
            QualityPreset::Q075 => "075",
        }
    }
}

impl fmt::Display for QualityPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QualityPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QualityPreset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::validation(format!(
                    "unknown quality preset {s:?} (expected one of 006, 012, 025, 050, 075)"
                ))
            })
    }
}

impl Serialize for QualityPreset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for QualityPreset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One detected artifact bound to its source image and codec settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub image_id: String,
    pub artifact_type: ArtifactType,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub quality_preset: QualityPreset,
    pub codec_version: String,
    pub method_params_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validated: Option<bool>,
    /// Fields this version does not know about; kept so documents survive a
    /// parse / serialize cycle unchanged.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Serializes records as a pretty-printed JSON array.
pub fn serialize_records(records: &[ArtifactRecord]) -> Result<String> {
    for (i, r) in records.iter().enumerate() {
        if !r.confidence.is_finite() {
            return Err(Error::validation(format!(
                "record {i} ({}) has non-finite confidence",
                r.image_id
            )));
        }
    }
    let mut doc = serde_json::to_string_pretty(records).map_err(|e| Error::Parse {
        context: "serialize".into(),
        message: e.to_string(),
    })?;
    doc.push('\n');
    Ok(doc)
}

/// Parses an annotation document. Errors carry the line/column of the fault.
pub fn parse_records(document: &str) -> Result<Vec<ArtifactRecord>> {
    let records: Vec<ArtifactRecord> = serde_json::from_str(document).map_err(|e| Error::Parse {
        context: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    for (i, r) in records.iter().enumerate() {
        if !r.confidence.is_finite() {
            return Err(Error::Parse {
                context: format!("record {i} field confidence"),
                message: "confidence must be finite".into(),
            });
        }
    }
    Ok(records)
}

fn priority(a: &ArtifactRecord, b: &ArtifactRecord) -> Ordering {
    b.quality_preset
        .cmp(&a.quality_preset)
        .then_with(|| b.confidence.total_cmp(&a.confidence))
}

/// Greedy cross-preset deduplication of the records of one image and type.
///
/// Records are visited from the highest preset down (ties broken by
/// confidence); a record survives only if its IoU with every survivor so far
/// is at most `iou_min`.
pub fn dedup_across_presets(records: &[ArtifactRecord], iou_min: f64) -> Result<Vec<ArtifactRecord>> {
    let Some(first) = records.first() else {
        return Ok(Vec::new());
    };
    if let Some(r) = records.iter().find(|r| r.image_id != first.image_id) {
        return Err(Error::validation(format!(
            "dedup group mixes image ids {:?} and {:?}",
            first.image_id, r.image_id
        )));
    }
    if let Some(r) = records.iter().find(|r| r.artifact_type != first.artifact_type) {
        return Err(Error::validation(format!(
            "dedup group mixes artifact types {} and {}",
            first.artifact_type, r.artifact_type
        )));
    }
    let mut order: Vec<&ArtifactRecord> = records.iter().collect();
    order.sort_by(|a, b| priority(a, b));
    let mut kept: Vec<ArtifactRecord> = Vec::new();
    for r in order {
        if kept.iter().all(|k| iou(&k.bbox, &r.bbox) <= iou_min) {
            kept.push(r.clone());
        }
    }
    Ok(kept)
}

/// Deduplicates a mixed document: records are grouped by `(image_id,
/// artifact_type)` in order of first appearance and each group is reduced
/// with [`dedup_across_presets`].
pub fn dedup_grouped(records: &[ArtifactRecord], iou_min: f64) -> Vec<ArtifactRecord> {
    let mut groups: Vec<((&str, ArtifactType), Vec<ArtifactRecord>)> = Vec::new();
    for r in records {
        let key = (r.image_id.as_str(), r.artifact_type);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(r.clone()),
            None => groups.push((key, vec![r.clone()])),
        }
    }
    groups
        .into_iter()
        .flat_map(|(_, g)| dedup_across_presets(&g, iou_min).expect("group is homogeneous"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(preset: QualityPreset, b: BoundingBox, conf: f64) -> ArtifactRecord {
        ArtifactRecord {
            image_id: "img".into(),
            artifact_type: ArtifactType::Texture,
            bbox: b,
            confidence: conf,
            quality_preset: preset,
            codec_version: "4.1".into(),
            method_params_digest: "abc".into(),
            validated: None,
            extra: Default::default(),
        }
    }

    #[test]
    fn dedup_examples() {
        let b = BoundingBox::new(10, 10, 50, 50);
        let single = vec![rec(QualityPreset::Q025, b, 0.3)];
        assert_eq!(dedup_across_presets(&single, 0.5).unwrap(), single);

        let pair = vec![rec(QualityPreset::Q012, b, 0.9), rec(QualityPreset::Q050, b, 0.1)];
        let kept = dedup_across_presets(&pair, 0.5).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].quality_preset, QualityPreset::Q050);

        let disjoint = vec![
            rec(QualityPreset::Q006, b, 0.2),
            rec(QualityPreset::Q006, BoundingBox::new(200, 200, 10, 10), 0.1),
        ];
        assert_eq!(dedup_across_presets(&disjoint, 0.5).unwrap().len(), 2);
    }

    #[test]
    fn dedup_rejects_mixed_images() {
        let b = BoundingBox::new(0, 0, 5, 5);
        let mut other = rec(QualityPreset::Q006, b, 0.1);
        other.image_id = "other".into();
        assert!(dedup_across_presets(&[rec(QualityPreset::Q006, b, 0.1), other], 0.5).is_err());
    }

    #[test]
    fn presets_serialize_as_three_digit_strings() {
        let r = rec(QualityPreset::Q006, BoundingBox::new(1, 2, 3, 4), 0.5);
        let doc = serialize_records(&[r]).unwrap();
        assert!(doc.contains(r#""quality_preset": "006""#));
        assert!(doc.contains(r#""artifact_type": "texture""#));
        assert!(doc.contains(r#""box": {"#));
        assert!(!doc.contains("validated"));
    }

    #[test]
    fn empty_document() {
        assert_eq!(serialize_records(&[]).unwrap().trim(), "[]");
        assert!(parse_records("[]").unwrap().is_empty());
    }

    #[test]
    fn missing_box_names_the_field() {
        let doc = r#"[{"image_id":"a","artifact_type":"text","confidence":0.1,
            "quality_preset":"012","codec_version":"x","method_params_digest":"d"}]"#;
        let err = parse_records(doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("`box`"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn unknown_fields_survive() {
        let doc = r#"[{"image_id":"a","artifact_type":"color_small","box":{"x":0,"y":0,"w":4,"h":4},
            "confidence":0.25,"quality_preset":"075","codec_version":"x","method_params_digest":"d",
            "validated":true,"votes":[1,0,1]}]"#;
        let recs = parse_records(doc).unwrap();
        assert_eq!(recs[0].extra["votes"], serde_json::json!([1, 0, 1]));
        assert_eq!(recs[0].validated, Some(true));
        let again = parse_records(&serialize_records(&recs).unwrap()).unwrap();
        assert_eq!(again, recs);
    }

    #[test]
    fn bad_preset_is_a_parse_error() {
        let doc = r#"[{"image_id":"a","artifact_type":"text","box":{"x":0,"y":0,"w":4,"h":4},
            "confidence":0.1,"quality_preset":"100","codec_version":"x","method_params_digest":"d"}]"#;
        assert!(matches!(parse_records(doc), Err(Error::Parse { .. })));
    }

    fn arb_record() -> impl Strategy<Value = ArtifactRecord> {
        (
            "[a-z0-9_]{1,12}",
            0usize..5,
            (0u32..2000, 0u32..2000, 1u32..500, 1u32..500),
            -1.0e6..1.0e6f64,
            0usize..5,
            "[ -~]{0,10}",
            proptest::option::of(any::<bool>()),
        )
            .prop_map(|(id, t, (x, y, w, h), conf, p, ver, validated)| ArtifactRecord {
                image_id: id,
                artifact_type: ArtifactType::ALL[t],
                bbox: BoundingBox::new(x, y, w, h),
                confidence: conf,
                quality_preset: QualityPreset::ALL[p],
                codec_version: ver,
                method_params_digest: "0123abcd".into(),
                validated,
                extra: Default::default(),
            })
    }

    proptest! {
        #[test]
        fn serialization_round_trips(records in proptest::collection::vec(arb_record(), 0..8)) {
            let doc = serialize_records(&records).unwrap();
            prop_assert_eq!(parse_records(&doc).unwrap(), records);
        }
    }
}
