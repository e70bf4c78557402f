//! Baseline delta scores, ROC-AUC, synthetic artifacts and the benchmark harness.

mod benchmark;
mod inject;
mod manifest;
pub mod synth;

pub use benchmark::{detector_score, run_benchmark, summarize, AucRow, BenchmarkReport, Method, ScoredEntry, SkippedEntry};
pub use inject::inject_synthetic_artifact;
pub use manifest::{Manifest, ManifestEntry};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageTriplet;
use crate::kernels::{scalar_metric, MetricKind, MetricValue};

/// A score with its ground-truth label (`true` = holds the target artifact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub score: f64,
    pub label: bool,
}

impl LabeledSample {
    pub fn new(score: f64, label: bool) -> Result<Self> {
        if !score.is_finite() {
            return Err(Error::validation(format!("sample score must be finite, got {score}")));
        }
        Ok(Self { score, label })
    }
}

/// Area under the ROC curve in the Mann-Whitney form; ties count one half.
pub fn roc_auc(samples: &[LabeledSample]) -> Result<f64> {
    let pos = samples.iter().filter(|s| s.label).count() as u128;
    let neg = samples.len() as u128 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::validation(format!(
            "AUC needs both classes (got {pos} positive, {neg} negative)"
        )));
    }
    if let Some(s) = samples.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::validation(format!("non-finite score {}", s.score)));
    }
    let mut sorted: Vec<&LabeledSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    // Twice the Mann-Whitney U, kept integral so the ratio is exact.
    let mut twice_u: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            j += 1;
        }
        let group = &sorted[i..j];
        let p = group.iter().filter(|s| s.label).count() as u128;
        let n = group.len() as u128 - p;
        twice_u += p * (2 * neg_below + n);
        neg_below += n;
        i = j;
    }
    Ok(twice_u as f64 / (2 * pos * neg) as f64)
}

/// `metric(orig, trad) - metric(orig, neural)` on luma; positive when the
/// neural image is worse. Infinite PSNR ranks above every finite value.
pub fn delta_score(kind: MetricKind, t: &ImageTriplet) -> Result<f64> {
    let [orig, neural, trad] = t.luma()?;
    let a = scalar_metric(kind, orig, trad)?;
    let b = scalar_metric(kind, orig, neural)?;
    Ok(match (a, b) {
        (MetricValue::Infinite, MetricValue::Infinite) => 0.0,
        (a, b) => a.to_f64() - b.to_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RasterImage;
    use proptest::prelude::*;

    fn s(score: f64, label: bool) -> LabeledSample {
        LabeledSample::new(score, label).unwrap()
    }

    #[test]
    fn auc_examples() {
        let hand = [s(0.9, true), s(0.4, true), s(0.5, false), s(0.1, false)];
        assert_eq!(roc_auc(&hand).unwrap(), 0.75);
        assert_eq!(roc_auc(&[s(2.0, true), s(1.0, false)]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[s(0.0, true), s(1.0, false)]).unwrap(), 0.0);
        assert_eq!(roc_auc(&[s(1.0, true), s(1.0, false)]).unwrap(), 0.5);
        assert!(roc_auc(&[s(1.0, true), s(2.0, true)]).is_err());
        assert!(LabeledSample::new(f64::NAN, true).is_err());
    }

    #[test]
    fn delta_examples() {
        let orig = RasterImage::rgb_from_fn(40, 40, |x, y| {
            let v = 0.2 + 0.6 * ((x * 7 + y * 3) % 11) as f64 / 11.0;
            [v, v, v]
        });
        let shifted = |d: f64| RasterImage::rgb_from_fn(40, 40, |x, y| orig.pixel(x, y).map(|v| v + d));
        let same = ImageTriplet::new(orig.clone(), shifted(0.01), shifted(0.01)).unwrap();
        for kind in MetricKind::ALL {
            assert_eq!(delta_score(kind, &same).unwrap(), 0.0, "{kind}");
        }
        let clean = ImageTriplet::new(orig.clone(), orig.clone(), shifted(0.05)).unwrap();
        for kind in MetricKind::ALL {
            assert!(delta_score(kind, &clean).unwrap() < 0.0, "{kind}");
        }
        // Uniform offsets of 10^(-30/20) and 10^(-24/20) give 30 dB and 24 dB.
        let t = ImageTriplet::new(orig.clone(), shifted(10f64.powf(-24.0 / 20.0)), shifted(10f64.powf(-30.0 / 20.0))).unwrap();
        assert!((delta_score(MetricKind::Psnr, &t).unwrap() - 6.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn auc_matches_pair_counting(scores in proptest::collection::vec((0u8..20, any::<bool>()), 2..60)) {
            let samples: Vec<_> = scores.iter().map(|&(v, l)| s(f64::from(v) / 7.0, l)).collect();
            let (p, n): (Vec<&LabeledSample>, Vec<&LabeledSample>) = samples.iter().partition(|x| x.label);
            prop_assume!(!p.is_empty() && !n.is_empty());
            let mut wins = 0.0;
            for a in &p {
                for b in &n {
                    wins += if a.score > b.score { 1.0 } else if a.score == b.score { 0.5 } else { 0.0 };
                }
            }
            let exhaustive = wins / (p.len() * n.len()) as f64;
            let auc = roc_auc(&samples).unwrap();
            prop_assert!((auc - exhaustive).abs() < 1e-12);

            let flipped: Vec<_> = samples.iter().map(|x| s(x.score, !x.label)).collect();
            prop_assert!((roc_auc(&flipped).unwrap() - (1.0 - auc)).abs() < 1e-12);
            let monotone: Vec<_> = samples.iter().map(|x| s(x.score.powi(3) * 5.0 - 2.0, x.label)).collect();
            prop_assert!((roc_auc(&monotone).unwrap() - auc).abs() < 1e-12);
        }
    }
}
