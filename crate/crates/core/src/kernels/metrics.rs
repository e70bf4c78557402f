//! Scalar full-reference baselines.

use super::{fsim, msssim, require_same_size, ssim};
use crate::error::{Error, Result};
use crate::image::Plane;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Psnr,
    Ssim,
    Msssim,
    Fsim,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [Self::Psnr, Self::Ssim, Self::Msssim, Self::Fsim];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Psnr => "psnr",
            Self::Ssim => "ssim",
            Self::Msssim => "msssim",
            Self::Fsim => "fsim",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::validation(format!("unknown metric {s:?}")))
    }
}

/// A metric value; PSNR of identical inputs is [`MetricValue::Infinite`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Finite(f64),
    Infinite,
}

impl MetricValue {
    /// Finite stand-in that ranks above every finite value.
    pub fn to_f64(self) -> f64 {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => f64::MAX,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }
}

fn psnr(a: &Plane, b: &Plane) -> MetricValue {
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    if mse == 0.0 {
        MetricValue::Infinite
    } else {
        MetricValue::Finite(10.0 * (1.0 / mse).log10())
    }
}

pub fn scalar_metric(kind: MetricKind, a: &Plane, b: &Plane) -> Result<MetricValue> {
    require_same_size(a, b, kind.as_str())?;
    Ok(match kind {
        MetricKind::Psnr => psnr(a, b),
        MetricKind::Ssim => MetricValue::Finite(ssim(a, b)?),
        MetricKind::Msssim => MetricValue::Finite(msssim(a, b)?),
        MetricKind::Fsim => MetricValue::Finite(fsim(a, b)?),
    })
}
