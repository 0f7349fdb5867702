//! Evaluation quantities: radial errors, MRE/SD, SDR, angle MAE,
//! recall/precision/F1 and IoU.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::rirv::LandmarkSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub r#fn: u64,
}

impl ConfusionCounts {
    /// Tallies binary predictions against labels.
    pub fn from_labels(pred: &[bool], truth: &[bool]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::Argument(format!(
                "{} predictions for {} labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut c = ConfusionCounts::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.r#fn += 1,
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub ref_length_mm: f64,
    pub sdr_thresholds_mm: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ref_length_mm: 70.0,
            sdr_thresholds_mm: vec![2.0, 4.0, 6.0],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ref_length_mm > 0.0) || !self.ref_length_mm.is_finite() {
            return Err(Error::Argument(format!(
                "reference length {} must be positive",
                self.ref_length_mm
            )));
        }
        let t = &self.sdr_thresholds_mm;
        if t.iter().any(|v| !(*v > 0.0)) || t.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("SDR thresholds must be positive and ascending".into()));
        }
        Ok(())
    }
}

/// Millimetres per pixel implied by the annotated L1-L3 distance.
pub fn mm_per_px(gt: &LandmarkSet, cfg: &EvalConfig) -> Result<f64> {
    let d = gt.l1().distance(gt.l3());
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Input("reference landmarks L1 and L3 coincide".into()));
    }
    Ok(cfg.ref_length_mm / d)
}

pub fn radial_errors_px(pred: &LandmarkSet, gt: &LandmarkSet) -> [f64; 4] {
    [0, 1, 2, 3].map(|i| pred.0[i].distance(gt.0[i]))
}

pub fn radial_errors_mm(pred: &LandmarkSet, gt: &LandmarkSet, cfg: &EvalConfig) -> Result<[f64; 4]> {
    let k = mm_per_px(gt, cfg)?;
    Ok(radial_errors_px(pred, gt).map(|e| e * k))
}

/// Mean and population standard deviation.
pub fn mre_sd(errors: &[f64]) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(Error::Argument("no errors to summarize".into()));
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Percentage of errors strictly below `p`.
pub fn sdr(errors: &[f64], p: f64) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Argument("no errors to summarize".into()));
    }
    if !(p > 0.0) {
        return Err(Error::Argument(format!("precision {p} must be positive")));
    }
    let hits = errors.iter().filter(|&&e| e < p).count();
    Ok(100.0 * hits as f64 / errors.len() as f64)
}

/// Mean and population SD of absolute angle errors.
pub fn angle_mae(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    let abs: Vec<f64> = pairs.iter().map(|(p, g)| (p - g).abs()).collect();
    mre_sd(&abs)
}

/// Recall, precision and F1; `None` where the denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

pub fn prf1(c: ConfusionCounts) -> Prf1 {
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let recall = ratio(c.tp, c.tp + c.r#fn);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f1 = match (recall, precision) {
        (Some(r), Some(p)) if r + p > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Prf1 { recall, precision, f1 }
}

/// Binary raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Nonzero pixels are on.
    pub fn from_gray(img: &GrayImage) -> Self {
        Mask {
            width: img.width(),
            height: img.height(),
            bits: img.pixels().iter().map(|&v| v > 0).collect(),
        }
    }

    /// On pixels become 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(
            self.width,
            self.height,
            self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        )
        .expect("mask dimensions are consistent")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IouResult {
    pub value: f64,
    /// Both masks were empty; the value is 1.0 by convention.
    pub both_empty: bool,
}

pub fn iou(x: &Mask, y: &Mask) -> Result<IouResult> {
    if x.width != y.width || x.height != y.height {
        return Err(Error::Argument(format!(
            "mask sizes differ: {}x{} vs {}x{}",
            x.width, x.height, y.width, y.height
        )));
    }
    let (mut inter, mut nx, mut ny) = (0usize, 0usize, 0usize);
    for (&a, &b) in x.bits.iter().zip(&y.bits) {
        inter += (a && b) as usize;
        nx += a as usize;
        ny += b as usize;
    }
    let union = nx + ny - inter;
    Ok(if union == 0 {
        IouResult {
            value: 1.0,
            both_empty: true,
        }
    } else {
        IouResult {
            value: inter as f64 / union as f64,
            both_empty: false,
        }
    })
}
