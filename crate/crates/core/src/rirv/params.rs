use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STAGES: usize = 4;
pub const LANDMARKS: usize = 4;

/// Patch sampling parameters of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    /// 1-based stage number.
    pub stage: u8,
    /// Orientation perturbation around the L1→L3 direction. Absent: each
    /// patch takes its dominant gradient orientation.
    pub delta_theta: Option<[f64; 2]>,
    /// Patch side length range, px.
    pub size_range: [f64; 2],
    /// Side of the square sampling region around the current landmark
    /// estimate, px. Absent: the whole image.
    pub region: Option<f64>,
    /// Patches per landmark (per image when training).
    pub count: usize,
    /// Half-path double-voting threshold, px. Absent: no screening.
    pub threshold: Option<f64>,
}

impl StageParams {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.size_range;
        let ok = (1..=STAGES as u8).contains(&self.stage)
            && lo >= 4.0
            && lo <= hi
            && self.count >= 1
            && self.region.is_none_or(|d| d > 0.0)
            && self.threshold.is_none_or(|t| t > 0.0)
            && self.delta_theta.is_none_or(|[a, b]| a <= b);
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("invalid stage parameters {self:?}")))
        }
    }

    pub fn index(&self) -> usize {
        self.stage as usize - 1
    }
}

/// Patch parameters used while training the four stages.
pub fn default_training_stages() -> [StageParams; STAGES] {
    [
        StageParams {
            stage: 1,
            delta_theta: None,
            size_range: [30.0, 50.0],
            region: None,
            count: 100,
            threshold: None,
        },
        StageParams {
            stage: 2,
            delta_theta: Some([-PI / 4.0, PI / 4.0]),
            size_range: [25.0, 35.0],
            region: Some(440.0),
            count: 100,
            threshold: None,
        },
        StageParams {
            stage: 3,
            delta_theta: Some([-PI / 6.0, PI / 6.0]),
            size_range: [15.0, 20.0],
            region: Some(300.0),
            count: 80,
            threshold: None,
        },
        StageParams {
            stage: 4,
            delta_theta: Some([-PI / 6.0, PI / 6.0]),
            size_range: [10.0, 16.0],
            region: Some(200.0),
            count: 50,
            threshold: None,
        },
    ]
}

/// Patch parameters and screening thresholds used for detection.
pub fn default_prediction_stages() -> [StageParams; STAGES] {
    [
        StageParams {
            stage: 1,
            delta_theta: None,
            size_range: [35.0, 45.0],
            region: None,
            count: 200,
            threshold: Some(100.0),
        },
        StageParams {
            stage: 2,
            delta_theta: Some([-PI / 6.0, PI / 6.0]),
            size_range: [25.0, 35.0],
            region: Some(300.0),
            count: 100,
            threshold: Some(60.0),
        },
        StageParams {
            stage: 3,
            delta_theta: Some([-PI / 12.0, PI / 12.0]),
            size_range: [16.0, 19.0],
            region: Some(160.0),
            count: 80,
            threshold: Some(30.0),
        },
        StageParams {
            stage: 4,
            delta_theta: Some([-PI / 12.0, PI / 12.0]),
            size_range: [13.0, 14.0],
            region: Some(80.0),
            count: 50,
            threshold: None,
        },
    ]
}

/// Longest image side at which all pixel parameters apply.
pub const DEFAULT_WORKING_SIDE: usize = 1280;

pub fn validate_tables(train: &[StageParams; STAGES], predict: &[StageParams; STAGES]) -> Result<()> {
    for (k, (t, p)) in train.iter().zip(predict).enumerate() {
        t.validate()?;
        p.validate()?;
        if t.stage as usize != k + 1 || p.stage as usize != k + 1 {
            return Err(Error::Argument(format!("stage tables out of order at position {k}")));
        }
        if k == 0 && (t.region.is_some() || t.delta_theta.is_some() || p.region.is_some() || p.delta_theta.is_some()) {
            return Err(Error::Argument(
                "stage 1 samples the whole image with gradient orientation".into(),
            ));
        }
        if k > 0 && (t.region.is_none() || p.region.is_none() || t.delta_theta.is_none() || p.delta_theta.is_none()) {
            return Err(Error::Argument(format!(
                "stage {} needs a sampling region and orientation range",
                k + 1
            )));
        }
    }
    Ok(())
}
