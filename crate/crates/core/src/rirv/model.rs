use serde::{Deserialize, Serialize};

use super::landmarks::FlipRule;
use super::params::{
    default_prediction_stages, default_training_stages, StageParams, DEFAULT_WORKING_SIDE, LANDMARKS, STAGES,
};
use crate::svr::{SvrHyper, SvrModel, DEFAULT_CACHE_BYTES};

pub const FORMAT_VERSION: u32 = 1;

/// Regressors for the x and y components of one landmark's normalized
/// displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisPair {
    pub x: SvrModel,
    pub y: SvrModel,
}

/// A trained four-stage detector.
#[derive(Debug, Clone, PartialEq)]
pub struct RirvModel {
    pub format_version: u32,
    pub working_side: usize,
    pub train_stages: [StageParams; STAGES],
    pub predict_stages: [StageParams; STAGES],
    pub flip_rule: FlipRule,
    /// Indexed `stage * LANDMARKS + landmark` (both 0-based).
    pub regressors: Vec<AxisPair>,
}

impl RirvModel {
    pub fn pair(&self, stage: usize, landmark: usize) -> &AxisPair {
        &self.regressors[stage * LANDMARKS + landmark]
    }

    pub fn regressor_count(&self) -> usize {
        self.regressors.len() * 2
    }

    pub fn is_complete(&self) -> bool {
        self.regressors.len() == STAGES * LANDMARKS
    }
}

/// Regressor settings the detector trains with by default.
pub fn pipeline_hyper() -> SvrHyper {
    SvrHyper {
        c: 1.0,
        gamma: 4.0,
        ..SvrHyper::default()
    }
}

/// Everything that shapes training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub working_side: usize,
    pub train_stages: [StageParams; STAGES],
    pub predict_stages: [StageParams; STAGES],
    pub hyper: SvrHyper,
    pub flip_rule: FlipRule,
    /// Kernel cache budget per regressor pair, bytes.
    pub cache_bytes: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            working_side: DEFAULT_WORKING_SIDE,
            train_stages: default_training_stages(),
            predict_stages: default_prediction_stages(),
            hyper: pipeline_hyper(),
            flip_rule: FlipRule::default(),
            cache_bytes: DEFAULT_CACHE_BYTES,
            seed: 0,
        }
    }
}
