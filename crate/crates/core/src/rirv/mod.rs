//! Rotation-invariant regression voting: a four-stage coarse-to-fine
//! landmark detector built on oriented SIFT patches and per-axis SVRs.

pub mod displacement;
pub mod landmarks;
pub mod model;
pub mod params;
pub mod predict;
pub mod sampling;
pub mod train;
pub mod voting;

pub use displacement::{
    denormalize_displacement, from_patch_frame, normalize_displacement, rotate_vec, to_patch_frame,
};
pub use landmarks::{has_toe_left_handedness, toe_left, FlipRule, LandmarkSet};
pub use model::{pipeline_hyper, AxisPair, RirvModel, TrainConfig, FORMAT_VERSION};
pub use params::{
    default_prediction_stages, default_training_stages, StageParams, DEFAULT_WORKING_SIDE, LANDMARKS, STAGES,
};
pub use predict::{
    detect_landmarks, predict_stage, predict_stage_with, Detection, Diagnostics, StageResult, VoteRegressor,
};
pub use sampling::sample_patches;
pub use train::{train_pipeline, SampleCollector};
pub use voting::{hpdv_filter, kde_vote, Candidate, VoteSet};

pub use crate::imaging::Vec2;

use crate::imaging::{resize_uniform, GrayImage, Similarity2};

/// Resizes so the longest side equals `working_side`; returns the map from
/// original to working coordinates.
pub fn to_working(img: &GrayImage, working_side: usize) -> (GrayImage, Similarity2) {
    let longest = img.width().max(img.height());
    if longest == working_side {
        return (img.clone(), Similarity2::identity());
    }
    resize_uniform(img, working_side as f64 / longest as f64)
}

/// Mixes a base seed with tags into an independent stream seed.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix(base ^ 0x5EED_CA15_CA5E_0001);
    for &t in tags {
        h = splitmix(h ^ splitmix(t.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
