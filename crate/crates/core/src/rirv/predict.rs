use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::displacement::from_patch_frame;
use super::landmarks::LandmarkSet;
use super::model::RirvModel;
use super::params::{StageParams, LANDMARKS, STAGES};
use super::sampling::sample_patches;
use super::voting::{density_mode, hpdv_filter, spread, Candidate, VoteSet};
use super::{derive_seed, to_working};
use crate::descriptor::{extract_descriptor, Descriptor, PatchSpec};
use crate::error::{Error, Result};
use crate::imaging::{flip_horizontal, GrayImage, Point2, Vec2};
use crate::svr::predict_pair;

/// Source of normalized displacement predictions for a patch.
pub trait VoteRegressor {
    /// `stage` and `landmark` are 0-based.
    fn normalized_displacement(&self, stage: usize, landmark: usize, patch: &PatchSpec, feature: &Descriptor) -> Vec2;
}

impl VoteRegressor for RirvModel {
    fn normalized_displacement(&self, stage: usize, landmark: usize, _patch: &PatchSpec, feature: &Descriptor) -> Vec2 {
        let pair = self.pair(stage, landmark);
        let (x, y) = predict_pair(&pair.x, &pair.y, feature);
        Vec2::new(x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkVotes {
    pub votes: VoteSet,
    pub estimate: Point2,
    /// No candidate survived screening; the estimate uses all first votes.
    pub fallback: bool,
    /// The density peak fell outside the canvas and was clamped onto it.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: u8,
    pub landmarks: Vec<LandmarkVotes>,
    pub estimate: LandmarkSet,
}

/// One stage of voting with an arbitrary regressor.
pub fn predict_stage_with<R: VoteRegressor + ?Sized>(
    regressor: &R,
    params: &StageParams,
    img: &GrayImage,
    prior: Option<&LandmarkSet>,
    seed: u64,
) -> Result<StageResult> {
    let s = params.index();
    match (s, prior) {
        (0, Some(_)) => return Err(Error::Argument("stage 1 takes no prior landmarks".into())),
        (1.., None) => return Err(Error::Argument(format!("stage {} needs prior landmarks", s + 1))),
        _ => {}
    }
    let theta_base = prior.map(LandmarkSet::axis_angle);
    let mut landmarks = Vec::with_capacity(LANDMARKS);
    for i in 0..LANDMARKS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[s as u64, i as u64]));
        let center = prior.map(|p| p.0[i]);
        let patches = sample_patches(&mut rng, img, center, params, theta_base);
        let mut candidates = Vec::with_capacity(patches.len());
        for p in &patches {
            let first = cast_vote(regressor, s, i, img, p)?;
            match params.threshold {
                Some(_) => {
                    let half_patch = p.moved_to(p.center + (first - p.center) * 0.5);
                    let second = cast_vote(regressor, s, i, img, &half_patch)?;
                    candidates.push(Candidate::with_half(first, second));
                }
                None => candidates.push(Candidate::single(first)),
            }
        }
        let mut votes = VoteSet::new(candidates);
        if let Some(th) = params.threshold {
            votes = hpdv_filter(&votes, th);
        }
        let (peak, fallback) = match density_mode(&votes.valid_votes()) {
            Some(p) => (p, false),
            None => (
                density_mode(&votes.first_votes()).expect("at least one patch per stage"),
                true,
            ),
        };
        let clamped = !img.contains(peak);
        landmarks.push(LandmarkVotes {
            votes,
            estimate: img.clamp_point(peak),
            fallback,
            clamped,
        });
    }
    let estimate = LandmarkSet([0, 1, 2, 3].map(|i| landmarks[i].estimate));
    Ok(StageResult {
        stage: params.stage,
        landmarks,
        estimate,
    })
}

fn cast_vote<R: VoteRegressor + ?Sized>(
    regressor: &R,
    stage: usize,
    landmark: usize,
    img: &GrayImage,
    patch: &PatchSpec,
) -> Result<Point2> {
    let feature = extract_descriptor(img, patch);
    let d_norm = regressor.normalized_displacement(stage, landmark, patch, &feature);
    let d = from_patch_frame(d_norm, patch)?;
    let vote = patch.center + d;
    // Wildly divergent regressors must not poison the density estimate.
    Ok(if vote.is_finite() { vote } else { patch.center })
}

/// Runs stage `h` (1-based) of a trained model on an image already at
/// working resolution.
pub fn predict_stage(
    model: &RirvModel,
    img: &GrayImage,
    h: usize,
    prior: Option<&LandmarkSet>,
    seed: u64,
) -> Result<StageResult> {
    if !(1..=STAGES).contains(&h) {
        return Err(Error::Argument(format!("stage {h} out of range")));
    }
    predict_stage_with(model, &model.predict_stages[h - 1], img, prior, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub stage: u8,
    /// Stage estimate in original image coordinates.
    pub estimate: LandmarkSet,
    pub votes: [usize; LANDMARKS],
    pub valid: [usize; LANDMARKS],
    pub survival_rate: [f64; LANDMARKS],
    /// RMS spread of all first votes, working px.
    pub spread_all: [f64; LANDMARKS],
    /// RMS spread of the votes that entered the density estimate, working px.
    pub spread_valid: [f64; LANDMARKS],
    pub fallback: [bool; LANDMARKS],
    pub clamped: [bool; LANDMARKS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Working-resolution pixels per original pixel.
    pub working_scale: f64,
    /// Whether stages 3 and 4 ran on the mirrored image.
    pub flipped: bool,
    pub stages: Vec<StageDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub landmarks: LandmarkSet,
    pub diagnostics: Diagnostics,
    /// Raw stage outputs at working resolution (mirrored for stages 3–4
    /// when `diagnostics.flipped`).
    #[serde(skip)]
    pub stage_results: Vec<StageResult>,
}

/// Full detection: resize to working resolution, stages 1–2, mirror to the
/// toe-left handedness if needed, stages 3–4, then map back to original
/// pixel coordinates.
pub fn detect_landmarks(model: &RirvModel, img: &GrayImage, seed: u64) -> Result<Detection> {
    if img.width() < 64 || img.height() < 64 {
        return Err(Error::Input(format!(
            "image is {}x{}, at least 64 px per side is required",
            img.width(),
            img.height()
        )));
    }
    if !model.is_complete() {
        return Err(Error::Input("model is missing regressors".into()));
    }
    let (work, to_work) = to_working(img, model.working_side);
    let from_work = to_work.inverse();

    let s1 = predict_stage(model, &work, 1, None, seed)?;
    let s2 = predict_stage(model, &work, 2, Some(&s1.estimate), seed)?;
    let flipped = model.flip_rule.needs_flip(&s2.estimate);
    let (fine_img, fine_prior) = if flipped {
        (flip_horizontal(&work), s2.estimate.flipped(work.width()))
    } else {
        (work.clone(), s2.estimate)
    };
    let s3 = predict_stage(model, &fine_img, 3, Some(&fine_prior), seed)?;
    let s4 = predict_stage(model, &fine_img, 4, Some(&s3.estimate), seed)?;

    let width = work.width();
    let to_original = |lm: &LandmarkSet, mirrored: bool| {
        let unflipped = if mirrored { lm.flipped(width) } else { *lm };
        unflipped.transformed(&from_work)
    };
    let results = vec![s1, s2, s3, s4];
    let stages = results
        .iter()
        .map(|r| {
            let mirrored = flipped && r.stage >= 3;
            let per = |f: &dyn Fn(&LandmarkVotes) -> f64| [0, 1, 2, 3].map(|i| f(&r.landmarks[i]));
            StageDiagnostics {
                stage: r.stage,
                estimate: to_original(&r.estimate, mirrored),
                votes: [0, 1, 2, 3].map(|i| r.landmarks[i].votes.len()),
                valid: [0, 1, 2, 3].map(|i| r.landmarks[i].votes.valid_count()),
                survival_rate: per(&|l| l.votes.valid_count() as f64 / l.votes.len().max(1) as f64),
                spread_all: per(&|l| spread(&l.votes.first_votes())),
                spread_valid: per(&|l| {
                    if l.fallback {
                        spread(&l.votes.first_votes())
                    } else {
                        spread(&l.votes.valid_votes())
                    }
                }),
                fallback: [0, 1, 2, 3].map(|i| r.landmarks[i].fallback),
                clamped: [0, 1, 2, 3].map(|i| r.landmarks[i].clamped),
            }
        })
        .collect::<Vec<_>>();
    let landmarks = stages.last().expect("four stages").estimate;
    Ok(Detection {
        landmarks,
        diagnostics: Diagnostics {
            working_scale: to_work.scale,
            flipped,
            stages,
        },
        stage_results: results,
    })
}
