//! Benchmark evaluation of a detector over annotated images, optionally on a
//! randomly rotated copy of each image.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angles::{bohler_angle, gissane_angle};
use crate::error::Result;
use crate::imaging::{rotate_image, GrayImage, Point2, Similarity2};
use crate::metrics::{angle_mae, mre_sd, radial_errors_mm, radial_errors_px, sdr, EvalConfig};
use crate::rirv::{derive_seed, detect_landmarks, FlipRule, LandmarkSet, RirvModel};

/// Per-image outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub name: String,
    /// Rotation applied before detection, radians.
    pub rotation: f64,
    pub truth: LandmarkSet,
    pub predicted: LandmarkSet,
    pub errors_mm: [f64; 4],
    /// Radial errors at working resolution.
    pub errors_px: [f64; 4],
    /// Mean working-resolution error of each stage's estimate.
    pub stage_mre_px: Vec<f64>,
    pub ba: (f64, f64),
    pub cag: (f64, f64),
    pub flipped: bool,
    pub fallback: bool,
    /// RMS spread of all / screened votes, averaged over landmarks, per HPDV stage.
    pub spread_all: Vec<f64>,
    pub spread_valid: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSummary {
    pub landmark: String,
    pub mre_mm: f64,
    pub sd_mm: f64,
    /// Percent, one per configured threshold.
    pub sdr: Vec<f64>,
    pub mre_px: f64,
    pub sd_px: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSummary {
    pub angle: String,
    pub mae_deg: f64,
    pub sd_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub set: String,
    pub cases: usize,
    pub thresholds_mm: Vec<f64>,
    /// L1..L4 followed by the average over all landmarks.
    pub landmarks: Vec<LandmarkSummary>,
    pub angles: Vec<AngleSummary>,
    pub mean_seconds: f64,
    pub sd_convention: String,
}

/// Annotated image ready for evaluation.
pub struct EvalCase {
    pub name: String,
    pub image: GrayImage,
    pub truth: LandmarkSet,
}

/// Angles measured after bringing the landmarks to toe-left handedness.
pub fn measured_angles(lm: &LandmarkSet, width: usize, rule: FlipRule) -> Result<(f64, f64)> {
    let lm = if rule.needs_flip(lm) { lm.flipped(width) } else { *lm };
    Ok((bohler_angle(&lm)?, gissane_angle(&lm)?))
}

pub fn evaluate_case(model: &RirvModel, case: &EvalCase, rotation: Option<f64>, seed: u64) -> Result<CaseResult> {
    let (image, truth) = match rotation {
        Some(a) => {
            let c = Point2::new(case.image.width() as f64 / 2.0, case.image.height() as f64 / 2.0);
            let t = Similarity2::about(c, a, 1.0);
            (rotate_image(&case.image, a, c), case.truth.transformed(&t))
        }
        None => (case.image.clone(), case.truth),
    };
    let start = Instant::now();
    let det = detect_landmarks(model, &image, seed)?;
    let seconds = start.elapsed().as_secs_f64();
    let cfg = EvalConfig::default();
    let scale = det.diagnostics.working_scale;
    let stage_mre_px = det
        .diagnostics
        .stages
        .iter()
        .map(|s| radial_errors_px(&s.estimate, &truth).iter().sum::<f64>() * scale / 4.0)
        .collect();
    let hpdv: Vec<_> = det
        .diagnostics
        .stages
        .iter()
        .filter(|s| model.predict_stages[s.stage as usize - 1].threshold.is_some())
        .collect();
    let w = image.width();
    let (ba_p, cag_p) = measured_angles(&det.landmarks, w, model.flip_rule)?;
    let (ba_t, cag_t) = measured_angles(&truth, w, model.flip_rule)?;
    Ok(CaseResult {
        name: case.name.clone(),
        rotation: rotation.unwrap_or(0.0),
        truth,
        predicted: det.landmarks,
        errors_mm: radial_errors_mm(&det.landmarks, &truth, &cfg)?,
        errors_px: radial_errors_px(&det.landmarks, &truth).map(|e| e * scale),
        stage_mre_px,
        ba: (ba_p, ba_t),
        cag: (cag_p, cag_t),
        flipped: det.diagnostics.flipped,
        fallback: det.diagnostics.stages.iter().any(|s| s.fallback.iter().any(|&f| f)),
        spread_all: hpdv.iter().map(|s| s.spread_all.iter().sum::<f64>() / 4.0).collect(),
        spread_valid: hpdv.iter().map(|s| s.spread_valid.iter().sum::<f64>() / 4.0).collect(),
        seconds,
    })
}

/// Evaluates every case; with `rotate`, each image is first rotated by an
/// angle drawn uniformly from [0, 2π) using a per-case seed.
pub fn evaluate_cases(model: &RirvModel, cases: &[EvalCase], rotate: bool, seed: u64) -> Result<Vec<CaseResult>> {
    cases
        .iter()
        .enumerate()
        .map(|(i, case)| {
            let rotation = rotate.then(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x0020_7A7E, i as u64]));
                rng.gen_range(0.0..std::f64::consts::TAU)
            });
            log::info!("evaluating {} ({}/{})", case.name, i + 1, cases.len());
            evaluate_case(model, case, rotation, derive_seed(seed, &[i as u64]))
        })
        .collect()
}

pub fn summarize(set: &str, results: &[CaseResult], cfg: &EvalConfig) -> Result<EvalSummary> {
    cfg.validate()?;
    let mut landmarks = Vec::new();
    let per = |k: Option<usize>, f: &dyn Fn(&CaseResult) -> [f64; 4]| -> Vec<f64> {
        results
            .iter()
            .flat_map(|r| {
                let e = f(r);
                match k {
                    Some(k) => vec![e[k]],
                    None => e.to_vec(),
                }
            })
            .collect()
    };
    for k in [Some(0), Some(1), Some(2), Some(3), None] {
        let mm = per(k, &|r| r.errors_mm);
        let px = per(k, &|r| r.errors_px);
        let (mre_mm, sd_mm) = mre_sd(&mm)?;
        let (mre_px, sd_px) = mre_sd(&px)?;
        landmarks.push(LandmarkSummary {
            landmark: k.map_or("average".to_string(), |k| format!("L{}", k + 1)),
            mre_mm,
            sd_mm,
            sdr: cfg
                .sdr_thresholds_mm
                .iter()
                .map(|&p| sdr(&mm, p))
                .collect::<Result<_>>()?,
            mre_px,
            sd_px,
        });
    }
    let ba: Vec<_> = results.iter().map(|r| r.ba).collect();
    let cag: Vec<_> = results.iter().map(|r| r.cag).collect();
    let (ba_mae, ba_sd) = angle_mae(&ba)?;
    let (cag_mae, cag_sd) = angle_mae(&cag)?;
    Ok(EvalSummary {
        set: set.to_string(),
        cases: results.len(),
        thresholds_mm: cfg.sdr_thresholds_mm.clone(),
        landmarks,
        angles: vec![
            AngleSummary {
                angle: "BA".into(),
                mae_deg: ba_mae,
                sd_deg: ba_sd,
            },
            AngleSummary {
                angle: "CAG".into(),
                mae_deg: cag_mae,
                sd_deg: cag_sd,
            },
        ],
        mean_seconds: results.iter().map(|r| r.seconds).sum::<f64>() / results.len() as f64,
        sd_convention: "population".into(),
    })
}

/// Table-style CSV: landmark rows, then angle rows, one block per summary.
pub fn summaries_csv(summaries: &[EvalSummary]) -> String {
    let mut out = String::new();
    let thresholds = summaries.first().map(|s| s.thresholds_mm.clone()).unwrap_or_default();
    out.push_str("set,landmark,MRE_mm,SD_mm");
    for t in &thresholds {
        out.push_str(&format!(",SDR_{t}mm"));
    }
    out.push_str(",MRE_px,SD_px\n");
    for s in summaries {
        for l in &s.landmarks {
            out.push_str(&format!("{},{},{:.4},{:.4}", s.set, l.landmark, l.mre_mm, l.sd_mm));
            for v in &l.sdr {
                out.push_str(&format!(",{v:.2}"));
            }
            out.push_str(&format!(",{:.4},{:.4}\n", l.mre_px, l.sd_px));
        }
    }
    out.push_str("\nset,angle,MAE_deg,SD_deg\n");
    for s in summaries {
        for a in &s.angles {
            out.push_str(&format!("{},{},{:.4},{:.4}\n", s.set, a.angle, a.mae_deg, a.sd_deg));
        }
    }
    out
}
