//! Command-line front end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use crate::angles::{angle_report, AngleReport};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_cases, summaries_csv, summarize, CaseResult, EvalCase, EvalSummary};
use crate::formats::{
    load_annotations, load_model, save_annotations, save_model, write_atomic, write_json, Annotation,
};
use crate::imaging::{load_grayscale, save_png, GrayImage, Point2};
use crate::metrics::{mm_per_px, EvalConfig};
use crate::rirv::{detect_landmarks, Diagnostics, LandmarkSet, SampleCollector, TrainConfig};
use crate::roi::{normalize_roi, RoiParams, RoiTransform};
use crate::synth::{generate_indexed, SynthParams};

#[derive(Debug, Parser)]
#[command(
    name = "calscan",
    version,
    about = "Calcaneus landmark detection, angle measurement and ROI normalization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset (PNG images plus annotations.json).
    Synth(SynthArgs),
    /// Train a detector from annotated images.
    Train(TrainArgs),
    /// Detect landmarks on one image and report angles.
    Detect(DetectArgs),
    /// Evaluate a detector over an annotated test set.
    Evaluate(EvaluateArgs),
    /// Write normalized ROIs and fracture masks.
    Roi(RoiArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of cases to generate.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "synth")]
    out: PathBuf,
    /// Image side, px.
    #[arg(long, default_value_t = 640)]
    side: usize,
    /// Maximum absolute rotation, degrees.
    #[arg(long, default_value_t = 10.0)]
    rotation_deg: f64,
    /// Probability that a case carries a fracture.
    #[arg(long, default_value_t = 0.3)]
    fracture_rate: f64,
    /// Probability that a case is mirrored (toes right).
    #[arg(long, default_value_t = 0.0)]
    mirror_rate: f64,
    /// Gaussian noise SD, gray levels.
    #[arg(long, default_value_t = 4.0)]
    noise: f64,
    /// Index of the first case, for disjoint train/test splits under one seed.
    #[arg(long, default_value_t = 0)]
    start: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Annotation JSON; image paths resolve against its directory.
    #[arg(long)]
    annotations: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON training configuration; fields left out take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    image: PathBuf,
    /// JSON report output.
    #[arg(long)]
    out: PathBuf,
    /// Optional PNG with landmarks and angle rays drawn.
    #[arg(long)]
    overlay: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    /// Metrics JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Table-style CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also evaluate on copies rotated uniformly over [0, 360) degrees.
    #[arg(long)]
    rotate_test: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RoiArgs {
    #[arg(long)]
    annotations: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Detect landmarks with this model for records that have none.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Crop side as a multiple of the L1-L3 distance.
    #[arg(long, default_value_t = 2.0)]
    side_factor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit code: 0 success, 1 data error, 2 usage error.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Detect(a) => detect(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Roi(a) => roi(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(Error::Argument(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let r = a.rotation_deg.to_radians();
    let params = SynthParams {
        count: a.count,
        side: a.side,
        rotation_range: [-r, r],
        fracture_rate: a.fracture_rate,
        mirror_rate: a.mirror_rate,
        noise: a.noise,
        seed: a.seed,
        ..SynthParams::default()
    };
    params.validate()?;
    let img_dir = a.out.join("images");
    std::fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    let mut records = Vec::with_capacity(a.count);
    for i in a.start..a.start + a.count {
        let case = generate_indexed(&params, i)?;
        let rel = format!("images/case_{i:05}.png");
        save_png(&case.image, a.out.join(&rel))?;
        records.push(Annotation::from_parts(
            rel,
            Some(&case.landmarks),
            case.fractured,
            &case.polygons,
            case.kind.map(|k| k.as_str()),
        ));
    }
    save_annotations(a.out.join("annotations.json"), &records)?;
    info!("wrote {} cases to {}", records.len(), a.out.display());
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

fn labelled(a: &Annotation, base: &Path) -> Result<(PathBuf, GrayImage, LandmarkSet)> {
    let path = a.image_path(base);
    let lm = a.landmark_set().ok_or_else(|| Error::Data {
        case: path.display().to_string(),
        message: "record has no landmarks".into(),
    })?;
    let img = load_grayscale(&path)?;
    Ok((path, img, lm))
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    cfg.seed = a.seed;
    let (records, base) = load_annotations(&a.annotations)?;
    if records.is_empty() {
        return Err(Error::Data {
            case: a.annotations.display().to_string(),
            message: "no training records".into(),
        });
    }
    let start = Instant::now();
    let mut collector = SampleCollector::new(cfg)?;
    for rec in &records {
        let (path, img, lm) = labelled(rec, &base)?;
        collector.add(&path.display().to_string(), &img, &lm)?;
    }
    let model = collector.finish()?;
    save_model(&model, &a.out)?;
    info!(
        "trained on {} images in {:.1}s",
        records.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct DetectReport {
    image: String,
    width: usize,
    height: usize,
    landmarks: LandmarkSet,
    angles: AngleReport,
    ref_length_mm: f64,
    mm_per_px: f64,
    seconds: f64,
    diagnostics: Diagnostics,
}

fn detect(a: DetectArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let img = load_grayscale(&a.image)?;
    let start = Instant::now();
    let det = detect_landmarks(&model, &img, a.seed).map_err(|e| in_file(&a.image, e))?;
    let seconds = start.elapsed().as_secs_f64();
    let toe_left = if model.flip_rule.needs_flip(&det.landmarks) {
        det.landmarks.flipped(img.width())
    } else {
        det.landmarks
    };
    let angles = angle_report(&toe_left).map_err(|e| in_file(&a.image, e))?;
    let cfg = EvalConfig::default();
    let report = DetectReport {
        image: a.image.display().to_string(),
        width: img.width(),
        height: img.height(),
        landmarks: det.landmarks,
        angles,
        ref_length_mm: cfg.ref_length_mm,
        mm_per_px: mm_per_px(&det.landmarks, &cfg).map_err(|e| in_file(&a.image, e))?,
        seconds,
        diagnostics: det.diagnostics,
    };
    write_json(&a.out, &report)?;
    if let Some(path) = &a.overlay {
        save_png(&draw_overlay(&img, &det.landmarks), path)?;
    }
    Ok(())
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Io { .. } | Error::Format { .. } | Error::Data { .. } => e,
        other => Error::Data {
            case: path.display().to_string(),
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Serialize)]
struct EvaluateReport {
    summaries: Vec<EvalSummary>,
    cases: Vec<CaseResult>,
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let (records, base) = load_annotations(&a.annotations)?;
    let mut cases = Vec::new();
    for rec in &records {
        let (path, image, truth) = labelled(rec, &base)?;
        cases.push(EvalCase {
            name: path.display().to_string(),
            image,
            truth,
        });
    }
    if cases.is_empty() {
        return Err(Error::Data {
            case: a.annotations.display().to_string(),
            message: "no test records".into(),
        });
    }
    let cfg = EvalConfig::default();
    let plain = evaluate_cases(&model, &cases, false, a.seed)?;
    let mut summaries = vec![summarize("plain", &plain, &cfg)?];
    let mut all = plain;
    if a.rotate_test {
        let rotated = evaluate_cases(&model, &cases, true, a.seed)?;
        summaries.push(summarize("rotated", &rotated, &cfg)?);
        all.extend(rotated);
    }
    if let Some(csv) = &a.csv {
        write_atomic(csv, summaries_csv(&summaries).as_bytes())?;
    }
    write_json(&a.out, &EvaluateReport { summaries, cases: all })
}

#[derive(Debug, Serialize)]
struct RoiSidecar {
    image: String,
    roi: String,
    mask: Option<String>,
    fractured: bool,
    fracture_kind: Option<String>,
    to_roi: RoiTransform,
    landmarks_roi: LandmarkSet,
    landmarks_source: String,
}

fn roi(a: RoiArgs) -> Result<()> {
    let (records, base) = load_annotations(&a.annotations)?;
    let model = a.model.as_ref().map(load_model).transpose()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let params = RoiParams {
        side_factor: a.side_factor,
        ..RoiParams::default()
    };
    for (i, rec) in records.iter().enumerate() {
        let path = rec.image_path(&base);
        let img = load_grayscale(&path)?;
        let (lm, source) = match (rec.landmark_set(), &model) {
            (Some(lm), _) => (lm, "annotation"),
            (None, Some(m)) => (
                detect_landmarks(m, &img, crate::rirv::derive_seed(a.seed, &[i as u64]))
                    .map_err(|e| in_file(&path, e))?
                    .landmarks,
                "detected",
            ),
            (None, None) => {
                return Err(Error::Data {
                    case: path.display().to_string(),
                    message: "record has no landmarks and no --model was given".into(),
                })
            }
        };
        let polygons = rec.polygons();
        let result = normalize_roi(&img, &lm, Some(&polygons), &params).map_err(|e| in_file(&path, e))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| format!("case_{i}"));
        let roi_name = format!("{stem}_roi.png");
        let mask_name = format!("{stem}_mask.png");
        save_png(&result.roi, a.out.join(&roi_name))?;
        if let Some(mask) = &result.mask {
            save_png(&mask.to_gray(), a.out.join(&mask_name))?;
        }
        write_json(
            a.out.join(format!("{stem}_roi.json")),
            &RoiSidecar {
                image: path.display().to_string(),
                roi: roi_name,
                mask: result.mask.as_ref().map(|_| mask_name),
                fractured: rec.fractured,
                fracture_kind: rec.fracture_kind.clone(),
                to_roi: result.to_roi,
                landmarks_roi: result.landmarks,
                landmarks_source: source.into(),
            },
        )?;
    }
    Ok(())
}

fn draw_line(img: &mut GrayImage, a: Point2, b: Point2, value: u8) {
    let steps = (a.distance(b).ceil() as usize).max(1) * 2;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let p = Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
        let (x, y) = (p.x.round(), p.y.round());
        if x >= 0.0 && y >= 0.0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.set(x as usize, y as usize, value);
        }
    }
}

/// Landmark crosses plus the BA (L1-L2-L3) and CAG (L2-L4-L3) rays.
pub fn draw_overlay(img: &GrayImage, lm: &LandmarkSet) -> GrayImage {
    let mut out = img.clone();
    let [l1, l2, l3, l4] = lm.0;
    for (a, b) in [(l1, l2), (l2, l3), (l4, l2), (l4, l3)] {
        draw_line(&mut out, a, b, 255);
    }
    let r = (img.width().max(img.height()) as f64 / 100.0).max(3.0);
    for p in lm.points() {
        draw_line(&mut out, Point2::new(p.x - r, p.y), Point2::new(p.x + r, p.y), 0);
        draw_line(&mut out, Point2::new(p.x, p.y - r), Point2::new(p.x, p.y + r), 0);
    }
    out
}
