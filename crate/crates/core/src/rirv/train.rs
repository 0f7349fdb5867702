use std::time::Instant;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::displacement::to_patch_frame;
use super::landmarks::LandmarkSet;
use super::model::{AxisPair, RirvModel, TrainConfig, FORMAT_VERSION};
use super::params::{validate_tables, LANDMARKS, STAGES};
use super::sampling::sample_patches;
use super::{derive_seed, to_working};
use crate::descriptor::{extract_descriptor, Descriptor};
use crate::error::{Error, Result};
use crate::imaging::{flip_horizontal, GrayImage};
use crate::svr::svr_train_shared;

#[derive(Default)]
struct Bucket {
    features: Vec<Descriptor>,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

/// Accumulates training samples image by image, then fits all regressors.
pub struct SampleCollector {
    cfg: TrainConfig,
    buckets: Vec<Bucket>,
    cases: usize,
}

impl SampleCollector {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        validate_tables(&cfg.train_stages, &cfg.predict_stages)?;
        cfg.hyper.validate()?;
        if cfg.working_side < 64 {
            return Err(Error::Argument(format!("working side {} too small", cfg.working_side)));
        }
        Ok(SampleCollector {
            buckets: (0..STAGES * LANDMARKS).map(|_| Bucket::default()).collect(),
            cfg,
            cases: 0,
        })
    }

    pub fn case_count(&self) -> usize {
        self.cases
    }

    /// Samples count per (stage, landmark), in bucket order.
    pub fn sample_counts(&self) -> Vec<usize> {
        self.buckets.iter().map(|b| b.features.len()).collect()
    }

    /// Samples patches around the annotated landmarks of one image.
    pub fn add(&mut self, name: &str, img: &GrayImage, landmarks: &LandmarkSet) -> Result<()> {
        for (k, p) in landmarks.points().iter().enumerate() {
            if !p.is_finite() || !img.contains(*p) {
                return Err(Error::Data {
                    case: name.to_string(),
                    message: format!(
                        "landmark L{} at ({:.1}, {:.1}) lies outside the {}x{} image",
                        k + 1,
                        p.x,
                        p.y,
                        img.width(),
                        img.height()
                    ),
                });
            }
        }
        let case_index = self.cases as u64;
        let (work, to_work) = to_working(img, self.cfg.working_side);
        let lm = landmarks.transformed(&to_work);
        let flip = self.cfg.flip_rule.needs_flip(&lm);
        let flipped = flip.then(|| (flip_horizontal(&work), lm.flipped(work.width())));

        for (s, stage) in self.cfg.train_stages.iter().enumerate() {
            let (image, truth) = match (&flipped, s >= 2) {
                (Some((fi, fl)), true) => (fi, *fl),
                _ => (&work, lm),
            };
            let theta_base = (s > 0).then(|| truth.axis_angle());
            for i in 0..LANDMARKS {
                let target = truth.0[i];
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, &[case_index, s as u64, i as u64]));
                let patches = sample_patches(&mut rng, image, (s > 0).then_some(target), stage, theta_base);
                let bucket = &mut self.buckets[s * LANDMARKS + i];
                for p in patches {
                    let d = to_patch_frame(target - p.center, &p)?;
                    bucket.features.push(extract_descriptor(image, &p));
                    bucket.dx.push(d.x);
                    bucket.dy.push(d.y);
                }
            }
        }
        self.cases += 1;
        debug!("sampled case {name} (flip: {flip})");
        Ok(())
    }

    /// Fits the 4 × 4 × 2 regressors.
    pub fn finish(self) -> Result<RirvModel> {
        if self.cases == 0 {
            return Err(Error::Argument("training set is empty".into()));
        }
        let SampleCollector { cfg, buckets, .. } = self;
        let mut regressors = Vec::with_capacity(buckets.len());
        for (k, bucket) in buckets.into_iter().enumerate() {
            let (s, i) = (k / LANDMARKS, k % LANDMARKS);
            let started = Instant::now();
            let seed = derive_seed(cfg.seed, &[u64::MAX, s as u64, i as u64]);
            let mut pair = svr_train_shared(
                &bucket.features,
                &[&bucket.dx, &bucket.dy],
                cfg.hyper,
                seed,
                cfg.cache_bytes,
            )?;
            let y = pair.pop().expect("two axes");
            let x = pair.pop().expect("two axes");
            info!(
                "stage {} landmark L{}: {} samples, {} support vectors, iterations {}/{} (converged {}/{}) in {:.1}s",
                s + 1,
                i + 1,
                bucket.features.len(),
                x.support_count(),
                x.fit.iterations,
                y.fit.iterations,
                x.fit.converged,
                y.fit.converged,
                started.elapsed().as_secs_f64()
            );
            regressors.push(AxisPair { x, y });
        }
        Ok(RirvModel {
            format_version: FORMAT_VERSION,
            working_side: cfg.working_side,
            train_stages: cfg.train_stages,
            predict_stages: cfg.predict_stages,
            flip_rule: cfg.flip_rule,
            regressors,
        })
    }
}

/// Trains a complete model from in-memory cases.
pub fn train_pipeline(dataset: &[(GrayImage, LandmarkSet)], cfg: &TrainConfig) -> Result<RirvModel> {
    if dataset.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let mut collector = SampleCollector::new(cfg.clone())?;
    for (k, (img, lm)) in dataset.iter().enumerate() {
        collector.add(&format!("case {k}"), img, lm)?;
    }
    collector.finish()
}
