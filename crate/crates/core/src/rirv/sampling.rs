use rand::Rng;

use super::params::StageParams;
use crate::descriptor::{dominant_orientation, PatchSpec};
use crate::imaging::{GrayImage, Point2};

/// Bounds of the sampling region: the whole canvas, or a `side × side`
/// square around `center` clipped to the canvas.
pub fn sampling_bounds(width: usize, height: usize, center: Option<Point2>, side: Option<f64>) -> ([f64; 2], [f64; 2]) {
    let (xmax, ymax) = ((width - 1) as f64, (height - 1) as f64);
    match (center, side) {
        (Some(c), Some(d)) => {
            let cx = c.x.clamp(0.0, xmax);
            let cy = c.y.clamp(0.0, ymax);
            let h = 0.5 * d;
            (
                [(cx - h).max(0.0), (cx + h).min(xmax)],
                [(cy - h).max(0.0), (cy + h).min(ymax)],
            )
        }
        _ => ([0.0, xmax], [0.0, ymax]),
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Draws `stage.count` patches. Centers are uniform over the sampling
/// region, sizes uniform over `stage.size_range`. Orientation is the dominant
/// gradient angle when the stage has no perturbation range, otherwise
/// `theta_base` plus a uniform perturbation.
pub fn sample_patches<R: Rng + ?Sized>(
    rng: &mut R,
    img: &GrayImage,
    region_center: Option<Point2>,
    stage: &StageParams,
    theta_base: Option<f64>,
) -> Vec<PatchSpec> {
    let (xs, ys) = sampling_bounds(img.width(), img.height(), region_center, stage.region);
    (0..stage.count)
        .map(|_| {
            let center = Point2::new(uniform(rng, xs), uniform(rng, ys));
            let size = uniform(rng, stage.size_range);
            let orientation = match stage.delta_theta {
                None => dominant_orientation(img, center, size).angle,
                Some(range) => theta_base.expect("perturbed stages need a base orientation") + uniform(rng, range),
            };
            PatchSpec::new(center, size, orientation)
        })
        .collect()
}
