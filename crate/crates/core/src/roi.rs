//! Landmark-driven ROI normalization: toe-left, L1-L3 horizontal, square
//! crop around the landmarks, CLAHE. Fracture polygons follow the same map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{clahe, flip_point, warp, ClaheParams, GrayImage, Point2, Similarity2, Vec2};
use crate::metrics::Mask;
use crate::rirv::{FlipRule, LandmarkSet};

pub type Polygon = Vec<Point2>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoiParams {
    /// Crop side as a multiple of the L1-L3 distance.
    pub side_factor: f64,
    pub out_side: usize,
    pub clahe: ClaheParams,
    pub flip_rule: FlipRule,
}

impl Default for RoiParams {
    fn default() -> Self {
        RoiParams {
            side_factor: 2.0,
            out_side: 512,
            clahe: ClaheParams::default(),
            flip_rule: FlipRule::default(),
        }
    }
}

/// Original image coordinates to ROI coordinates: optional mirror about the
/// source width, then a similarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiTransform {
    pub flip: bool,
    pub source_width: usize,
    pub similarity: Similarity2,
}

impl RoiTransform {
    pub fn apply(&self, p: Point2) -> Point2 {
        let q = if self.flip { flip_point(p, self.source_width) } else { p };
        self.similarity.apply(q)
    }

    pub fn invert(&self, q: Point2) -> Point2 {
        let p = self.similarity.inverse().apply(q);
        if self.flip {
            flip_point(p, self.source_width)
        } else {
            p
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiResult {
    pub roi: GrayImage,
    pub to_roi: RoiTransform,
    pub mask: Option<Mask>,
    /// Landmarks in ROI coordinates.
    pub landmarks: LandmarkSet,
}

/// Even-odd point-in-polygon test with implicit closure.
pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Marks pixels whose centers fall inside an odd number of polygon rings.
pub fn rasterize_polygons(polygons: &[Polygon], width: usize, height: usize) -> Mask {
    let mut mask = Mask::empty(width, height);
    for y in 0..height {
        for x in 0..width {
            let p = Point2::new(x as f64, y as f64);
            let hits = polygons.iter().filter(|poly| point_in_polygon(p, poly)).count();
            mask.set(x, y, hits % 2 == 1);
        }
    }
    mask
}

pub fn roi_transform(img_width: usize, lm: &LandmarkSet, params: &RoiParams) -> Result<RoiTransform> {
    if lm.points().iter().any(|p| !p.is_finite()) {
        return Err(Error::Input("landmarks must be finite".into()));
    }
    let chord = lm.l1().distance(lm.l3());
    if chord <= 8.0 {
        return Err(Error::Input(format!(
            "L1-L3 distance {chord:.2} px is too small for an ROI"
        )));
    }
    if !(params.side_factor > 0.0) || params.out_side == 0 {
        return Err(Error::Argument(
            "ROI side factor and output size must be positive".into(),
        ));
    }
    let flip = params.flip_rule.needs_flip(lm);
    let lm = if flip { lm.flipped(img_width) } else { *lm };
    // Rotate about the L1-L3 midpoint so that L1 -> L3 points along -x.
    let phi = std::f64::consts::PI - lm.axis_angle();
    let rotate = Similarity2::about(lm.l1().midpoint(lm.l3()), phi, 1.0);
    let center = rotate.apply(lm.centroid());
    let side = params.side_factor * chord;
    let k = params.out_side as f64 / side;
    // The crop spans [center - side/2, center + side/2]; pixel centers sit
    // at half-integer offsets from its edge.
    let half = params.out_side as f64 / 2.0 - 0.5;
    let crop = Similarity2::new(0.0, k, Vec2::new(half - center.x * k, half - center.y * k));
    Ok(RoiTransform {
        flip,
        source_width: img_width,
        similarity: crop.compose(&rotate),
    })
}

pub fn normalize_roi(
    img: &GrayImage,
    lm: &LandmarkSet,
    polygons: Option<&[Polygon]>,
    params: &RoiParams,
) -> Result<RoiResult> {
    let to_roi = roi_transform(img.width(), lm, params)?;
    let source = if to_roi.flip {
        crate::imaging::flip_horizontal(img)
    } else {
        img.clone()
    };
    let n = params.out_side;
    let warped = warp(&source, n, n, &to_roi.similarity.inverse());
    let roi = clahe(&warped, params.clahe);
    let mask = polygons.map(|polys| {
        let mapped: Vec<Polygon> = polys
            .iter()
            .map(|poly| poly.iter().map(|&p| to_roi.apply(p)).collect())
            .collect();
        rasterize_polygons(&mapped, n, n)
    });
    Ok(RoiResult {
        roi,
        to_roi,
        mask,
        landmarks: lm.map(|p| to_roi.apply(p)),
    })
}
