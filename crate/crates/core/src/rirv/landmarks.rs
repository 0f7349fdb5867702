use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{flip_point, Point2, Similarity2};

/// The four calcaneal landmarks, in order:
/// L1 posterior tuberosity, L2 posterior facet apex, L3 anterior process,
/// L4 apex of the critical angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSet(pub [Point2; 4]);

impl LandmarkSet {
    pub fn new(l1: Point2, l2: Point2, l3: Point2, l4: Point2) -> Self {
        LandmarkSet([l1, l2, l3, l4])
    }

    pub fn l1(&self) -> Point2 {
        self.0[0]
    }
    pub fn l2(&self) -> Point2 {
        self.0[1]
    }
    pub fn l3(&self) -> Point2 {
        self.0[2]
    }
    pub fn l4(&self) -> Point2 {
        self.0[3]
    }

    pub fn points(&self) -> &[Point2; 4] {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().all(|p| p.is_finite()) {
            Ok(())
        } else {
            Err(Error::Input("landmark coordinates must be finite".into()))
        }
    }

    pub fn map(&self, f: impl Fn(Point2) -> Point2) -> LandmarkSet {
        LandmarkSet(self.0.map(f))
    }

    pub fn transformed(&self, t: &Similarity2) -> LandmarkSet {
        self.map(|p| t.apply(p))
    }

    /// Companion of `flip_horizontal` for an image `width` columns wide.
    pub fn flipped(&self, width: usize) -> LandmarkSet {
        self.map(|p| flip_point(p, width))
    }

    /// Direction of the L1 → L3 line.
    pub fn axis_angle(&self) -> f64 {
        (self.l3() - self.l1()).angle()
    }

    pub fn centroid(&self) -> Point2 {
        let (sx, sy) = self.0.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        Point2::new(sx / 4.0, sy / 4.0)
    }
}

/// Toes point left in an upright image: the anterior process L3 lies left of
/// the tuberosity L1.
pub fn toe_left(lm: &LandmarkSet) -> bool {
    lm.l3().x < lm.l1().x
}

/// Which test decides whether an image must be mirrored before the fine
/// stages and before measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipRule {
    /// Handedness of the L3, L4, L2 triangle. Unaffected by in-plane rotation.
    #[default]
    Handedness,
    /// [`toe_left`]; only meaningful for upright images.
    HorizontalOrder,
}

impl FlipRule {
    pub fn needs_flip(self, lm: &LandmarkSet) -> bool {
        match self {
            FlipRule::Handedness => !has_toe_left_handedness(lm),
            FlipRule::HorizontalOrder => !toe_left(lm),
        }
    }
}

/// True when the landmarks have the handedness of a toe-left foot: walking
/// L3 → L4 → L2, the notch at L4 bends the path counter-clockwise on screen
/// (y down). A rotated toe-left image keeps this handedness; a mirrored one
/// does not. Falls back to [`toe_left`] when the three points are collinear.
pub fn has_toe_left_handedness(lm: &LandmarkSet) -> bool {
    let a = lm.l4() - lm.l3();
    let b = lm.l2() - lm.l3();
    let cross = a.cross(b);
    let scale = a.norm() * b.norm();
    if cross.abs() <= 1e-6 * scale {
        return toe_left(lm);
    }
    cross < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(l1: (f64, f64), l3: (f64, f64)) -> LandmarkSet {
        let mid = Point2::new(0.5 * (l1.0 + l3.0), 0.5 * (l1.1 + l3.1));
        LandmarkSet::new(Point2::new(l1.0, l1.1), mid, Point2::new(l3.0, l3.1), mid)
    }

    #[test]
    fn toe_left_examples() {
        assert!(toe_left(&set((200.0, 60.0), (10.0, 50.0))));
        assert!(!toe_left(&set((10.0, 60.0), (200.0, 50.0))));
        let right = set((10.0, 60.0), (200.0, 50.0));
        assert!(toe_left(&right.flipped(256)));
    }

    fn canonical() -> LandmarkSet {
        LandmarkSet::new(
            Point2::new(150.0, 95.0),
            Point2::new(70.0, 60.0),
            Point2::new(20.0, 100.0),
            Point2::new(58.0, 105.0),
        )
    }

    #[test]
    fn handedness_survives_rotation_not_mirroring() {
        let lm = canonical();
        assert!(has_toe_left_handedness(&lm));
        assert!(!has_toe_left_handedness(&lm.flipped(300)));
        for k in 0..12 {
            let t = Similarity2::about(Point2::new(90.0, 90.0), k as f64 * 0.5, 1.3);
            let r = lm.transformed(&t);
            assert!(has_toe_left_handedness(&r));
            assert!(!FlipRule::Handedness.needs_flip(&r));
        }
        let upside_down = lm.transformed(&Similarity2::about(Point2::new(90.0, 90.0), std::f64::consts::PI, 1.0));
        assert!(FlipRule::HorizontalOrder.needs_flip(&upside_down));
    }
}
