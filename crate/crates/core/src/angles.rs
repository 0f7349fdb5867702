//! Bohler's angle (BA) and the critical angle of Gissane (CAG).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::Vec2;
use crate::rirv::LandmarkSet;

pub const BA_RANGE: [f64; 2] = [20.0, 45.0];
pub const CAG_RANGE: [f64; 2] = [90.0, 150.0];
/// Identifies the BA sign convention in reports.
pub const CONVENTION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    /// Degrees in (-180, 180]; positive for normal anatomy.
    pub ba: f64,
    /// Degrees in [0, 180].
    pub cag: f64,
    pub ba_in_range: bool,
    pub cag_in_range: bool,
    pub convention: String,
}

fn check(v: Vec2, what: &str) -> Result<()> {
    if !(v.norm() > 0.0) || !v.is_finite() {
        return Err(Error::DegenerateGeometry(format!("{what} has zero length")));
    }
    Ok(())
}

/// Signed angle from `u` to `v` in degrees, in (-180, 180].
pub fn signed_angle(u: Vec2, v: Vec2) -> Result<f64> {
    check(u, "first vector")?;
    check(v, "second vector")?;
    let deg = u.cross(v).atan2(u.dot(v)).to_degrees();
    Ok(if deg <= -180.0 { deg + 360.0 } else { deg })
}

/// BA = -signed_angle(L2 - L1, L3 - L2) for a toe-left landmark set.
pub fn bohler_angle(lm: &LandmarkSet) -> Result<f64> {
    let a = lm.l2() - lm.l1();
    let b = lm.l3() - lm.l2();
    check(a, "L1-L2")?;
    check(b, "L2-L3")?;
    let ba = -signed_angle(a, b)?;
    Ok(if ba <= -180.0 { ba + 360.0 } else { ba })
}

/// Unsigned angle at L4 between the rays to L2 and L3, degrees.
pub fn gissane_angle(lm: &LandmarkSet) -> Result<f64> {
    let a = lm.l2() - lm.l4();
    let b = lm.l3() - lm.l4();
    check(a, "L4-L2")?;
    check(b, "L4-L3")?;
    let c = (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0);
    Ok(c.acos().to_degrees())
}

pub fn in_range(value: f64, range: [f64; 2]) -> bool {
    value >= range[0] && value <= range[1]
}

pub fn angle_report(lm: &LandmarkSet) -> Result<AngleReport> {
    let ba = bohler_angle(lm)?;
    let cag = gissane_angle(lm)?;
    Ok(AngleReport {
        ba,
        cag,
        ba_in_range: in_range(ba, BA_RANGE),
        cag_in_range: in_range(cag, CAG_RANGE),
        convention: CONVENTION.to_string(),
    })
}
