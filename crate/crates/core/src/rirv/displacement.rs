//! Displacement normalization into a patch's own rotated, scaled frame.

use crate::descriptor::PatchSpec;
use crate::error::{Error, Result};
use crate::imaging::Vec2;

/// `[cos θ  −sin θ; sin θ  cos θ] · v`.
pub fn rotate_vec(v: Vec2, theta: f64) -> Vec2 {
    v.rotated(theta)
}

/// `rotate(d, θ) / s`.
pub fn normalize_displacement(d: Vec2, theta: f64, size: f64) -> Result<Vec2> {
    check_size(size)?;
    Ok(rotate_vec(d, theta) / size)
}

/// `rotate(d_norm, −θ) · s`; inverse of [`normalize_displacement`].
pub fn denormalize_displacement(d_norm: Vec2, theta: f64, size: f64) -> Result<Vec2> {
    check_size(size)?;
    Ok(rotate_vec(d_norm, -theta) * size)
}

/// Displacement expressed in a patch's own frame (x along the patch
/// orientation), divided by the patch size.
pub fn to_patch_frame(d: Vec2, patch: &PatchSpec) -> Result<Vec2> {
    normalize_displacement(d, -patch.orientation, patch.size)
}

/// Inverse of [`to_patch_frame`].
pub fn from_patch_frame(d_norm: Vec2, patch: &PatchSpec) -> Result<Vec2> {
    denormalize_displacement(d_norm, -patch.orientation, patch.size)
}

fn check_size(size: f64) -> Result<()> {
    if size > 0.0 && size.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("patch size must be positive, got {size}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn rotate_examples() {
        assert_eq!(rotate_vec(Vec2::new(1.0, 0.0), 0.0), Vec2::new(1.0, 0.0));
        assert!(close(
            rotate_vec(Vec2::new(1.0, 0.0), FRAC_PI_2),
            Vec2::new(0.0, 1.0),
            1e-15
        ));
        let (s, c) = 0.5f64.sin_cos();
        let expected = Vec2::new(3.0 * c - 4.0 * s, 3.0 * s + 4.0 * c);
        assert!(close(rotate_vec(Vec2::new(3.0, 4.0), 0.5), expected, 1e-15));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize_displacement(Vec2::new(6.0, 8.0), 0.0, 2.0).unwrap(),
            Vec2::new(3.0, 4.0)
        );
        let q = normalize_displacement(Vec2::new(5.0, 0.0), FRAC_PI_2, 5.0).unwrap();
        assert!(close(q, Vec2::new(0.0, 1.0), 1e-15));
        assert_eq!(
            denormalize_displacement(Vec2::new(3.0, 4.0), 0.0, 2.0).unwrap(),
            Vec2::new(6.0, 8.0)
        );
        let back = denormalize_displacement(Vec2::new(0.0, 1.0), FRAC_PI_2, 5.0).unwrap();
        assert!(close(back, Vec2::new(5.0, 0.0), 1e-14));
    }

    #[test]
    fn non_positive_size_rejected() {
        assert!(normalize_displacement(Vec2::new(1.0, 1.0), 0.0, 0.0).is_err());
        assert!(denormalize_displacement(Vec2::new(1.0, 1.0), 0.0, -3.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(dx in -500.0f64..500.0, dy in -500.0f64..500.0, theta in -7.0f64..7.0, s in 1.0f64..100.0) {
            let d = Vec2::new(dx, dy);
            let back = denormalize_displacement(normalize_displacement(d, theta, s).unwrap(), theta, s).unwrap();
            prop_assert!((back - d).norm() < 1e-9);
        }

        #[test]
        fn rotation_preserves_norm(x in -1e3f64..1e3, y in -1e3f64..1e3, theta in -7.0f64..7.0) {
            let v = Vec2::new(x, y);
            prop_assert!((rotate_vec(v, theta).norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
        }

        #[test]
        fn denormalize_scales_norm(x in -10.0f64..10.0, y in -10.0f64..10.0, theta in -7.0f64..7.0, s in 0.5f64..80.0) {
            let v = Vec2::new(x, y);
            let d = denormalize_displacement(v, theta, s).unwrap();
            prop_assert!((d.norm() - s * v.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn patch_frame_is_rotation_invariant() {
        let p = PatchSpec::new(crate::imaging::Point2::new(0.0, 0.0), 10.0, 0.3);
        let d = Vec2::new(4.0, -7.0);
        let base = to_patch_frame(d, &p).unwrap();
        for alpha in [0.5, 2.0, -1.2] {
            let q = PatchSpec::new(p.center, p.size, p.orientation + alpha);
            let rotated = to_patch_frame(rotate_vec(d, alpha), &q).unwrap();
            assert!(close(base, rotated, 1e-12));
            assert!(close(
                from_patch_frame(rotated, &q).unwrap(),
                rotate_vec(d, alpha),
                1e-12
            ));
        }
        // Local +x is the patch orientation.
        let along = to_patch_frame(Vec2::new(0.3f64.cos(), 0.3f64.sin()) * 10.0, &p).unwrap();
        assert!(close(along, Vec2::new(1.0, 0.0), 1e-12));
    }
}
