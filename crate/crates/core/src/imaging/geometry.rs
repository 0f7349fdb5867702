use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A position in image coordinates: `x` grows rightward (columns), `y` grows
/// downward (rows). Pixel centers sit on integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// A displacement between two image positions, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn to_vec(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Rotation by `theta` with the matrix `[cos -sin; sin cos]`.
    pub fn rotated(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Sub for Point2 {
    type Output = Vec2;
    fn sub(self, rhs: Point2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Add<Vec2> for Point2 {
    type Output = Point2;
    fn add(self, rhs: Vec2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub<Vec2> for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Vec2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

/// `p ↦ scale · R(rotation) · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity2 {
    pub rotation: f64,
    pub scale: f64,
    pub translation: Vec2,
}

impl Default for Similarity2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Similarity2 {
    pub const fn identity() -> Self {
        Similarity2 {
            rotation: 0.0,
            scale: 1.0,
            translation: Vec2::new(0.0, 0.0),
        }
    }

    pub fn new(rotation: f64, scale: f64, translation: Vec2) -> Self {
        debug_assert!(scale > 0.0, "similarity scale must be positive");
        Similarity2 {
            rotation,
            scale,
            translation,
        }
    }

    /// Rotation by `theta` and scaling by `scale` about a fixed `center`.
    pub fn about(center: Point2, theta: f64, scale: f64) -> Self {
        let c = center.to_vec();
        let moved = c.rotated(theta) * scale;
        Similarity2::new(theta, scale, c - moved)
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let v = p.to_vec().rotated(self.rotation) * self.scale + self.translation;
        Point2::new(v.x, v.y)
    }

    /// Transforms a displacement (no translation).
    pub fn apply_vec(&self, v: Vec2) -> Vec2 {
        v.rotated(self.rotation) * self.scale
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &Similarity2) -> Similarity2 {
        Similarity2 {
            rotation: self.rotation + inner.rotation,
            scale: self.scale * inner.scale,
            translation: self.apply_vec(inner.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Similarity2 {
        let scale = 1.0 / self.scale;
        Similarity2 {
            rotation: -self.rotation,
            scale,
            translation: -(self.translation.rotated(-self.rotation) * scale),
        }
    }
}

/// Free-function form of [`Similarity2::apply`].
pub fn apply_similarity(t: &Similarity2, p: Point2) -> Point2 {
    t.apply(p)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}
