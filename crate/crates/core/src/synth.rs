//! Deterministic synthetic lateral "radiographs" with known landmarks and
//! optional fracture regions.
//!
//! A fixed calcaneus-like template lives in a unit frame (toes left, y down,
//! L1-L3 chord of length ~1). Each case scales it to pixels, applies a random
//! similarity about the image center, renders bone, neighbouring bones and
//! soft tissue, then adds a gradient and noise and blurs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{to_u8, GrayImage, Point2, Similarity2, Vec2};
use crate::rirv::{derive_seed, LandmarkSet};
use crate::roi::{point_in_polygon, Polygon};

/// Template landmarks L1..L4 in the unit frame.
pub const TEMPLATE_LANDMARKS: [(f64, f64); 4] = [(0.5, -0.02), (0.1, -0.15), (-0.5, 0.0), (-0.12, 0.05)];

/// Calcaneus outline in the unit frame, starting at L3 and running over the
/// superior surface.
const OUTLINE: [(f64, f64); 11] = [
    (-0.5, 0.0),
    (-0.12, 0.05),
    (0.1, -0.15),
    (0.28, 0.04),
    (0.5, -0.02),
    (0.6, 0.08),
    (0.62, 0.3),
    (0.45, 0.42),
    (-0.1, 0.38),
    (-0.4, 0.25),
    (-0.55, 0.12),
];

const TALUS: [(f64, f64); 6] = [
    (-0.28, -0.22),
    (-0.1, -0.4),
    (0.15, -0.46),
    (0.3, -0.33),
    (0.22, -0.22),
    (0.02, -0.24),
];
const CUBOID: [(f64, f64); 4] = [(-0.86, -0.06), (-0.61, -0.04), (-0.6, 0.2), (-0.84, 0.22)];
/// Template units per image side.
const UNIT_PER_SIDE: f64 = 0.42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub count: usize,
    pub side: usize,
    /// Radians, [min, max].
    pub rotation_range: [f64; 2],
    pub scale_range: [f64; 2],
    /// Maximum absolute shift per axis, px.
    pub translation_range: f64,
    /// Standard deviation of additive Gaussian noise, gray levels.
    pub noise: f64,
    pub fracture_rate: f64,
    /// Probability of mirroring the template (toes right).
    pub mirror_rate: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        let r = 10f64.to_radians();
        SynthParams {
            count: 10,
            side: 640,
            rotation_range: [-r, r],
            scale_range: [0.9, 1.1],
            translation_range: 30.0,
            noise: 4.0,
            fracture_rate: 0.3,
            mirror_rate: 0.0,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.side < 64 {
            return Err(Error::Argument(format!("image side {} below 64", self.side)));
        }
        if !ordered(self.rotation_range) || !ordered(self.scale_range) || self.scale_range[0] <= 0.0 {
            return Err(Error::Argument(
                "rotation and scale ranges must be ordered, scale positive".into(),
            ));
        }
        if !(self.translation_range >= 0.0) || !(self.noise >= 0.0) {
            return Err(Error::Argument(
                "translation range and noise must be non-negative".into(),
            ));
        }
        if !unit(self.fracture_rate) || !unit(self.mirror_rate) {
            return Err(Error::Argument("fracture and mirror rates must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractureKind {
    Intra,
    Extra,
}

impl FractureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FractureKind::Intra => "intra",
            FractureKind::Extra => "extra",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCase {
    pub image: GrayImage,
    pub landmarks: LandmarkSet,
    pub fractured: bool,
    pub polygons: Vec<Polygon>,
    pub kind: Option<FractureKind>,
    /// Template pixel frame to image.
    pub transform: Similarity2,
    pub mirrored: bool,
}

fn unit_to_template(side: usize) -> Similarity2 {
    let c = side as f64 / 2.0;
    Similarity2::new(0.0, UNIT_PER_SIDE * side as f64, Vec2::new(c, c))
}

/// Template landmarks in pixels for an upright, unscaled case.
pub fn template_landmarks(side: usize) -> LandmarkSet {
    let t = unit_to_template(side);
    LandmarkSet(TEMPLATE_LANDMARKS.map(|(x, y)| t.apply(Point2::new(x, y))))
}

fn pts(raw: &[(f64, f64)]) -> Vec<Point2> {
    raw.iter().map(|&(x, y)| Point2::new(x, y)).collect()
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn edge_distance(p: Point2, poly: &[Point2]) -> f64 {
    (0..poly.len())
        .map(|i| segment_distance(p, poly[i], poly[(i + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

fn polyline_distance(p: Point2, line: &[Point2]) -> f64 {
    line.windows(2)
        .map(|w| segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

struct Bbox {
    min: Point2,
    max: Point2,
}

impl Bbox {
    fn of(points: &[Point2], pad: f64) -> Self {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        Bbox {
            min: Point2::new(min.x - pad, min.y - pad),
            max: Point2::new(max.x + pad, max.y + pad),
        }
    }

    fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Seed of the fixed anatomical texture. Changing it changes the benchmark.
const TEXTURE_SEED: u64 = 0xCA1C_A4E0_5001;
const TEXTURE_COMPONENTS: usize = 48;

/// Plane waves `(kx, ky, phase, amplitude)` of the fixed texture field.
fn texture_waves() -> &'static [(f64, f64, f64, f64)] {
    static WAVES: std::sync::OnceLock<Vec<(f64, f64, f64, f64)>> = std::sync::OnceLock::new();
    WAVES.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(TEXTURE_SEED);
        (0..TEXTURE_COMPONENTS)
            .map(|_| {
                // Wavelengths 0.06..0.4 template units, log-uniform.
                let wavelength = (rng.gen_range(0.06f64.ln()..0.4f64.ln())).exp();
                let k = std::f64::consts::TAU / wavelength;
                let dir = rng.gen_range(0.0..std::f64::consts::TAU);
                let amp = 4.0 * (wavelength / 0.1).sqrt();
                (
                    k * dir.cos(),
                    k * dir.sin(),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    amp,
                )
            })
            .collect()
    })
}

/// Fixed quasi-random texture in the unit frame, roughly zero mean.
fn texture(u: Point2) -> f64 {
    texture_waves()
        .iter()
        .map(|&(kx, ky, ph, a)| a * (kx * u.x + ky * u.y + ph).sin())
        .sum()
}

/// Everything about one case that lives in the unit frame.
struct Scene {
    outline: Vec<Point2>,
    talus: Vec<Point2>,
    cuboid: Vec<Point2>,
    crack: Option<Vec<Point2>>,
    bone_level: f64,
    tissue_level: f64,
}

const RIM: f64 = 0.018;
const CRACK_HALF_WIDTH: f64 = 0.008;
const CRACK_REGION: f64 = 0.03;

impl Scene {
    /// Intensity at a unit-frame point.
    fn intensity(&self, u: Point2, boxes: &[Bbox; 4]) -> f64 {
        let mut v = 28.0;
        let e = ((u.x - 0.0) / 1.0).powi(2) + ((u.y - 0.05) / 0.62).powi(2);
        if e < 1.0 {
            v += self.tissue_level * (1.0 - e).sqrt().min(0.3) / 0.3;
        }
        for (poly, bbox, level) in [(&self.talus, &boxes[1], 0.8), (&self.cuboid, &boxes[2], 0.75)] {
            if bbox.contains(u) && point_in_polygon(u, poly) {
                let rim = edge_distance(u, poly) < RIM;
                v += self.bone_level * level + if rim { 25.0 } else { 0.0 };
            }
        }
        if boxes[0].contains(u) && point_in_polygon(u, &self.outline) {
            let d = edge_distance(u, &self.outline);
            v += self.bone_level;
            if d < RIM {
                v += 45.0 * (1.0 - d / RIM);
            }
            // Trabecular band under the posterior facet.
            let band = segment_distance(u, Point2::new(0.1, -0.1), Point2::new(0.05, 0.3));
            v += 14.0 * (-band * band / 0.004).exp();
            if let (Some(crack), true) = (&self.crack, boxes[3].contains(u)) {
                if polyline_distance(u, crack) < CRACK_HALF_WIDTH {
                    v -= 0.65 * self.bone_level;
                }
            }
        }
        v
    }
}

fn crack_polyline(rng: &mut impl Rng, kind: FractureKind) -> Vec<Point2> {
    let (start, end) = match kind {
        // From the posterior facet down through the body.
        FractureKind::Intra => (
            Point2::new(rng.gen_range(0.0..0.2), -0.2),
            Point2::new(rng.gen_range(-0.15..0.25), 0.45),
        ),
        // Across the tuberosity.
        FractureKind::Extra => (
            Point2::new(rng.gen_range(0.35..0.45), 0.0),
            Point2::new(rng.gen_range(0.45..0.6), 0.45),
        ),
    };
    let steps = 6;
    (0..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            let jitter = if k == 0 || k == steps {
                0.0
            } else {
                rng.gen_range(-0.03..0.03)
            };
            Point2::new(
                start.x + (end.x - start.x) * t + jitter,
                start.y + (end.y - start.y) * t,
            )
        })
        .collect()
}

/// Offsets a polyline into a closed ring enclosing every point within
/// `radius` of it (sides offset, ends squared off).
fn dilate_polyline(line: &[Point2], radius: f64) -> Polygon {
    let n = line.len();
    let normal = |i: usize| {
        let d = if i + 1 < n {
            line[i + 1] - line[i]
        } else {
            line[i] - line[i - 1]
        };
        let d = d / d.norm();
        Vec2::new(-d.y, d.x)
    };
    let offset = |i: usize| {
        // Average adjacent normals so the ring does not self-intersect at bends.
        let m = if i == 0 || i + 1 == n {
            normal(i)
        } else {
            normal(i - 1) + normal(i)
        };
        let m = m / m.norm();
        let cos = if i == 0 || i + 1 == n {
            1.0
        } else {
            m.dot(normal(i)).max(0.5)
        };
        m * (radius / cos)
    };
    let dir = |i: usize| {
        let d = if i == 0 {
            line[1] - line[0]
        } else {
            line[n - 1] - line[n - 2]
        };
        d / d.norm() * radius
    };
    let mut ring = Vec::with_capacity(2 * n);
    for (i, &p) in line.iter().enumerate() {
        let extend = if i == 0 {
            -dir(0)
        } else if i + 1 == n {
            dir(n - 1)
        } else {
            Vec2::new(0.0, 0.0)
        };
        ring.push(p + offset(i) + extend);
    }
    for i in (0..n).rev() {
        let extend = if i == 0 {
            -dir(0)
        } else if i + 1 == n {
            dir(n - 1)
        } else {
            Vec2::new(0.0, 0.0)
        };
        ring.push(line[i] - offset(i) + extend);
    }
    ring
}

fn gaussian_blur(values: &mut [f64], width: usize, height: usize, sigma: f64) {
    let r = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|k| k / total).collect();
    let mut tmp = vec![0.0; values.len()];
    // Edges replicate.
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                let xx = (x as isize + j as isize - r).clamp(0, width as isize - 1) as usize;
                acc += k * values[y * width + xx];
            }
            tmp[y * width + x] = acc;
        }
    }
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (j, k) in kernel.iter().enumerate() {
                let yy = (y as isize + j as isize - r).clamp(0, height as isize - 1) as usize;
                acc += k * tmp[yy * width + x];
            }
            values[y * width + x] = acc;
        }
    }
}

/// The random draws of one case; rendering is deterministic given these.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseLayout {
    pub rotation: f64,
    pub scale: f64,
    pub shift: Vec2,
    pub mirrored: bool,
    pub kind: Option<FractureKind>,
    crack: Option<Vec<Point2>>,
    bone_level: f64,
    tissue_level: f64,
    texture_gain: f64,
    gradient_angle: f64,
    gradient: f64,
}

pub fn draw_layout(rng: &mut impl Rng, params: &SynthParams) -> CaseLayout {
    let mut uniform = |r: [f64; 2]| if r[0] == r[1] { r[0] } else { rng.gen_range(r[0]..r[1]) };
    let rotation = uniform(params.rotation_range);
    let scale = uniform(params.scale_range);
    let t = params.translation_range;
    let shift = Vec2::new(uniform([-t, t]), uniform([-t, t]));
    let mirrored = params.mirror_rate > 0.0 && rng.gen_bool(params.mirror_rate);
    let fractured = params.fracture_rate > 0.0 && rng.gen_bool(params.fracture_rate);
    let kind = fractured.then(|| {
        if rng.gen_bool(0.5) {
            FractureKind::Intra
        } else {
            FractureKind::Extra
        }
    });
    let crack = kind.map(|k| crack_polyline(rng, k));
    CaseLayout {
        rotation,
        scale,
        shift,
        mirrored,
        kind,
        crack,
        bone_level: rng.gen_range(105.0..135.0),
        tissue_level: rng.gen_range(25.0..45.0),
        texture_gain: rng.gen_range(0.85..1.15),
        gradient_angle: rng.gen_range(0.0..std::f64::consts::TAU),
        gradient: rng.gen_range(-20.0..20.0),
    }
}

/// Draws and renders one case.
pub fn generate_case(rng: &mut impl Rng, params: &SynthParams) -> Result<SynthCase> {
    params.validate()?;
    let layout = draw_layout(rng, params);
    render_case(rng, params, layout)
}

fn render_case(rng: &mut impl Rng, params: &SynthParams, layout: CaseLayout) -> Result<SynthCase> {
    let side = params.side;
    let CaseLayout {
        rotation,
        scale,
        shift,
        mirrored,
        kind,
        crack,
        gradient_angle,
        gradient,
        ..
    } = layout;
    let fractured = kind.is_some();
    let scene = Scene {
        outline: pts(&OUTLINE),
        talus: pts(&TALUS),
        cuboid: pts(&CUBOID),
        crack,
        bone_level: layout.bone_level,
        tissue_level: layout.tissue_level,
    };

    let center = Point2::new(side as f64 / 2.0, side as f64 / 2.0);
    let placement = Similarity2::new(0.0, 1.0, shift).compose(&Similarity2::about(center, rotation, scale));
    let unit = unit_to_template(side);
    let unit_to_image = placement.compose(&unit);
    let image_to_unit = unit_to_image.inverse();
    let to_unit = |p: Point2| {
        let u = image_to_unit.apply(p);
        if mirrored {
            Point2::new(-u.x, u.y)
        } else {
            u
        }
    };
    let from_unit = |u: Point2| unit_to_image.apply(if mirrored { Point2::new(-u.x, u.y) } else { u });

    let boxes = [
        Bbox::of(&scene.outline, RIM),
        Bbox::of(&scene.talus, RIM),
        Bbox::of(&scene.cuboid, RIM),
        scene
            .crack
            .as_ref()
            .map_or(Bbox::of(&[Point2::new(0.0, 0.0)], -1.0), |c| {
                Bbox::of(c, CRACK_HALF_WIDTH)
            }),
    ];

    const SS: usize = 3;
    let mut values = vec![0.0; side * side];
    let (dir_x, dir_y) = (gradient_angle.cos(), gradient_angle.sin());
    for y in 0..side {
        for x in 0..side {
            let mut acc = 0.0;
            for sy in 0..SS {
                for sx in 0..SS {
                    let p = Point2::new(
                        x as f64 + (sx as f64 + 0.5) / SS as f64 - 0.5,
                        y as f64 + (sy as f64 + 0.5) / SS as f64 - 0.5,
                    );
                    acc += scene.intensity(to_unit(p), &boxes);
                }
            }
            let rel = Vec2::new(x as f64 / side as f64 - 0.5, y as f64 / side as f64 - 0.5);
            let u = to_unit(Point2::new(x as f64, y as f64));
            let weight = if boxes[0].contains(u) && point_in_polygon(u, &scene.outline) {
                1.0
            } else {
                0.6
            };
            values[y * side + x] = acc / (SS * SS) as f64
                + weight * layout.texture_gain * texture(u)
                + gradient * 2.0 * (rel.x * dir_x + rel.y * dir_y);
        }
    }
    if params.noise > 0.0 {
        let normal = Normal::new(0.0, params.noise).map_err(|e| Error::Argument(e.to_string()))?;
        for v in values.iter_mut() {
            *v += normal.sample(rng);
        }
    }
    gaussian_blur(&mut values, side, side, 1.2);
    let image = GrayImage::new(side, side, values.iter().map(|&v| to_u8(v)).collect())?;
    let landmarks = LandmarkSet(TEMPLATE_LANDMARKS.map(|(x, y)| from_unit(Point2::new(x, y))));
    let polygons = scene
        .crack
        .as_ref()
        .map(|c| vec![dilate_polyline(c, CRACK_REGION).into_iter().map(from_unit).collect()])
        .unwrap_or_default();
    Ok(SynthCase {
        image,
        landmarks,
        fractured,
        polygons,
        kind,
        transform: unit_to_image.compose(&unit.inverse()),
        mirrored,
    })
}

/// Case `index` of a dataset, independent of how many other cases are drawn.
pub fn generate_indexed(params: &SynthParams, index: usize) -> Result<SynthCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, &[0x5947_4E54, index as u64]));
    generate_case(&mut rng, params)
}

pub fn generate_dataset(params: &SynthParams) -> Result<Vec<SynthCase>> {
    params.validate()?;
    (0..params.count).map(|i| generate_indexed(params, i)).collect()
}
