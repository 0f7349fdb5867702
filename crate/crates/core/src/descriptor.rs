//! SIFT descriptors for explicitly placed, oriented square patches.
//!
//! Patches are never detected here: callers supply the center, side length and
//! orientation. The window is resampled on a fixed 16×16 grid aligned with the
//! patch orientation so descriptors of different sizes are comparable.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::imaging::{wrap_angle, GrayImage, Point2, Vec2};

pub const DESCRIPTOR_LEN: usize = 128;
const GRID: usize = 16;
const SPATIAL_BINS: usize = 4;
const ORIENTATION_BINS: usize = 8;
const CLIP: f64 = 0.2;
const ORIENTATION_HIST_BINS: usize = 36;

/// Square image window `p(x, y, s, θ)`: the patch's local +x axis is
/// `R(θ)(1, 0)` and it spans `size × size` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub center: Point2,
    pub size: f64,
    pub orientation: f64,
}

impl PatchSpec {
    pub fn new(center: Point2, size: f64, orientation: f64) -> Self {
        debug_assert!(size >= 4.0, "patch side below 4 px");
        PatchSpec {
            center,
            size,
            orientation: wrap_angle(orientation),
        }
    }

    /// Same size and orientation, relocated.
    pub fn moved_to(&self, center: Point2) -> Self {
        PatchSpec { center, ..*self }
    }
}

/// 128 non-negative components, unit L2 norm or exactly zero.
#[derive(Clone, PartialEq)]
pub struct Descriptor(pub [f32; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn zeros() -> Self {
        Descriptor([0.0; DESCRIPTOR_LEN])
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn distance(&self, other: &Descriptor) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(&a, &b)| ((a - b) as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::fmt::Debug for Descriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Descriptor(norm={:.4}, ..)", self.norm())
    }
}

/// Dominant gradient direction of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub angle: f64,
    /// Set when the window has no gradient at all; `angle` is then 0.
    pub degenerate: bool,
}

/// Peak of a 36-bin, magnitude- and Gaussian-weighted (σ = s/2) gradient
/// orientation histogram over the disc inscribed in the `s × s` window,
/// refined by a parabola through the peak and its neighbors.
pub fn dominant_orientation(img: &GrayImage, center: Point2, size: f64) -> Orientation {
    let radius = 0.5 * size;
    let sigma = 0.5 * size;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    let bin_width = 2.0 * PI / ORIENTATION_HIST_BINS as f64;
    let mut hist = [0.0f64; ORIENTATION_HIST_BINS];

    let x_lo = (center.x - radius).ceil() as i64;
    let x_hi = (center.x + radius).floor() as i64;
    let y_lo = (center.y - radius).ceil() as i64;
    let y_hi = (center.y + radius).floor() as i64;
    for y in y_lo..=y_hi {
        for x in x_lo..=x_hi {
            let dx = x as f64 - center.x;
            let dy = y as f64 - center.y;
            let r2 = dx * dx + dy * dy;
            if r2 > radius * radius {
                continue;
            }
            let gx = 0.5 * (img.get_or_zero(x + 1, y) - img.get_or_zero(x - 1, y));
            let gy = 0.5 * (img.get_or_zero(x, y + 1) - img.get_or_zero(x, y - 1));
            let mag = gx.hypot(gy);
            if mag == 0.0 {
                continue;
            }
            let weight = mag * (-r2 * inv_two_sigma2).exp();
            let pos = gy.atan2(gx).rem_euclid(2.0 * PI) / bin_width;
            let b0 = pos.floor();
            let frac = pos - b0;
            let b0 = b0 as usize % ORIENTATION_HIST_BINS;
            hist[b0] += weight * (1.0 - frac);
            hist[(b0 + 1) % ORIENTATION_HIST_BINS] += weight * frac;
        }
    }

    let mut peak = 0;
    for (k, &v) in hist.iter().enumerate() {
        if v > hist[peak] {
            peak = k;
        }
    }
    if hist[peak] <= 0.0 {
        return Orientation {
            angle: 0.0,
            degenerate: true,
        };
    }
    let left = hist[(peak + ORIENTATION_HIST_BINS - 1) % ORIENTATION_HIST_BINS];
    let right = hist[(peak + 1) % ORIENTATION_HIST_BINS];
    let denom = left - 2.0 * hist[peak] + right;
    let offset = if denom < 0.0 {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Orientation {
        angle: wrap_angle((peak as f64 + offset) * bin_width),
        degenerate: false,
    }
}

/// Standard SIFT layout (4×4 cells × 8 orientations) computed over the
/// oriented patch window. Flat windows produce the zero vector.
pub fn extract_descriptor(img: &GrayImage, patch: &PatchSpec) -> Descriptor {
    let s = patch.size;
    let spacing = s / GRID as f64;
    let axis_u = Vec2::new(1.0, 0.0).rotated(patch.orientation);
    let axis_v = Vec2::new(0.0, 1.0).rotated(patch.orientation);
    let sub = (spacing.ceil() as usize).clamp(1, 4);
    let sub_offsets: Vec<f64> = (0..sub)
        .map(|m| ((m as f64 + 0.5) / sub as f64 - 0.5) * spacing)
        .collect();
    let sub_norm = 1.0 / (sub * sub) as f64;

    // Intensities on an 18×18 grid: the 16×16 cells plus a one-cell ring.
    const SIDE: usize = GRID + 2;
    let mut values = [0.0f64; SIDE * SIDE];
    for row in 0..SIDE {
        let v = (row as f64 - 0.5) * spacing - 0.5 * s;
        for col in 0..SIDE {
            let u = (col as f64 - 0.5) * spacing - 0.5 * s;
            let mut acc = 0.0;
            for &ov in &sub_offsets {
                for &ou in &sub_offsets {
                    let local = axis_u * (u + ou) + axis_v * (v + ov);
                    acc += img.sample(patch.center.x + local.x, patch.center.y + local.y);
                }
            }
            values[row * SIDE + col] = acc * sub_norm;
        }
    }

    let mut hist = [0.0f64; DESCRIPTOR_LEN];
    let sigma_cells = 0.5 * GRID as f64;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma_cells * sigma_cells);
    let cells_per_bin = (GRID / SPATIAL_BINS) as f64;
    let obin_width = 2.0 * PI / ORIENTATION_BINS as f64;
    for r in 0..GRID {
        for c in 0..GRID {
            let at = |rr: usize, cc: usize| values[rr * SIDE + cc];
            let gu = at(r + 1, c + 2) - at(r + 1, c);
            let gv = at(r + 2, c + 1) - at(r, c + 1);
            let mag = gu.hypot(gv);
            if mag == 0.0 {
                continue;
            }
            let du = c as f64 + 0.5 - 0.5 * GRID as f64;
            let dv = r as f64 + 0.5 - 0.5 * GRID as f64;
            let weight = mag * (-(du * du + dv * dv) * inv_two_sigma2).exp();

            let rb = (r as f64 + 0.5) / cells_per_bin - 0.5;
            let cb = (c as f64 + 0.5) / cells_per_bin - 0.5;
            let ob = gv.atan2(gu).rem_euclid(2.0 * PI) / obin_width;
            let (r0, c0, o0) = (rb.floor(), cb.floor(), ob.floor());
            let (fr, fc, fo) = (rb - r0, cb - c0, ob - o0);
            for (dr, wr) in [(0i64, 1.0 - fr), (1, fr)] {
                let ri = r0 as i64 + dr;
                if !(0..SPATIAL_BINS as i64).contains(&ri) || wr == 0.0 {
                    continue;
                }
                for (dc, wc) in [(0i64, 1.0 - fc), (1, fc)] {
                    let ci = c0 as i64 + dc;
                    if !(0..SPATIAL_BINS as i64).contains(&ci) || wc == 0.0 {
                        continue;
                    }
                    for (dob, wo) in [(0usize, 1.0 - fo), (1, fo)] {
                        let oi = (o0 as usize + dob) % ORIENTATION_BINS;
                        let idx = (ri as usize * SPATIAL_BINS + ci as usize) * ORIENTATION_BINS + oi;
                        hist[idx] += weight * wr * wc * wo;
                    }
                }
            }
        }
    }
    normalize_clip(&mut hist);
    let mut out = [0.0f32; DESCRIPTOR_LEN];
    for (o, h) in out.iter_mut().zip(hist.iter()) {
        *o = *h as f32;
    }
    Descriptor(out)
}

/// L2-normalizes, then saturates components at [`CLIP`] while keeping unit
/// norm (the fixed point of repeated clip-and-renormalize). When fewer than
/// `1 / CLIP²` components are non-zero that fixed point does not exist and a
/// single clip-and-renormalize pass is used instead.
fn normalize_clip(hist: &mut [f64; DESCRIPTOR_LEN]) {
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 1e-12) || !norm.is_finite() {
        hist.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    hist.iter_mut().for_each(|v| *v /= norm);

    let mut order: Vec<usize> = (0..DESCRIPTOR_LEN).collect();
    order.sort_by(|&a, &b| hist[b].total_cmp(&hist[a]).then(a.cmp(&b)));
    let mut tail: f64 = hist.iter().map(|v| v * v).sum();
    for k in 0..DESCRIPTOR_LEN {
        // Clip the k largest, scale the rest by `lambda` to restore unit norm.
        let budget = 1.0 - k as f64 * CLIP * CLIP;
        if budget <= 0.0 || tail <= 0.0 {
            break;
        }
        let lambda = (budget / tail).sqrt();
        if lambda * hist[order[k]] <= CLIP {
            for (rank, &i) in order.iter().enumerate() {
                hist[i] = if rank < k { CLIP } else { hist[i] * lambda };
            }
            return;
        }
        tail -= hist[order[k]] * hist[order[k]];
    }
    // Too few active components: one clip/renormalize pass.
    hist.iter_mut().for_each(|v| *v = v.min(CLIP));
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    hist.iter_mut().for_each(|v| *v /= norm);
}
