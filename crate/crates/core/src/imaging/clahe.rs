use serde::{Deserialize, Serialize};

use super::{to_u8, GrayImage};

const BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaheParams {
    /// Tiles per axis.
    pub tiles: usize,
    /// Clip limit relative to the uniform bin height.
    pub clip: f64,
}

impl Default for ClaheParams {
    fn default() -> Self {
        ClaheParams { tiles: 8, clip: 2.0 }
    }
}

/// Contrast-limited adaptive histogram equalization.
///
/// Each tile's 256-bin histogram is clipped at `clip × pixels / 256`, the
/// excess is spread evenly over all bins, and the tile mapping sends a value
/// to the midpoint of its cumulative-mass step. Pixels blend the mappings of
/// the four nearest tile centers bilinearly.
pub fn clahe(img: &GrayImage, params: ClaheParams) -> GrayImage {
    assert!(params.tiles >= 1, "CLAHE needs at least one tile");
    assert!(params.clip >= 1.0, "CLAHE clip limit must be at least 1");
    let (w, h) = (img.width(), img.height());
    let tx = params.tiles.min(w);
    let ty = params.tiles.min(h);
    let x_edges: Vec<usize> = (0..=tx).map(|i| i * w / tx).collect();
    let y_edges: Vec<usize> = (0..=ty).map(|i| i * h / ty).collect();

    let mut luts = vec![[0.0f64; BINS]; tx * ty];
    for j in 0..ty {
        for i in 0..tx {
            let mut hist = [0.0f64; BINS];
            for y in y_edges[j]..y_edges[j + 1] {
                for x in x_edges[i]..x_edges[i + 1] {
                    hist[img.get(x, y) as usize] += 1.0;
                }
            }
            let n = ((x_edges[i + 1] - x_edges[i]) * (y_edges[j + 1] - y_edges[j])) as f64;
            luts[j * tx + i] = tile_mapping(&mut hist, n, params.clip);
        }
    }

    let centers =
        |edges: &[usize]| -> Vec<f64> { edges.windows(2).map(|e| 0.5 * (e[0] + e[1]) as f64 - 0.5).collect() };
    let cx = centers(&x_edges);
    let cy = centers(&y_edges);
    // Neighboring tile pair and blend weight along one axis.
    let locate = |c: &[f64], p: f64| -> (usize, usize, f64) {
        if p <= c[0] {
            return (0, 0, 0.0);
        }
        let last = c.len() - 1;
        if p >= c[last] {
            return (last, last, 0.0);
        }
        let k = c.partition_point(|&v| v <= p) - 1;
        (k, k + 1, (p - c[k]) / (c[k + 1] - c[k]))
    };
    let xs: Vec<_> = (0..w).map(|x| locate(&cx, x as f64)).collect();

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (j0, j1, wy) = locate(&cy, y as f64);
        for (x, &(i0, i1, wx)) in xs.iter().enumerate() {
            let v = img.get(x, y) as usize;
            let top = (1.0 - wx) * luts[j0 * tx + i0][v] + wx * luts[j0 * tx + i1][v];
            let bottom = (1.0 - wx) * luts[j1 * tx + i0][v] + wx * luts[j1 * tx + i1][v];
            out.push(to_u8((1.0 - wy) * top + wy * bottom));
        }
    }
    GrayImage::new(w, h, out).expect("dimensions unchanged")
}

fn tile_mapping(hist: &mut [f64; BINS], n: f64, clip: f64) -> [f64; BINS] {
    let limit = clip * n / BINS as f64;
    let mut excess = 0.0;
    for b in hist.iter_mut() {
        if *b > limit {
            excess += *b - limit;
            *b = limit;
        }
    }
    let share = excess / BINS as f64;
    let mut lut = [0.0; BINS];
    let mut cumulative = 0.0;
    for (v, b) in hist.iter().enumerate() {
        let mass = b + share;
        lut[v] = 255.0 * (cumulative + 0.5 * mass) / n;
        cumulative += mass;
    }
    lut
}
