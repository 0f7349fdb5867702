use super::{to_u8, GrayImage, Point2, Similarity2, Vec2};

/// Resamples `img` onto a `width × height` canvas where each destination
/// pixel `q` reads the source at `dest_to_src(q)`.
pub fn warp(img: &GrayImage, width: usize, height: usize, dest_to_src: &Similarity2) -> GrayImage {
    let (s, c) = dest_to_src.rotation.sin_cos();
    let k = dest_to_src.scale;
    let (a, b) = (k * c, k * s);
    let t = dest_to_src.translation;
    GrayImage::from_fn(width, height, |x, y| {
        let (qx, qy) = (x as f64, y as f64);
        let sx = a * qx - b * qy + t.x;
        let sy = b * qx + a * qy + t.y;
        to_u8(img.sample(sx, sy))
    })
}

/// Rotates image content by `theta` about `center`, keeping the canvas size.
///
/// A destination pixel at `q` reads the source at `R(-theta)(q - center) + center`.
pub fn rotate_image(img: &GrayImage, theta: f64, center: Point2) -> GrayImage {
    if theta == 0.0 {
        return img.clone();
    }
    let dest_to_src = Similarity2::about(center, -theta, 1.0);
    warp(img, img.width(), img.height(), &dest_to_src)
}

pub fn flip_horizontal(img: &GrayImage) -> GrayImage {
    let w = img.width();
    let mut pixels = Vec::with_capacity(img.pixels().len());
    for row in img.pixels().chunks_exact(w) {
        pixels.extend(row.iter().rev());
    }
    GrayImage::new(w, img.height(), pixels).expect("dimensions unchanged")
}

/// Companion point map of [`flip_horizontal`] for an image of `width` columns.
pub fn flip_point(p: Point2, width: usize) -> Point2 {
    Point2::new((width - 1) as f64 - p.x, p.y)
}

/// Square crop whose first pixel sits at `top_left`, spanning `side` source
/// pixels, resampled to `out_side × out_side`.
pub fn crop_resize(img: &GrayImage, top_left: Point2, side: f64, out_side: usize) -> GrayImage {
    assert!(side >= 1.0 && out_side >= 1, "crop sizes must be positive");
    let k = side / out_side as f64;
    // q ↦ top_left + (q + 0.5)·k − 0.5
    let dest_to_src = Similarity2::new(
        0.0,
        k,
        Vec2::new(top_left.x + 0.5 * k - 0.5, top_left.y + 0.5 * k - 0.5),
    );
    warp(img, out_side, out_side, &dest_to_src)
}

/// Uniform rescale by `factor`. Returns the resampled image together with
/// the map from source to destination coordinates.
pub fn resize_uniform(img: &GrayImage, factor: f64) -> (GrayImage, Similarity2) {
    assert!(factor > 0.0, "resize factor must be positive");
    let width = ((img.width() as f64 * factor).round() as usize).max(1);
    let height = ((img.height() as f64 * factor).round() as usize).max(1);
    // p_dst = (p_src + 0.5)·factor − 0.5
    let src_to_dst = Similarity2::new(0.0, factor, Vec2::new(0.5 * factor - 0.5, 0.5 * factor - 0.5));
    let out = warp(img, width, height, &src_to_dst.inverse());
    (out, src_to_dst)
}
