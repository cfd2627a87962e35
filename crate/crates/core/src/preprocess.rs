//! Scan cleanup ahead of segmentation: median denoising, histogram
//! equalization with high-boost sharpening, Otsu binarization, and size/skew
//! normalization.

use crate::error::{Error, Result};
use crate::raster::{crop, BinaryImage, GrayImage};

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Side of the square median window; must be odd.
    pub median_window: usize,
    /// High-boost factor; 1.0 disables sharpening.
    pub high_boost: f64,
    pub normalized_width: usize,
    pub normalized_height: usize,
    /// Deskew sweep covers `-deskew_range..=deskew_range` degrees.
    pub deskew_range: f64,
    pub deskew_step: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            median_window: 3,
            high_boost: 1.5,
            normalized_width: 32,
            normalized_height: 32,
            deskew_range: 10.0,
            deskew_step: 0.5,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.median_window == 0 || self.median_window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "median window {} must be odd and positive",
                self.median_window
            )));
        }
        if !(self.high_boost >= 1.0) {
            return Err(Error::Config(format!(
                "high-boost factor {} must be >= 1",
                self.high_boost
            )));
        }
        if self.normalized_width < 8 || self.normalized_height < 8 {
            return Err(Error::Config(format!(
                "normalized size {}x{} must be at least 8x8",
                self.normalized_width, self.normalized_height
            )));
        }
        if !(self.deskew_step > 0.0) || !(self.deskew_range >= 0.0) {
            return Err(Error::Config(
                "deskew step must be > 0 and range >= 0".into(),
            ));
        }
        Ok(())
    }

    /// Same sizing, no skew sweep. Used for isolated glyphs, whose slant is
    /// a feature rather than a scanning defect.
    pub fn without_deskew(&self) -> Self {
        Self {
            deskew_range: 0.0,
            ..self.clone()
        }
    }

    pub fn input_len(&self) -> usize {
        self.normalized_width * self.normalized_height
    }
}

/// Median filter over a `window`×`window` neighborhood with replicated edges.
pub fn denoise(img: &GrayImage, window: usize) -> Result<GrayImage> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!("median window {window} must be odd")));
    }
    let r = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window * window);
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        buf.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                buf.push(img.get_clamped(x as isize + dx, y as isize + dy));
            }
        }
        let mid = buf.len() / 2;
        *buf.select_nth_unstable(mid).1
    })
}

/// Global histogram equalization. A single-level image maps to itself.
pub fn equalize(img: &GrayImage) -> GrayImage {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let mut cdf = [0u64; 256];
    let mut acc = 0;
    for (c, h) in cdf.iter_mut().zip(hist) {
        acc += h;
        *c = acc;
    }
    let total = acc;
    let cdf_min = cdf[img.pixels().iter().copied().min().unwrap_or(0) as usize];
    let denom = total - cdf_min;
    if denom == 0 {
        return img.clone();
    }
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| {
            let num = c.saturating_sub(cdf_min) * 255;
            ((2 * num + denom) / (2 * denom)) as u8
        })
        .collect();
    let pixels = img.pixels().iter().map(|&p| lut[p as usize]).collect();
    GrayImage::new(img.width(), img.height(), pixels).expect("same dimensions")
}

/// Sum of the 3×3 neighborhood with replicated edges.
fn box3_sum(img: &GrayImage, x: usize, y: usize) -> u32 {
    let mut s = 0u32;
    for dy in -1..=1isize {
        for dx in -1..=1isize {
            s += img.get_clamped(x as isize + dx, y as isize + dy) as u32;
        }
    }
    s
}

/// High-boost sharpening: `boost·x − (boost−1)·lowpass(x)`, where the low
/// pass is a 3×3 box mean. `boost = 1` is the identity.
pub fn high_boost(img: &GrayImage, boost: f64) -> GrayImage {
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let lowpass = box3_sum(img, x, y) as f64 / 9.0;
        let v = boost * img.get(x, y) as f64 - (boost - 1.0) * lowpass;
        v.round().clamp(0.0, 255.0) as u8
    })
    .expect("same dimensions")
}

/// Equalization followed by high-boost sharpening.
pub fn enhance(img: &GrayImage, boost: f64) -> GrayImage {
    high_boost(&equalize(img), boost)
}

/// Otsu's threshold: the `t` in 1..=255 maximizing between-class variance
/// for the split `{v < t}` / `{v >= t}`; the lowest such `t` wins ties.
/// Returns `None` when every split is degenerate (a single gray level).
pub fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let total: u64 = img.pixels().len() as u64;
    let sum_all: u64 = hist.iter().enumerate().map(|(v, &h)| v as u64 * h).sum();

    // Between-class variance is proportional to (S0·N − S·w0)² / (w0·w1);
    // compared as exact rationals.
    let mut best: Option<(u8, u128, u128)> = None;
    let mut w0 = 0u64;
    let mut s0 = 0u64;
    for t in 1..=255usize {
        w0 += hist[t - 1];
        s0 += (t as u64 - 1) * hist[t - 1];
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let diff = (s0 as i128 * total as i128 - sum_all as i128 * w0 as i128).unsigned_abs();
        let num = diff * diff;
        let den = w0 as u128 * w1 as u128;
        let better = match best {
            None => num > 0,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

/// Global Otsu binarization; dark pixels (below the threshold) become ink.
pub fn binarize(img: &GrayImage) -> BinaryImage {
    let pixels = match otsu_threshold(img) {
        Some(t) => img.pixels().iter().map(|&p| (p < t) as u8).collect(),
        None => vec![0; img.pixels().len()],
    };
    BinaryImage::new(img.width(), img.height(), pixels).expect("same dimensions")
}

/// Rotates ink counter-clockwise (as displayed) by `degrees` about the image
/// center, onto a canvas enlarged to hold the whole rotated frame.
/// Nearest-neighbor inverse mapping.
pub fn rotate(img: &BinaryImage, degrees: f64) -> BinaryImage {
    if degrees == 0.0 {
        return img.clone();
    }
    let (sin, cos) = degrees.to_radians().sin_cos();
    let (w, h) = (img.width() as f64, img.height() as f64);
    let out_w = (w * cos.abs() + h * sin.abs()).ceil().max(1.0) as usize;
    let out_h = (w * sin.abs() + h * cos.abs()).ceil().max(1.0) as usize;
    let (cx, cy) = (w / 2.0, h / 2.0);
    let (ocx, ocy) = (out_w as f64 / 2.0, out_h as f64 / 2.0);
    BinaryImage::from_fn(out_w, out_h, |x, y| {
        let dx = x as f64 + 0.5 - ocx;
        let dy = y as f64 + 0.5 - ocy;
        let sx = cx + dx * cos - dy * sin;
        let sy = cy + dx * sin + dy * cos;
        if sx < 0.0 || sy < 0.0 || sx >= w || sy >= h {
            false
        } else {
            img.get(sx as usize, sy as usize)
        }
    })
    .expect("nonzero canvas")
}

/// Correction angle (degrees) that, passed to [`rotate`], best levels the
/// ink: the angle in the sweep maximizing the spread of the row projection
/// of the rotated ink. Ties go to the angle closest to zero.
pub fn estimate_skew(img: &BinaryImage, range: f64, step: f64) -> f64 {
    let steps = (range / step + 1e-9).floor() as i64;
    if steps <= 0 {
        return 0.0;
    }
    let (cx, cy) = (img.width() as f64 / 2.0, img.height() as f64 / 2.0);
    let ink: Vec<(f64, f64)> = (0..img.height())
        .flat_map(|y| (0..img.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| img.get(x, y))
        .map(|(x, y)| (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy))
        .collect();
    let half_diag = (cx * cx + cy * cy).sqrt().ceil() as i64 + 1;
    let mut bins = vec![0u64; (2 * half_diag + 1) as usize];

    let mut order: Vec<i64> = (-steps..=steps).collect();
    order.sort_by_key(|k| (k.abs(), *k));
    let mut best = (0.0, 0u64);
    for (i, k) in order.into_iter().enumerate() {
        let angle = k as f64 * step;
        let (sin, cos) = angle.to_radians().sin_cos();
        bins.iter_mut().for_each(|b| *b = 0);
        for &(dx, dy) in &ink {
            let ry = -dx * sin + dy * cos;
            let bin = (ry.floor() as i64 + half_diag).clamp(0, 2 * half_diag);
            bins[bin as usize] += 1;
        }
        // Total ink and bin count are fixed, so the sum of squares orders
        // angles exactly as the projection variance does.
        let score: u64 = bins.iter().map(|b| b * b).sum();
        if i == 0 || score > best.1 {
            best = (angle, score);
        }
    }
    best.0
}

/// Nearest-neighbor resampling to `width`×`height`.
pub fn rescale_nearest(img: &BinaryImage, width: usize, height: usize) -> BinaryImage {
    let (sw, sh) = (img.width(), img.height());
    BinaryImage::from_fn(width, height, |x, y| {
        let sx = (2 * x + 1) * sw / (2 * width);
        let sy = (2 * y + 1) * sh / (2 * height);
        img.get(sx, sy)
    })
    .expect("nonzero target size")
}

/// Deskews, tight-crops to the ink bounding box, and rescales to the
/// configured size.
pub fn normalize(img: &BinaryImage, cfg: &PreprocessConfig) -> Result<BinaryImage> {
    if img.is_blank() {
        return Err(Error::EmptyInput("normalize needs at least one ink pixel"));
    }
    let angle = if cfg.deskew_range > 0.0 {
        estimate_skew(img, cfg.deskew_range, cfg.deskew_step)
    } else {
        0.0
    };
    let rotated = rotate(img, angle);
    let src = if rotated.is_blank() { img } else { &rotated };
    let bounds = src.ink_bounds().expect("nonblank");
    let tight = crop(src, &bounds)?;
    Ok(rescale_nearest(
        &tight,
        cfg.normalized_width,
        cfg.normalized_height,
    ))
}
