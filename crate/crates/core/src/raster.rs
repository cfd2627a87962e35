//! Image types shared by every pipeline stage.
//!
//! Binary images use `1` for ink and `0` for background, whatever the
//! polarity of the scanned source. Boxes are half-open on the bottom and
//! right edges so adjacent boxes tile without overlap.

use crate::error::{Error, Result};

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the border (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Renders a binary image as black ink on white paper.
    pub fn from_binary(img: &BinaryImage) -> Self {
        let pixels = img
            .pixels
            .iter()
            .map(|&p| if p == 1 { 0 } else { 255 })
            .collect();
        Self {
            width: img.width,
            height: img.height,
            pixels,
        }
    }
}

/// Bilevel raster where `1` is ink and `0` is background.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        if let Some(pos) = pixels.iter().position(|&p| p > 1) {
            return Err(Error::Shape(format!(
                "binary pixel {pos} has value {}, expected 0 or 1",
                pixels[pos]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn blank(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y) as u8);
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x] == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ink: bool) {
        self.pixels[y * self.width + x] = ink as u8;
    }

    pub fn ink_count(&self) -> usize {
        self.pixels.iter().map(|&p| p as usize).sum()
    }

    /// Pixels as a network input vector, 1.0 for ink.
    pub fn features(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }

    pub fn is_blank(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0)
    }

    pub fn full_rect(&self) -> Rect {
        Rect {
            top: 0,
            left: 0,
            bottom: self.height,
            right: self.width,
        }
    }

    /// Tight bounding box of all ink, or `None` for a blank image.
    pub fn ink_bounds(&self) -> Option<Rect> {
        self.ink_bounds_within(&self.full_rect())
    }

    /// Tight bounding box of the ink inside `region`.
    pub fn ink_bounds_within(&self, region: &Rect) -> Option<Rect> {
        let mut top = usize::MAX;
        let mut left = usize::MAX;
        let mut bottom = 0;
        let mut right = 0;
        for y in region.top..region.bottom {
            let row = &self.pixels[y * self.width + region.left..y * self.width + region.right];
            for (x, &p) in (region.left..).zip(row) {
                if p == 1 {
                    top = top.min(y);
                    bottom = bottom.max(y + 1);
                    left = left.min(x);
                    right = right.max(x + 1);
                }
            }
        }
        (top != usize::MAX).then_some(Rect {
            top,
            left,
            bottom,
            right,
        })
    }

    /// ORs `src` into `self` with its top-left corner at (`x`, `y`); parts
    /// falling outside are clipped.
    pub fn stamp(&mut self, src: &BinaryImage, x: isize, y: isize) {
        for sy in 0..src.height {
            let ty = y + sy as isize;
            if ty < 0 || ty >= self.height as isize {
                continue;
            }
            for sx in 0..src.width {
                let tx = x + sx as isize;
                if tx < 0 || tx >= self.width as isize {
                    continue;
                }
                if src.get(sx, sy) {
                    self.set(tx as usize, ty as usize, true);
                }
            }
        }
    }

    /// Zeroes every pixel inside `rect` (clipped to the image).
    pub fn clear_rect(&mut self, rect: &Rect) {
        for y in rect.top..rect.bottom.min(self.height) {
            for x in rect.left..rect.right.min(self.width) {
                self.set(x, y, false);
            }
        }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!(
            "image dimensions {width}x{height} must be nonzero"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Shape(format!(
            "{len} pixels supplied for a {width}x{height} image"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// One sum per row.
    Row,
    /// One sum per column.
    Column,
}

/// Per-row or per-column ink counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub axis: Axis,
    pub sums: Vec<usize>,
}

impl Projection {
    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    pub fn total(&self) -> usize {
        self.sums.iter().sum()
    }

    /// Maximal runs of nonzero entries as half-open index ranges.
    pub fn nonzero_runs(&self) -> Vec<(usize, usize)> {
        runs_where(&self.sums, |s| s > 0)
    }

    /// Maximal runs of zero entries as half-open index ranges.
    pub fn zero_runs(&self) -> Vec<(usize, usize)> {
        runs_where(&self.sums, |s| s == 0)
    }
}

fn runs_where(sums: &[usize], pred: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &s) in sums.iter().enumerate() {
        match (pred(s), start) {
            (true, None) => start = Some(i),
            (false, Some(s0)) => {
                runs.push((s0, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s0) = start {
        runs.push((s0, sums.len()));
    }
    runs
}

/// Axis-aligned box: inclusive `top`/`left`, exclusive `bottom`/`right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl Rect {
    pub fn new(top: usize, left: usize, bottom: usize, right: usize) -> Self {
        debug_assert!(top < bottom && left < right, "degenerate rect");
        Self {
            top,
            left,
            bottom,
            right,
        }
    }

    pub fn width(&self) -> usize {
        self.right - self.left
    }

    pub fn height(&self) -> usize {
        self.bottom - self.top
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let top = self.top.max(other.top);
        let left = self.left.max(other.left);
        let bottom = self.bottom.min(other.bottom);
        let right = self.right.min(other.right);
        (top < bottom && left < right).then_some(Rect {
            top,
            left,
            bottom,
            right,
        })
    }

    pub fn intersection_area(&self, other: &Rect) -> usize {
        self.intersection(other).map_or(0, |r| r.area())
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }

    pub fn contains(&self, other: &Rect) -> bool {
        self.top <= other.top
            && self.left <= other.left
            && self.bottom >= other.bottom
            && self.right >= other.right
    }

    /// Shifts a box expressed in a sub-image's coordinates into the parent's.
    pub fn offset(&self, dy: usize, dx: usize) -> Rect {
        Rect {
            top: self.top + dy,
            left: self.left + dx,
            bottom: self.bottom + dy,
            right: self.right + dx,
        }
    }
}

pub fn project(img: &BinaryImage, axis: Axis) -> Projection {
    let sums = match axis {
        Axis::Row => img
            .pixels
            .chunks_exact(img.width)
            .map(|row| row.iter().map(|&p| p as usize).sum())
            .collect(),
        Axis::Column => {
            let mut sums = vec![0usize; img.width];
            for row in img.pixels.chunks_exact(img.width) {
                for (s, &p) in sums.iter_mut().zip(row) {
                    *s += p as usize;
                }
            }
            sums
        }
    };
    Projection { axis, sums }
}

pub fn invert(img: &BinaryImage) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().map(|&p| 1 - p).collect(),
    }
}

pub fn crop(img: &BinaryImage, rect: &Rect) -> Result<BinaryImage> {
    if rect.top >= rect.bottom
        || rect.left >= rect.right
        || rect.bottom > img.height
        || rect.right > img.width
    {
        return Err(Error::Bounds {
            top: rect.top,
            left: rect.left,
            bottom: rect.bottom,
            right: rect.right,
            width: img.width,
            height: img.height,
        });
    }
    let mut pixels = Vec::with_capacity(rect.area());
    for y in rect.top..rect.bottom {
        let start = y * img.width;
        pixels.extend_from_slice(&img.pixels[start + rect.left..start + rect.right]);
    }
    Ok(BinaryImage {
        width: rect.width(),
        height: rect.height(),
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> BinaryImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BinaryImage::from_fn(w, h, |_, _| rng.gen_bool(0.4)).unwrap()
    }

    #[test]
    fn blank_rows_project_to_zero() {
        let img = BinaryImage::blank(4, 4).unwrap();
        assert_eq!(project(&img, Axis::Row).sums, vec![0, 0, 0, 0]);
    }

    #[test]
    fn middle_row_ink() {
        let img = BinaryImage::from_fn(3, 3, |_, y| y == 1).unwrap();
        assert_eq!(project(&img, Axis::Row).sums, vec![0, 3, 0]);
    }

    #[test]
    fn column_projection_matches_pixel_count() {
        let img = random_image(8, 8, 7);
        let proj = project(&img, Axis::Column);
        for x in 0..8 {
            let mut count = 0;
            for y in 0..8 {
                if img.pixels()[y * 8 + x] == 1 {
                    count += 1;
                }
            }
            assert_eq!(proj.sums[x], count);
        }
    }

    #[test]
    fn invert_all_ink() {
        let img = BinaryImage::from_fn(3, 2, |_, _| true).unwrap();
        assert!(invert(&img).is_blank());
    }

    #[test]
    fn invert_elementwise() {
        let img = random_image(5, 5, 3);
        let inv = invert(&img);
        for (a, b) in img.pixels().iter().zip(inv.pixels()) {
            assert_eq!(*b, 1 - *a);
        }
        assert_eq!(invert(&inv), img);
    }

    #[test]
    fn crop_identity_and_single_pixel() {
        let img = random_image(6, 4, 11);
        assert_eq!(crop(&img, &img.full_rect()).unwrap(), img);
        let one = crop(&img, &Rect::new(2, 3, 3, 4)).unwrap();
        assert_eq!(one.width(), 1);
        assert_eq!(one.get(0, 0), img.get(3, 2));
    }

    #[test]
    fn crop_matches_direct_indexing() {
        let img = random_image(9, 7, 5);
        let rect = Rect::new(1, 2, 6, 8);
        let c = crop(&img, &rect).unwrap();
        for y in 0..rect.height() {
            for x in 0..rect.width() {
                assert_eq!(
                    c.pixels()[y * rect.width() + x],
                    img.pixels()[(y + 1) * 9 + x + 2]
                );
            }
        }
    }

    #[test]
    fn crop_out_of_bounds() {
        let img = BinaryImage::blank(4, 4).unwrap();
        assert!(matches!(
            crop(&img, &Rect::new(0, 0, 5, 2)),
            Err(Error::Bounds { .. })
        ));
    }

    #[test]
    fn construction_rejects_bad_data() {
        assert!(BinaryImage::new(2, 2, vec![0, 1, 2, 0]).is_err());
        assert!(BinaryImage::new(2, 2, vec![0, 1, 0]).is_err());
        assert!(GrayImage::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn iou_of_half_overlap() {
        let a = Rect::new(0, 0, 10, 10);
        let b = Rect::new(0, 5, 10, 15);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_invariants(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            let img = random_image(w, h, seed);
            let inv = invert(&img);
            let rows = project(&img, Axis::Row);
            let cols = project(&img, Axis::Column);
            let inv_rows = project(&inv, Axis::Row);
            let inv_cols = project(&inv, Axis::Column);
            for i in 0..h {
                prop_assert_eq!(rows.sums[i] + inv_rows.sums[i], w);
            }
            for i in 0..w {
                prop_assert_eq!(cols.sums[i] + inv_cols.sums[i], h);
            }
            prop_assert_eq!(rows.total(), img.ink_count());
            prop_assert_eq!(cols.total(), img.ink_count());
        }

        #[test]
        fn crop_then_project_is_slice(seed in any::<u64>(), t in 0usize..5, l in 0usize..5, hh in 1usize..5, ww in 1usize..5) {
            let img = random_image(10, 10, seed);
            let rect = Rect::new(t, l, t + hh, l + ww);
            let c = crop(&img, &rect).unwrap();
            let full = project(&crop(&img, &Rect::new(0, l, 10, l + ww)).unwrap(), Axis::Row);
            prop_assert_eq!(&project(&c, Axis::Row).sums[..], &full.sums[t..t + hh]);
        }
    }
}
