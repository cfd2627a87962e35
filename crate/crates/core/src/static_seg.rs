//! Projection-based dissection: pages into line bands, line bands into
//! character boxes and word spaces.
//!
//! A separation boundary is the pair of endpoints of a maximal run of
//! zero-projection positions at least `min_gap` long. Shorter zero runs are
//! absorbed into the surrounding ink run.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{crop, project, Axis, BinaryImage, Projection, Rect};

/// A row whose projection exceeds this fraction of the line width is a
/// headline candidate.
pub const HEADLINE_WIDTH_FRACTION: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct StaticSegConfig {
    pub min_gap: usize,
    /// Bands taller than this multiple of the mean band height are searched
    /// for a lower-zone modifier valley.
    pub modifier_factor: f64,
    /// Detect word spaces on a dilated copy of the line.
    pub dilate_for_word_spacing: bool,
    pub remove_headline: bool,
}

impl Default for StaticSegConfig {
    fn default() -> Self {
        Self {
            min_gap: 1,
            modifier_factor: 1.5,
            dilate_for_word_spacing: false,
            remove_headline: true,
        }
    }
}

impl StaticSegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_gap == 0 {
            return Err(Error::Config("min_gap must be >= 1".into()));
        }
        if !(self.modifier_factor > 0.0) {
            return Err(Error::Config("modifier_factor must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Headline {
    /// First headline row, relative to the line image.
    pub row: usize,
    pub thickness: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineBand {
    /// Page coordinates; rows span the band, columns are tight to its ink.
    pub rect: Rect,
    pub headline: Option<Headline>,
    /// End of the upper zone, relative to the band top.
    pub upper_end: usize,
    /// End of the middle zone, relative to the band top.
    pub middle_end: usize,
}

impl LineBand {
    pub fn headline_row(&self) -> Option<usize> {
        self.headline.map(|h| h.row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpaceMarker {
    pub line: usize,
    /// Page columns of the gap, half-open.
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dissection {
    pub lines: Vec<LineBand>,
    /// Page-coordinate boxes, left to right, one list per line.
    pub characters: Vec<Vec<Rect>>,
    pub spaces: Vec<SpaceMarker>,
    /// Lower-zone modifier box per line, when one was split off.
    pub modifiers: Vec<Option<Rect>>,
}

/// Ink runs of a projection with zero runs shorter than `min_gap` bridged.
fn separated_runs(proj: &Projection, min_gap: usize) -> Vec<(usize, usize)> {
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (start, end) in proj.nonzero_runs() {
        match merged.last_mut() {
            Some(last) if start - last.1 < min_gap => last.1 = end,
            _ => merged.push((start, end)),
        }
    }
    merged
}

/// Splits a page into line bands ordered top to bottom.
pub fn dissect_rows(page: &BinaryImage, cfg: &StaticSegConfig) -> Vec<LineBand> {
    let proj = project(page, Axis::Row);
    separated_runs(&proj, cfg.min_gap.max(1))
        .into_iter()
        .map(|(top, bottom)| {
            let region = Rect::new(top, 0, bottom, page.width());
            let ink = page.ink_bounds_within(&region).expect("run has ink");
            let rect = Rect::new(top, ink.left, bottom, ink.right);
            LineBand {
                rect,
                headline: None,
                upper_end: 0,
                middle_end: rect.height(),
            }
        })
        .collect()
}

fn lower_median(values: &mut [usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    Some(values[(values.len() - 1) / 2])
}

/// Splits a line image into character boxes and word spaces, both in the
/// line's coordinates. Boxes are tight to the ink of their column run.
///
/// Word spaces are inter-character gaps at least twice the line's median gap.
pub fn dissect_columns(
    line: &BinaryImage,
    cfg: &StaticSegConfig,
) -> (Vec<Rect>, Vec<(usize, usize)>) {
    let proj = project(line, Axis::Column);
    let runs = separated_runs(&proj, cfg.min_gap.max(1));
    let boxes: Vec<Rect> = runs
        .iter()
        .map(|&(l, r)| {
            let region = Rect::new(0, l, line.height(), r);
            line.ink_bounds_within(&region).expect("run has ink")
        })
        .collect();

    let gaps: Vec<(usize, usize)> = runs.windows(2).map(|w| (w[0].1, w[1].0)).collect();
    let mut widths: Vec<usize> = gaps.iter().map(|(l, r)| r - l).collect();
    let spaces = match lower_median(&mut widths) {
        None => Vec::new(),
        Some(median) if cfg.dilate_for_word_spacing => {
            let radius = median.max(1);
            let dilated = dilate(line, radius).expect("radius >= 1");
            let dproj = project(&dilated, Axis::Column);
            let first = runs[0].0;
            let last = runs[runs.len() - 1].1;
            dproj
                .zero_runs()
                .into_iter()
                .filter(|&(l, r)| l >= first && r <= last)
                .map(|(l, r)| (l.saturating_sub(radius), (r + radius).min(line.width())))
                .collect()
        }
        Some(median) => {
            let threshold = 2 * median;
            gaps.into_iter()
                .filter(|(l, r)| r - l >= threshold)
                .collect()
        }
    };
    (boxes, spaces)
}

/// Zeroes a dominant row band in the upper third of the line. The band is
/// the run of rows around the projection maximum whose sums exceed
/// [`HEADLINE_WIDTH_FRACTION`] of the width.
pub fn remove_headline(line: &BinaryImage) -> (BinaryImage, Option<Headline>) {
    let proj = project(line, Axis::Row);
    let limit = HEADLINE_WIDTH_FRACTION * line.width() as f64;
    let (peak_row, peak) =
        proj.sums.iter().enumerate().fold(
            (0, 0),
            |best, (i, &s)| if s > best.1 { (i, s) } else { best },
        );
    if peak as f64 <= limit || 3 * peak_row >= line.height() {
        return (line.clone(), None);
    }
    let strong = |r: usize| proj.sums[r] as f64 > limit;
    let mut top = peak_row;
    while top > 0 && strong(top - 1) {
        top -= 1;
    }
    let mut bottom = peak_row + 1;
    while bottom < line.height() && strong(bottom) {
        bottom += 1;
    }
    let mut stripped = line.clone();
    stripped.clear_rect(&Rect::new(top, 0, bottom, line.width()));
    (
        stripped,
        Some(Headline {
            row: top,
            thickness: bottom - top,
        }),
    )
}

/// Deepest interior nonzero valley of a profile: a position strictly below
/// some earlier and some later value. Equal depths resolve to the lower row.
pub fn deepest_valley(sums: &[usize]) -> Option<usize> {
    let n = sums.len();
    if n < 3 {
        return None;
    }
    let mut max_before = vec![0usize; n];
    for i in 1..n {
        max_before[i] = max_before[i - 1].max(sums[i - 1]);
    }
    let mut max_after = vec![0usize; n];
    for i in (0..n - 1).rev() {
        max_after[i] = max_after[i + 1].max(sums[i + 1]);
    }
    let mut best: Option<usize> = None;
    for r in 1..n - 1 {
        let v = sums[r];
        if v > 0 && v < max_before[r] && v < max_after[r] && best.is_none_or(|b| v <= sums[b]) {
            best = Some(r);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModifierSplit {
    pub core: Rect,
    pub lower_modifier: Option<Rect>,
}

/// Splits lower-zone modifiers off bands that are unusually tall relative
/// to the mean band height.
pub fn separate_modifiers(
    lines: &[LineBand],
    page: &BinaryImage,
    cfg: &StaticSegConfig,
) -> Result<Vec<ModifierSplit>> {
    if lines.is_empty() {
        return Err(Error::EmptyInput(
            "separate_modifiers needs at least one line band",
        ));
    }
    let mean_height =
        lines.iter().map(|l| l.rect.height() as f64).sum::<f64>() / lines.len() as f64;
    let limit = cfg.modifier_factor * mean_height;
    lines
        .iter()
        .map(|band| {
            let unsplit = ModifierSplit {
                core: band.rect,
                lower_modifier: None,
            };
            if band.rect.height() as f64 <= limit {
                return Ok(unsplit);
            }
            let img = crop(page, &band.rect)?;
            let proj = project(&img, Axis::Row);
            Ok(match deepest_valley(&proj.sums) {
                Some(row) => {
                    let r = band.rect;
                    ModifierSplit {
                        core: Rect::new(r.top, r.left, r.top + row, r.right),
                        lower_modifier: Some(Rect::new(r.top + row, r.left, r.bottom, r.right)),
                    }
                }
                None => unsplit,
            })
        })
        .collect()
}

/// Upper/middle zone boundaries relative to the band top.
///
/// `line` is the band's image (before headline removal); `modifier_row` is
/// the core/modifier split row relative to the band, if one was found.
pub fn estimate_zones(
    band: &LineBand,
    line: &BinaryImage,
    modifier_row: Option<usize>,
) -> (usize, usize) {
    let height = line.height();
    let upper_end = match band.headline {
        Some(h) => (h.row + h.thickness).min(height),
        None => {
            let proj = project(line, Axis::Row);
            let max = proj.sums.iter().copied().max().unwrap_or(0);
            proj.sums.iter().position(|&s| 2 * s >= max).unwrap_or(0)
        }
    };
    let middle_end = modifier_row.unwrap_or(height).clamp(upper_end, height);
    (upper_end, middle_end)
}

/// Binary dilation with a `(2r+1)`-square structuring element.
pub fn dilate(img: &BinaryImage, radius: usize) -> Result<BinaryImage> {
    if radius == 0 {
        return Err(Error::Config("dilation radius must be >= 1".into()));
    }
    let (w, h) = (img.width(), img.height());
    // Separable: running max along rows, then along columns.
    let mut horiz = vec![0u8; w * h];
    for y in 0..h {
        let row = &img.pixels()[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius + 1).min(w);
            horiz[y * w + x] = row[lo..hi].iter().copied().max().unwrap_or(0);
        }
    }
    let mut out = vec![0u8; w * h];
    for x in 0..w {
        for y in 0..h {
            let lo = y.saturating_sub(radius);
            let hi = (y + radius + 1).min(h);
            out[y * w + x] = (lo..hi).map(|yy| horiz[yy * w + x]).max().unwrap_or(0);
        }
    }
    BinaryImage::new(w, h, out)
}

/// Full static pipeline over a page: line bands, optional headline removal,
/// lower-modifier separation, zone estimation, then column dissection of
/// each band's core.
pub fn dissect(page: &BinaryImage, cfg: &StaticSegConfig) -> Result<Dissection> {
    cfg.validate()?;
    let mut lines = dissect_rows(page, cfg);
    if lines.is_empty() {
        return Ok(Dissection {
            lines,
            characters: Vec::new(),
            spaces: Vec::new(),
            modifiers: Vec::new(),
        });
    }
    let splits = separate_modifiers(&lines, page, cfg)?;
    let mut characters = Vec::with_capacity(lines.len());
    let mut spaces = Vec::new();
    let mut modifiers = Vec::with_capacity(lines.len());
    for (index, (band, split)) in lines.iter_mut().zip(&splits).enumerate() {
        let band_img = crop(page, &band.rect)?;
        let (stripped, headline) = if cfg.remove_headline {
            remove_headline(&band_img)
        } else {
            (band_img.clone(), None)
        };
        band.headline = headline;
        let modifier_row = split.lower_modifier.map(|m| m.top - band.rect.top);
        let (upper_end, middle_end) = estimate_zones(band, &band_img, modifier_row);
        band.upper_end = upper_end;
        band.middle_end = middle_end;
        modifiers.push(split.lower_modifier);

        let core_rows = modifier_row.unwrap_or(band.rect.height());
        let core = crop(&stripped, &Rect::new(0, 0, core_rows, stripped.width()))?;
        if core.is_blank() {
            characters.push(Vec::new());
            continue;
        }
        let (boxes, gaps) = dissect_columns(&core, cfg);
        characters.push(
            boxes
                .into_iter()
                .map(|b| b.offset(band.rect.top, band.rect.left))
                .collect(),
        );
        spaces.extend(gaps.into_iter().map(|(l, r)| SpaceMarker {
            line: index,
            left: l + band.rect.left,
            right: r + band.rect.left,
        }));
    }
    Ok(Dissection {
        lines,
        characters,
        spaces,
        modifiers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64, p: f64) -> BinaryImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BinaryImage::from_fn(w, h, |_, _| rng.gen_bool(p)).unwrap()
    }

    /// Image with ink in the given column intervals over all rows.
    fn column_blocks(width: usize, height: usize, blocks: &[(usize, usize)]) -> BinaryImage {
        BinaryImage::from_fn(width, height, |x, _| {
            blocks.iter().any(|&(l, r)| (l..r).contains(&x))
        })
        .unwrap()
    }

    #[test]
    fn rows_split_at_zero_gap() {
        let page = BinaryImage::from_fn(6, 12, |x, y| {
            x > 0 && ((2..5).contains(&y) || (8..11).contains(&y))
        })
        .unwrap();
        let bands = dissect_rows(&page, &StaticSegConfig::default());
        let rows: Vec<_> = bands.iter().map(|b| (b.rect.top, b.rect.bottom)).collect();
        assert_eq!(rows, vec![(2, 5), (8, 11)]);
        assert_eq!(bands[0].rect.left, 1);
    }

    #[test]
    fn blank_page_has_no_bands() {
        let page = BinaryImage::blank(10, 10).unwrap();
        assert!(dissect_rows(&page, &StaticSegConfig::default()).is_empty());
        let d = dissect(&page, &StaticSegConfig::default()).unwrap();
        assert!(d.lines.is_empty() && d.characters.is_empty());
    }

    #[test]
    fn min_gap_bridges_short_runs() {
        let page = BinaryImage::from_fn(4, 10, |_, y| y == 2 || y == 4 || y == 8).unwrap();
        let cfg = StaticSegConfig {
            min_gap: 2,
            ..Default::default()
        };
        let rows: Vec<_> = dissect_rows(&page, &cfg)
            .iter()
            .map(|b| (b.rect.top, b.rect.bottom))
            .collect();
        assert_eq!(rows, vec![(2, 5), (8, 9)]);
    }

    #[test]
    fn one_blank_column_separates_without_space() {
        let line = column_blocks(7, 4, &[(0, 3), (4, 7)]);
        let (boxes, spaces) = dissect_columns(&line, &StaticSegConfig::default());
        assert_eq!(boxes, vec![Rect::new(0, 0, 4, 3), Rect::new(0, 4, 4, 7)]);
        assert!(spaces.is_empty());
    }

    #[test]
    fn wide_gap_becomes_word_space() {
        // Character gaps of 2, one word gap of 6: median 2, threshold 4.
        let line = column_blocks(30, 5, &[(0, 3), (5, 8), (10, 13), (19, 22), (24, 27)]);
        let (boxes, spaces) = dissect_columns(&line, &StaticSegConfig::default());
        assert_eq!(boxes.len(), 5);
        assert_eq!(spaces, vec![(13, 19)]);
    }

    #[test]
    fn dilation_word_spaces_agree_on_clear_layout() {
        let line = column_blocks(30, 5, &[(0, 3), (5, 8), (10, 13), (19, 22), (24, 27)]);
        let cfg = StaticSegConfig {
            dilate_for_word_spacing: true,
            ..Default::default()
        };
        let (boxes, spaces) = dissect_columns(&line, &cfg);
        assert_eq!(boxes.len(), 5);
        assert_eq!(spaces, vec![(13, 19)]);
    }

    #[test]
    fn touching_blocks_merge() {
        let line = column_blocks(10, 3, &[(1, 5), (5, 9)]);
        let (boxes, _) = dissect_columns(&line, &StaticSegConfig::default());
        assert_eq!(boxes, vec![Rect::new(0, 1, 3, 9)]);
    }

    #[test]
    fn boxes_are_tight_vertically() {
        let line = BinaryImage::from_fn(8, 10, |x, y| {
            (x < 3 && (2..6).contains(&y)) || (x > 4 && (1..9).contains(&y))
        })
        .unwrap();
        let (boxes, _) = dissect_columns(&line, &StaticSegConfig::default());
        assert_eq!(boxes, vec![Rect::new(2, 0, 6, 3), Rect::new(1, 5, 9, 8)]);
    }

    fn headline_line() -> BinaryImage {
        // 12 rows, bar on rows 1..3, three stems hanging below it.
        BinaryImage::from_fn(20, 12, |x, y| {
            (1..3).contains(&y) || ((3..10).contains(&y) && x % 7 < 2)
        })
        .unwrap()
    }

    #[test]
    fn headline_is_removed() {
        let line = headline_line();
        let (stripped, head) = remove_headline(&line);
        assert_eq!(
            head,
            Some(Headline {
                row: 1,
                thickness: 2
            })
        );
        assert_eq!(project(&stripped, Axis::Row).sums[1..3], [0, 0]);
        assert!(stripped.ink_count() < line.ink_count());
        let (boxes, _) = dissect_columns(&stripped, &StaticSegConfig::default());
        assert_eq!(boxes.len(), 3);
    }

    #[test]
    fn no_headline_when_not_dominant() {
        let line = column_blocks(10, 9, &[(0, 3), (5, 8)]);
        assert_eq!(remove_headline(&line), (line.clone(), None));
        let blank = BinaryImage::blank(5, 5).unwrap();
        assert_eq!(remove_headline(&blank), (blank.clone(), None));
        // Dominant row in the lower part is not a headline.
        let low = BinaryImage::from_fn(10, 9, |_, y| y == 7).unwrap();
        assert_eq!(remove_headline(&low).1, None);
    }

    fn band(top: usize, bottom: usize, width: usize) -> LineBand {
        LineBand {
            rect: Rect::new(top, 0, bottom, width),
            headline: None,
            upper_end: 0,
            middle_end: bottom - top,
        }
    }

    #[test]
    fn equal_bands_are_not_split() {
        let page = BinaryImage::from_fn(10, 40, |_, y| y % 10 < 8).unwrap();
        let bands: Vec<_> = (0..4).map(|i| band(i * 10, i * 10 + 8, 10)).collect();
        let splits = separate_modifiers(&bands, &page, &StaticSegConfig::default()).unwrap();
        assert!(splits.iter().all(|s| s.lower_modifier.is_none()));
    }

    #[test]
    fn tall_band_splits_at_valley() {
        // Three 10-row bands and one 20-row band: mean 12.5, limit 18.75.
        // The tall band is a 10-row body, a 2-row stem, an 8-row blob.
        let mut page = BinaryImage::blank(12, 80).unwrap();
        for i in 0..3 {
            for y in i * 15..i * 15 + 10 {
                for x in 0..12 {
                    page.set(x, y, true);
                }
            }
        }
        for y in 50..70 {
            for x in 0..12 {
                let ink = match y - 50 {
                    0..=9 => true,
                    10..=11 => x == 5,
                    _ => (3..9).contains(&x),
                };
                page.set(x, y, ink);
            }
        }
        let bands = dissect_rows(&page, &StaticSegConfig::default());
        assert_eq!(bands.len(), 4);
        let splits = separate_modifiers(&bands, &page, &StaticSegConfig::default()).unwrap();
        assert!(splits[..3].iter().all(|s| s.lower_modifier.is_none()));
        // Stem rows 60 and 61 tie; the lower row wins.
        assert_eq!(splits[3].core, Rect::new(50, 0, 61, 12));
        assert_eq!(splits[3].lower_modifier, Some(Rect::new(61, 0, 70, 12)));
    }

    #[test]
    fn monotone_tall_band_is_not_split() {
        // 10, 10, 10 and a 20-row band (1.6x the mean) whose profile
        // strictly increases.
        let mut page = BinaryImage::blank(20, 80).unwrap();
        for i in 0..3 {
            for y in i * 15..i * 15 + 10 {
                for x in 0..20 {
                    page.set(x, y, true);
                }
            }
        }
        for r in 0..20 {
            for x in 0..=r {
                page.set(x, 55 + r, true);
            }
        }
        let bands = dissect_rows(&page, &StaticSegConfig::default());
        assert_eq!(bands[3].rect.height(), 20);
        let splits = separate_modifiers(&bands, &page, &StaticSegConfig::default()).unwrap();
        assert!(splits[3].lower_modifier.is_none());
    }

    #[test]
    fn valley_rules() {
        assert_eq!(deepest_valley(&[5, 1, 5, 1, 5]), Some(3));
        assert_eq!(deepest_valley(&[5, 0, 5]), None);
        assert_eq!(deepest_valley(&[1, 2, 3, 4]), None);
        assert_eq!(deepest_valley(&[5, 2, 5, 1, 4]), Some(3));
    }

    #[test]
    fn zones_with_headline_and_modifier() {
        let line = headline_line();
        let (_, head) = remove_headline(&line);
        let mut b = band(0, 12, 20);
        b.headline = head;
        assert_eq!(estimate_zones(&b, &line, None), (3, 12));
        let (u, m) = estimate_zones(&b, &line, Some(9));
        assert!(0 < u && u < m && m < 12);
    }

    #[test]
    fn zones_without_headline() {
        let blank = BinaryImage::blank(6, 7).unwrap();
        assert_eq!(estimate_zones(&band(0, 7, 6), &blank, None), (0, 7));
        // Thin top row, then a full body.
        let line = BinaryImage::from_fn(10, 8, |x, y| (y == 0 && x < 2) || y >= 2).unwrap();
        assert_eq!(estimate_zones(&band(0, 8, 10), &line, None), (2, 8));
    }

    fn dilate_oracle(img: &BinaryImage, r: usize) -> BinaryImage {
        let r = r as isize;
        BinaryImage::from_fn(img.width(), img.height(), |x, y| {
            let mut any = false;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x as isize + dx, y as isize + dy);
                    if xx >= 0
                        && yy >= 0
                        && (xx as usize) < img.width()
                        && (yy as usize) < img.height()
                    {
                        any |= img.get(xx as usize, yy as usize);
                    }
                }
            }
            any
        })
        .unwrap()
    }

    #[test]
    fn dilate_single_pixel_and_full() {
        let img = BinaryImage::from_fn(5, 5, |x, y| (x, y) == (2, 2)).unwrap();
        let d = dilate(&img, 1).unwrap();
        assert_eq!(d.ink_count(), 9);
        assert!(d.get(1, 1) && d.get(3, 3) && !d.get(0, 0));
        let full = BinaryImage::from_fn(4, 4, |_, _| true).unwrap();
        assert_eq!(dilate(&full, 2).unwrap(), full);
        assert!(dilate(&full, 0).is_err());
    }

    #[test]
    fn dilate_matches_neighborhood_or() {
        for seed in 0..10 {
            let img = random_image(6, 6, seed, 0.15);
            for r in 1..3 {
                assert_eq!(dilate(&img, r).unwrap(), dilate_oracle(&img, r));
            }
        }
    }

    proptest! {
        #[test]
        fn bands_cover_all_ink(seed in any::<u64>(), p in 0.0f64..0.3) {
            let page = random_image(15, 30, seed, p * p);
            let bands = dissect_rows(&page, &StaticSegConfig::default());
            for w in bands.windows(2) {
                prop_assert!(w[0].rect.bottom <= w[1].rect.top);
            }
            let covered: usize = bands.iter().map(|b| crop(&page, &b.rect).unwrap().ink_count()).sum();
            prop_assert_eq!(covered, page.ink_count());
        }

        #[test]
        fn column_boxes_cover_ink_and_reproduce_runs(seed in any::<u64>()) {
            let line = random_image(25, 6, seed, 0.12);
            let (boxes, _) = dissect_columns(&line, &StaticSegConfig::default());
            let covered: usize = boxes.iter().map(|b| crop(&line, b).unwrap().ink_count()).sum();
            prop_assert_eq!(covered, line.ink_count());
            for w in boxes.windows(2) {
                prop_assert!(w[0].right < w[1].left);
            }
            let runs = project(&line, Axis::Column).nonzero_runs();
            let spans: Vec<_> = boxes.iter().map(|b| (b.left, b.right)).collect();
            prop_assert_eq!(spans, runs);
        }

        #[test]
        fn headline_removal_never_adds_ink(seed in any::<u64>()) {
            let line = random_image(12, 9, seed, 0.5);
            prop_assert!(remove_headline(&line).0.ink_count() <= line.ink_count());
        }

        #[test]
        fn dilation_is_extensive_and_monotone(seed in any::<u64>()) {
            let img = random_image(10, 8, seed, 0.1);
            let d1 = dilate(&img, 1).unwrap();
            let d2 = dilate(&img, 2).unwrap();
            for i in 0..img.pixels().len() {
                prop_assert!(img.pixels()[i] <= d1.pixels()[i]);
                prop_assert!(d1.pixels()[i] <= d2.pixels()[i]);
            }
        }
    }
}
