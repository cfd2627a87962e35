//! Synthetic glyph sets and page generation with ground truth.
//!
//! Glyphs keep their nominal advance on the line: scale jitter grows or
//! shrinks a glyph about the center of its unscaled cell, so enlarged
//! glyphs eat into the gap and can touch their neighbours.

mod glyphs;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use glyphs::{class_count, draw_glyph, random_style, GlyphStyle, StyleRange, CLASS_NAMES};

use crate::error::{Error, Result};
use crate::pnm;
use crate::preprocess::{rescale_nearest, rotate};
use crate::raster::{crop, BinaryImage, Rect};

impl StyleRange {
    pub fn validate(&self) -> Result<()> {
        if self.width.0 < 4
            || self.height.0 < 4
            || self.width.0 > self.width.1
            || self.height.0 > self.height.1
        {
            return Err(Error::Config(
                "glyph cell range must be nonempty and at least 4x4".into(),
            ));
        }
        if !(self.thickness.0 >= 1.0 && self.thickness.0 <= self.thickness.1)
            || !(self.jitter >= 0.0)
        {
            return Err(Error::Config(
                "stroke thickness range must be nonempty and >= 1, jitter >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Labeled exemplars, one list per class.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSet {
    labels: Vec<String>,
    exemplars: Vec<Vec<BinaryImage>>,
}

impl GlyphSet {
    pub fn new(labels: Vec<String>, exemplars: Vec<Vec<BinaryImage>>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::Config(format!(
                "a glyph set needs at least 2 classes, found {}",
                labels.len()
            )));
        }
        if labels.len() != exemplars.len() {
            return Err(Error::Config("one exemplar list per label required".into()));
        }
        for (label, list) in labels.iter().zip(&exemplars) {
            if list.is_empty() {
                return Err(Error::Config(format!("class {label:?} has no exemplars")));
            }
            if list.iter().any(BinaryImage::is_blank) {
                return Err(Error::Config(format!(
                    "class {label:?} has a blank exemplar"
                )));
            }
        }
        Ok(Self { labels, exemplars })
    }

    /// The bundled procedural set: `per_class` writer variants of each
    /// shape.
    pub fn synthetic(per_class: usize, seed: u64) -> Result<Self> {
        Self::synthetic_with(per_class, seed, &StyleRange::default())
    }

    pub fn synthetic_with(per_class: usize, seed: u64, range: &StyleRange) -> Result<Self> {
        if per_class == 0 {
            return Err(Error::Config("need at least one exemplar per class".into()));
        }
        range.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exemplars = (0..class_count())
            .map(|c| {
                (0..per_class)
                    .map(|_| {
                        let style = random_style(range, &mut rng);
                        draw_glyph(c, &style, &mut rng)
                    })
                    .collect()
            })
            .collect();
        Self::new(
            CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
            exemplars,
        )
    }

    /// `writers` fixed styles, each writing every class once per session with
    /// fresh stroke jitter. Exemplars are session-major, so `split` holds out
    /// whole later sessions of the same writers.
    pub fn synthetic_sessions(
        writers: usize,
        sessions: usize,
        seed: u64,
        range: &StyleRange,
    ) -> Result<Self> {
        if writers == 0 || sessions == 0 {
            return Err(Error::Config(
                "need at least one writer and one session".into(),
            ));
        }
        range.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let styles: Vec<_> = (0..writers)
            .map(|_| random_style(range, &mut rng))
            .collect();
        let mut exemplars = vec![Vec::with_capacity(writers * sessions); class_count()];
        for _ in 0..sessions {
            for style in &styles {
                for (c, list) in exemplars.iter_mut().enumerate() {
                    list.push(draw_glyph(c, style, &mut rng));
                }
            }
        }
        Self::new(
            CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
            exemplars,
        )
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    pub fn exemplars(&self, class: usize) -> &[BinaryImage] {
        &self.exemplars[class]
    }

    /// All exemplars as `(class, image)` in class order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &BinaryImage)> {
        self.exemplars
            .iter()
            .enumerate()
            .flat_map(|(c, list)| list.iter().map(move |img| (c, img)))
    }

    /// Splits each class into a training and a held-out part. The first
    /// `round(n · train_fraction)` exemplars train, clamped so both parts
    /// are nonempty.
    pub fn split(&self, train_fraction: f64) -> Result<(GlyphSet, GlyphSet)> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(Error::Config("train fraction must lie in [0, 1]".into()));
        }
        let mut train = Vec::with_capacity(self.labels.len());
        let mut held = Vec::with_capacity(self.labels.len());
        for (label, list) in self.labels.iter().zip(&self.exemplars) {
            if list.len() < 2 {
                return Err(Error::Config(format!(
                    "class {label:?} has {} exemplar(s); a held-out split needs at least 2",
                    list.len()
                )));
            }
            let n =
                ((list.len() as f64 * train_fraction).round() as usize).clamp(1, list.len() - 1);
            train.push(list[..n].to_vec());
            held.push(list[n..].to_vec());
        }
        Ok((
            Self::new(self.labels.clone(), train)?,
            Self::new(self.labels.clone(), held)?,
        ))
    }

    /// Reads `<dir>/<label>/<n>.pbm`. Classes are ordered by label name,
    /// exemplars by `n`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut class_dirs: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        class_dirs.sort();
        let mut labels = Vec::new();
        let mut exemplars = Vec::new();
        for cdir in class_dirs {
            let label = cdir
                .file_name()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let mut files: Vec<(u64, std::path::PathBuf)> = Vec::new();
            for entry in std::fs::read_dir(&cdir).map_err(|e| Error::io(&cdir, e))? {
                let path = entry.map_err(|e| Error::io(&cdir, e))?.path();
                if path.extension().is_some_and(|x| x == "pbm") {
                    let n = path
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| {
                            Error::Config(format!(
                                "exemplar {} is not named <n>.pbm",
                                path.display()
                            ))
                        })?;
                    files.push((n, path));
                }
            }
            if files.is_empty() {
                continue;
            }
            files.sort();
            let imgs = files
                .iter()
                .map(|(_, p)| pnm::read_pbm(p))
                .collect::<Result<Vec<_>>>()?;
            labels.push(label);
            exemplars.push(imgs);
        }
        Self::new(labels, exemplars)
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (label, list) in self.labels.iter().zip(&self.exemplars) {
            let cdir = dir.join(label);
            std::fs::create_dir_all(&cdir).map_err(|e| Error::io(&cdir, e))?;
            for (n, img) in list.iter().enumerate() {
                pnm::write_pbm(cdir.join(format!("{n}.pbm")), img)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub seed: u64,
    pub pages: usize,
    pub lines_per_page: usize,
    pub glyphs_per_line: usize,
    /// Inclusive pixel ranges.
    pub inter_glyph_gap: (usize, usize),
    pub inter_word_gap: (usize, usize),
    pub glyphs_per_word: (usize, usize),
    pub line_gap: (usize, usize),
    pub scale_jitter: (f64, f64),
    /// Degrees.
    pub rotation_jitter: (f64, f64),
    pub salt_pepper_rate: f64,
    pub headline_bar: bool,
    pub lower_modifier_rate: f64,
    /// Probability that a glyph is pushed flush against its predecessor.
    pub touching_rate: f64,
    pub margin: usize,
    /// Fixed page width; content that does not fit is an error. `None`
    /// sizes the page to its content.
    pub page_width: Option<usize>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            pages: 4,
            lines_per_page: 3,
            glyphs_per_line: 8,
            inter_glyph_gap: (3, 6),
            inter_word_gap: (14, 20),
            glyphs_per_word: (2, 4),
            line_gap: (10, 16),
            scale_jitter: (0.8, 1.2),
            rotation_jitter: (0.0, 0.0),
            salt_pepper_rate: 0.0,
            headline_bar: false,
            lower_modifier_rate: 0.0,
            touching_rate: 0.0,
            margin: 8,
            page_width: None,
        }
    }
}

impl CorpusSpec {
    /// No jitter, noise, or touching: the static method's easy regime.
    pub fn clean(seed: u64) -> Self {
        Self {
            seed,
            scale_jitter: (1.0, 1.0),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.pages == 0 || self.lines_per_page == 0 || self.glyphs_per_line == 0 {
            return bad("pages, lines_per_page and glyphs_per_line must be >= 1");
        }
        for (name, (lo, hi)) in [
            ("inter_glyph_gap", self.inter_glyph_gap),
            ("inter_word_gap", self.inter_word_gap),
            ("glyphs_per_word", self.glyphs_per_word),
            ("line_gap", self.line_gap),
        ] {
            if lo > hi {
                return Err(Error::Config(format!("{name} range {lo}..{hi} is empty")));
            }
        }
        if self.glyphs_per_word.0 == 0 {
            return bad("glyphs_per_word must be >= 1");
        }
        if self.line_gap.0 == 0 {
            return bad("line_gap must be >= 1 so lines stay separable");
        }
        let (slo, shi) = self.scale_jitter;
        if !(slo > 0.0 && slo <= shi && shi.is_finite()) {
            return bad("scale_jitter must be a nonempty positive range");
        }
        let (rlo, rhi) = self.rotation_jitter;
        if !(rlo <= rhi && rlo >= -45.0 && rhi <= 45.0) {
            return bad("rotation_jitter must be a nonempty range within [-45, 45]");
        }
        if !(0.0..=0.1).contains(&self.salt_pepper_rate) {
            return bad("salt_pepper_rate must lie in [0, 0.1]");
        }
        for (name, r) in [
            ("lower_modifier_rate", self.lower_modifier_rate),
            ("touching_rate", self.touching_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthGlyph {
    pub label: usize,
    /// Page coordinates of the placed glyph's ink bounding box.
    pub rect: Rect,
    /// The glyph as rendered (after scale and rotation), tight-cropped.
    #[serde(skip)]
    pub image: BinaryImage,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthLine {
    pub band: Rect,
    pub glyphs: Vec<TruthGlyph>,
    /// Word gaps as half-open page column intervals.
    pub spaces: Vec<(usize, usize)>,
    /// Half-open page rows of the headline bar.
    pub headline_rows: Option<(usize, usize)>,
    pub modifiers: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageTruth {
    pub width: usize,
    pub height: usize,
    pub lines: Vec<TruthLine>,
}

impl PageTruth {
    pub fn glyphs(&self) -> impl Iterator<Item = &TruthGlyph> {
        self.lines.iter().flat_map(|l| &l.glyphs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub pages: Vec<PageTruth>,
}

const HEADLINE_THICKNESS: usize = 2;
const STEM_LEN: usize = 2;
const BLOB: (usize, usize) = (6, 4);

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi)
}

fn sample_real(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn render(exemplar: &BinaryImage, scale: f64, angle: f64) -> BinaryImage {
    let w = ((exemplar.width() as f64 * scale).round() as usize).max(1);
    let h = ((exemplar.height() as f64 * scale).round() as usize).max(1);
    let scaled = rescale_nearest(exemplar, w, h);
    let rotated = rotate(&scaled, angle);
    match rotated.ink_bounds() {
        Some(b) => crop(&rotated, &b).expect("bounds inside image"),
        None => scaled,
    }
}

/// One glyph laid out on a line, in line-relative columns.
struct Slot {
    label: usize,
    image: BinaryImage,
    left: isize,
    modifier: bool,
    word_end: bool,
}

fn layout_line(glyphs: &GlyphSet, spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Vec<Slot> {
    let mut slots: Vec<Slot> = Vec::with_capacity(spec.glyphs_per_line);
    let mut cell_left: isize = 0;
    let mut word_left = sample_range(rng, spec.glyphs_per_word);
    for i in 0..spec.glyphs_per_line {
        let label = rng.gen_range(0..glyphs.class_count());
        let list = glyphs.exemplars(label);
        let exemplar = &list[rng.gen_range(0..list.len())];
        let scale = sample_real(rng, spec.scale_jitter);
        let angle = sample_real(rng, spec.rotation_jitter);
        let image = render(exemplar, scale, angle);
        let cell_w = exemplar.width() as isize;
        let mut left = cell_left + (cell_w - image.width() as isize).div_euclid(2);
        let touching = i > 0 && !slots[i - 1].word_end && rng.gen_bool(spec.touching_rate);
        if touching {
            let prev = &slots[i - 1];
            left = prev.left + prev.image.width() as isize;
        }
        let modifier = spec.lower_modifier_rate > 0.0 && rng.gen_bool(spec.lower_modifier_rate);
        word_left -= 1;
        let word_end = word_left == 0;
        let gap = if word_end {
            word_left = sample_range(rng, spec.glyphs_per_word);
            sample_range(rng, spec.inter_word_gap)
        } else {
            sample_range(rng, spec.inter_glyph_gap)
        };
        cell_left = if touching {
            left + image.width() as isize
        } else {
            cell_left + cell_w
        } + gap as isize;
        slots.push(Slot {
            label,
            image,
            left,
            modifier,
            word_end,
        });
    }
    slots
}

fn stamp_rect(page: &mut BinaryImage, r: &Rect) {
    for y in r.top..r.bottom {
        for x in r.left..r.right {
            page.set(x, y, true);
        }
    }
}

/// Renders `spec.pages` pages from `glyphs` with their ground truth.
pub fn generate(glyphs: &GlyphSet, spec: &CorpusSpec) -> Result<(Vec<BinaryImage>, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pages = Vec::with_capacity(spec.pages);
    let mut truth = Vec::with_capacity(spec.pages);
    for _ in 0..spec.pages {
        let lines: Vec<Vec<Slot>> = (0..spec.lines_per_page)
            .map(|_| layout_line(glyphs, spec, &mut rng))
            .collect();
        let gaps: Vec<usize> = (1..spec.lines_per_page)
            .map(|_| sample_range(&mut rng, spec.line_gap))
            .collect();

        // Shift each line so its leftmost ink sits on the margin.
        let mut content_w = 0;
        let mut line_heights = Vec::with_capacity(lines.len());
        for line in &lines {
            let min_left = line.iter().map(|s| s.left).min().unwrap_or(0);
            let right = line
                .iter()
                .map(|s| s.left + s.image.width() as isize)
                .max()
                .unwrap_or(0);
            content_w = content_w.max((right - min_left) as usize);
            let glyph_h = line.iter().map(|s| s.image.height()).max().unwrap_or(0);
            let mut h = glyph_h;
            if spec.headline_bar {
                h += HEADLINE_THICKNESS;
            }
            if line.iter().any(|s| s.modifier) {
                // Modifiers hang below the lowest glyph bottom.
                h += STEM_LEN + BLOB.1;
            }
            line_heights.push(h);
        }
        let needed_w = content_w + 2 * spec.margin;
        let width = match spec.page_width {
            Some(w) if w < needed_w => {
                return Err(Error::Config(format!(
                    "a line needs {needed_w} columns but the page is {w} wide"
                )));
            }
            Some(w) => w,
            None => needed_w,
        };
        let height =
            2 * spec.margin + line_heights.iter().sum::<usize>() + gaps.iter().sum::<usize>();
        let mut page = BinaryImage::blank(width, height)?;
        let mut page_truth = PageTruth {
            width,
            height,
            lines: Vec::with_capacity(lines.len()),
        };

        let mut top = spec.margin;
        for (li, line) in lines.iter().enumerate() {
            let min_left = line.iter().map(|s| s.left).min().unwrap_or(0);
            let shift = spec.margin as isize - min_left;
            let glyph_h = line.iter().map(|s| s.image.height()).max().unwrap_or(0);
            let glyph_top = top
                + if spec.headline_bar {
                    HEADLINE_THICKNESS
                } else {
                    0
                };
            let mut tl = TruthLine {
                band: Rect::new(top, 0, top + line_heights[li], width),
                glyphs: Vec::with_capacity(line.len()),
                spaces: Vec::new(),
                headline_rows: None,
                modifiers: Vec::new(),
            };
            let mut word_start: Option<usize> = None;
            let mut prev_right = 0;
            for slot in line {
                let left = (slot.left + shift) as usize;
                let (w, h) = (slot.image.width(), slot.image.height());
                // Hang from the headline, or stand on a shared baseline.
                let y = if spec.headline_bar {
                    glyph_top
                } else {
                    glyph_top + glyph_h - h
                };
                page.stamp(&slot.image, left as isize, y as isize);
                let rect = Rect::new(y, left, y + h, left + w);
                if word_start.is_none() {
                    word_start = Some(left);
                }
                if slot.modifier {
                    let cx = left + w / 2;
                    let stem = Rect::new(y + h, cx, y + h + STEM_LEN, cx + 1);
                    let blob_left = (cx + 1).saturating_sub(BLOB.0 / 2);
                    let blob = Rect::new(
                        stem.bottom,
                        blob_left,
                        stem.bottom + BLOB.1,
                        blob_left + BLOB.0,
                    );
                    stamp_rect(&mut page, &stem);
                    stamp_rect(&mut page, &blob);
                    tl.modifiers
                        .push(Rect::new(stem.top, blob.left, blob.bottom, blob.right));
                }
                tl.glyphs.push(TruthGlyph {
                    label: slot.label,
                    rect,
                    image: slot.image.clone(),
                });
                prev_right = prev_right.max(left + w);
                if slot.word_end {
                    if spec.headline_bar {
                        let start = word_start.expect("word has a glyph");
                        stamp_rect(
                            &mut page,
                            &Rect::new(top, start, top + HEADLINE_THICKNESS, prev_right),
                        );
                    }
                    word_start = None;
                }
            }
            if let (true, Some(start)) = (spec.headline_bar, word_start) {
                stamp_rect(
                    &mut page,
                    &Rect::new(top, start, top + HEADLINE_THICKNESS, prev_right),
                );
            }
            for pair in tl.glyphs.windows(2).zip(line) {
                let (a, b) = (&pair.0[0], &pair.0[1]);
                if pair.1.word_end {
                    tl.spaces.push((a.rect.right, b.rect.left));
                }
            }
            if spec.headline_bar {
                tl.headline_rows = Some((top, top + HEADLINE_THICKNESS));
            }
            let ink = page
                .ink_bounds_within(&Rect::new(top, 0, top + line_heights[li], width))
                .expect("line has ink");
            tl.band = Rect::new(top, ink.left, top + line_heights[li], ink.right);
            page_truth.lines.push(tl);
            top += line_heights[li] + gaps.get(li).copied().unwrap_or(0);
        }

        if spec.salt_pepper_rate > 0.0 {
            for y in 0..height {
                for x in 0..width {
                    if rng.gen_bool(spec.salt_pepper_rate) {
                        let v = page.get(x, y);
                        page.set(x, y, !v);
                    }
                }
            }
        }
        pages.push(page);
        truth.push(page_truth);
    }
    Ok((pages, GroundTruth { pages: truth }))
}
