//! Recognition-driven segmentation: cut a line into narrow slices, then grow
//! a candidate slice by slice until the network recognizes a character and a
//! template match confirms the boundary.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mlp::Mlp;
use crate::preprocess::{normalize, PreprocessConfig};
use crate::raster::{crop, BinaryImage, Rect};
use crate::similarity::{best_match, CharacterTemplate, SimilarityScore};
use crate::static_seg::{dissect_rows, remove_headline, LineBand, StaticSegConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicSegConfig {
    /// Slice width as a fraction of the line width.
    pub interval_fraction: f64,
    pub confidence_threshold: f64,
    /// Minimum best-template similarity, in percent.
    pub similarity_floor: f64,
    pub max_segments_per_char: usize,
}

impl Default for DynamicSegConfig {
    fn default() -> Self {
        Self {
            interval_fraction: 0.025,
            confidence_threshold: 0.8,
            similarity_floor: 80.0,
            max_segments_per_char: 12,
        }
    }
}

impl DynamicSegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.interval_fraction > 0.0 && self.interval_fraction < 1.0) {
            return Err(Error::Config("interval_fraction must lie in (0, 1)".into()));
        }
        if !(self.confidence_threshold > 0.0 && self.confidence_threshold < 1.0) {
            return Err(Error::Config(
                "confidence_threshold must lie in (0, 1)".into(),
            ));
        }
        if !self.similarity_floor.is_finite() {
            return Err(Error::Config("similarity_floor must be finite".into()));
        }
        if self.max_segments_per_char == 0 {
            return Err(Error::Config("max_segments_per_char must be >= 1".into()));
        }
        Ok(())
    }
}

/// Columns `[cuts[start_cut], cuts[end_cut])` of a line, trimmed to ink.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCandidate {
    pub start_cut: usize,
    pub end_cut: usize,
    pub image: BinaryImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicCharacter {
    /// Columns are cut positions; rows are tight to the ink between them.
    pub rect: Rect,
    pub label: usize,
    pub confidence: f64,
    pub similarity: SimilarityScore,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicResult {
    pub characters: Vec<DynamicCharacter>,
    /// Half-open column interval after the last character that still holds
    /// unconsumed ink.
    pub residue: Option<(usize, usize)>,
}

impl DynamicResult {
    fn offset(mut self, dy: usize, dx: usize) -> Self {
        for c in &mut self.characters {
            c.rect = c.rect.offset(dy, dx);
        }
        self.residue = self.residue.map(|(l, r)| (l + dx, r + dx));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recognition {
    pub label: usize,
    pub confidence: f64,
    pub similarity: f64,
}

impl Recognition {
    /// Confident and confirmed by a template match.
    pub fn confirmed(&self, cfg: &DynamicSegConfig) -> bool {
        self.confidence >= cfg.confidence_threshold && self.similarity >= cfg.similarity_floor
    }
}

/// A trained network plus the templates that confirm its guesses.
#[derive(Debug, Clone)]
pub struct Recognizer<'a> {
    net: &'a Mlp,
    templates: &'a [CharacterTemplate],
    norm: PreprocessConfig,
}

impl<'a> Recognizer<'a> {
    /// Candidates are normalized with `norm` minus deskew, matching how
    /// templates are prepared.
    pub fn new(
        net: &'a Mlp,
        templates: &'a [CharacterTemplate],
        norm: &PreprocessConfig,
    ) -> Result<Self> {
        norm.validate()?;
        let cfg = net.config();
        if cfg.input_len != norm.input_len() {
            return Err(Error::Config(format!(
                "network takes {} inputs but glyphs normalize to {}x{}",
                cfg.input_len, norm.normalized_width, norm.normalized_height
            )));
        }
        if cfg.output_len < 2 {
            return Err(Error::Config(
                "recognizer network needs at least 2 classes".into(),
            ));
        }
        for class in 0..cfg.output_len {
            if !templates.iter().any(|t| t.label == class) {
                return Err(Error::Config(format!("no template for class {class}")));
            }
        }
        if let Some(t) = templates.iter().find(|t| t.label >= cfg.output_len) {
            return Err(Error::Config(format!(
                "template label {} exceeds the network's classes",
                t.label
            )));
        }
        if let Some(t) = templates.iter().find(|t| {
            t.image.width() != norm.normalized_width || t.image.height() != norm.normalized_height
        }) {
            return Err(Error::Shape(format!(
                "template is {}x{}, expected {}x{}",
                t.image.width(),
                t.image.height(),
                norm.normalized_width,
                norm.normalized_height
            )));
        }
        Ok(Self {
            net,
            templates,
            norm: norm.without_deskew(),
        })
    }

    pub fn normalization(&self) -> &PreprocessConfig {
        &self.norm
    }

    /// Classifies a nonblank crop and scores it against the templates.
    pub fn recognize(&self, img: &BinaryImage) -> Result<Recognition> {
        let normalized = normalize(img, &self.norm)?;
        let (label, confidence) = self.net.classify(&normalized.features())?;
        let (_, score) = best_match(&normalized, self.templates)?;
        Ok(Recognition {
            label,
            confidence,
            similarity: score.value,
        })
    }
}

/// Cut columns `round(k · f · width)` for `k = 0..=floor(1/f)`, deduplicated
/// and closed with `width`. Lines narrower than `1/f` columns get a single
/// segment.
pub fn cut_positions(width: usize, fraction: f64) -> Vec<usize> {
    let inverse = 1.0 / fraction;
    if (width as f64) < inverse {
        return if width == 0 { vec![0] } else { vec![0, width] };
    }
    let steps = inverse.round();
    let mut cuts: Vec<usize> = if (inverse - steps).abs() < 1e-9 {
        // Exact slice count: round half up in integers.
        let n = steps as usize;
        (0..=n).map(|k| (2 * k * width + n) / (2 * n)).collect()
    } else {
        (0..=inverse.floor() as usize)
            .map(|k| (k as f64 * fraction * width as f64).round() as usize)
            .collect()
    };
    cuts.push(width);
    cuts.dedup();
    cuts
}

pub fn over_segment(line: &BinaryImage, cfg: &DynamicSegConfig) -> Vec<usize> {
    cut_positions(line.width(), cfg.interval_fraction)
}

/// The candidate spanning `cuts[start..=end]`, or `None` when it holds no
/// ink.
pub fn candidate(
    line: &BinaryImage,
    cuts: &[usize],
    start: usize,
    end: usize,
) -> Option<SegmentCandidate> {
    let region = Rect::new(0, cuts[start], line.height(), cuts[end]);
    let bounds = line.ink_bounds_within(&region)?;
    Some(SegmentCandidate {
        start_cut: start,
        end_cut: end,
        image: crop(line, &bounds).expect("bounds inside line"),
    })
}

fn has_ink(line: &BinaryImage, left: usize, right: usize) -> bool {
    left < right
        && line
            .ink_bounds_within(&Rect::new(0, left, line.height(), right))
            .is_some()
}

/// Greedy left-to-right scan over precomputed cuts.
pub fn segment_with_cuts(
    line: &BinaryImage,
    cuts: &[usize],
    recognizer: &Recognizer<'_>,
    cfg: &DynamicSegConfig,
) -> Result<DynamicResult> {
    cfg.validate()?;
    let segments = cuts.len().saturating_sub(1);
    let mut characters = Vec::new();
    let mut consumed = 0;
    let mut cur = 0;
    while cur < segments {
        if !has_ink(line, cuts[cur], cuts[cur + 1]) {
            cur += 1;
            continue;
        }
        let last = (cur + cfg.max_segments_per_char).min(segments);
        let mut accepted = None;
        let mut best: Option<(usize, Recognition)> = None;
        for end in cur + 1..=last {
            let Some(cand) = candidate(line, cuts, cur, end) else {
                continue;
            };
            let r = recognizer.recognize(&cand.image)?;
            if r.confirmed(cfg) {
                accepted = Some((end, r));
                break;
            }
            if best
                .as_ref()
                .is_none_or(|(_, b)| r.confidence > b.confidence)
            {
                best = Some((end, r));
            }
        }
        let chosen = accepted
            .or_else(|| best.filter(|(_, r)| r.confidence > cfg.confidence_threshold / 2.0));
        match chosen {
            Some((end, r)) => {
                let region = Rect::new(0, cuts[cur], line.height(), cuts[end]);
                let rows = line.ink_bounds_within(&region).expect("candidate had ink");
                characters.push(DynamicCharacter {
                    rect: Rect::new(rows.top, cuts[cur], rows.bottom, cuts[end]),
                    label: r.label,
                    confidence: r.confidence,
                    similarity: SimilarityScore {
                        value: r.similarity,
                        mode: Default::default(),
                    },
                });
                consumed = cuts[end];
                cur = end;
            }
            // Skip one slice and try again from the next cut.
            None => cur += 1,
        }
    }
    let width = cuts.last().copied().unwrap_or(0);
    let residue = has_ink(line, consumed, width).then_some((consumed, width));
    Ok(DynamicResult {
        characters,
        residue,
    })
}

pub fn segment_line(
    line: &BinaryImage,
    recognizer: &Recognizer<'_>,
    cfg: &DynamicSegConfig,
) -> Result<DynamicResult> {
    segment_with_cuts(line, &over_segment(line, cfg), recognizer, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineResult {
    pub band: LineBand,
    /// Page coordinates.
    pub result: DynamicResult,
}

/// Static row dissection, optional headline removal, then a dynamic scan of
/// each line. Results are in page coordinates, one per line band.
pub fn segment_page(
    page: &BinaryImage,
    recognizer: &Recognizer<'_>,
    static_cfg: &StaticSegConfig,
    cfg: &DynamicSegConfig,
) -> Result<Vec<LineResult>> {
    static_cfg.validate()?;
    cfg.validate()?;
    let mut out = Vec::new();
    for mut band in dissect_rows(page, static_cfg) {
        let img = crop(page, &band.rect)?;
        let line = if static_cfg.remove_headline {
            let (stripped, headline) = remove_headline(&img);
            band.headline = headline;
            stripped
        } else {
            img
        };
        let result = segment_line(&line, recognizer, cfg)?.offset(band.rect.top, band.rect.left);
        out.push(LineResult { band, result });
    }
    Ok(out)
}
