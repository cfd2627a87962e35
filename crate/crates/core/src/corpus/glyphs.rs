//! Procedurally drawn glyph classes. Each class is a set of thick strokes in
//! unit coordinates; exemplars differ by stroke width, control-point jitter,
//! and cell proportions, standing in for different writers.

use rand::Rng;

use crate::raster::{crop, BinaryImage};

#[derive(Debug, Clone, Copy)]
enum Stroke {
    Line((f64, f64), (f64, f64)),
    /// Ellipse arc: center, radii, start and end angle in turns (0 = +x,
    /// increasing clockwise on screen).
    Arc((f64, f64), (f64, f64), f64, f64),
}

use Stroke::{Arc, Line};

pub const CLASS_NAMES: [&str; 10] = [
    "ring", "cross", "plus", "tee", "ell", "zed", "aitch", "delta", "cup", "bars",
];

fn strokes(class: usize) -> Vec<Stroke> {
    match class {
        0 => vec![Arc((0.5, 0.5), (0.4, 0.44), 0.0, 1.0)],
        1 => vec![
            Line((0.1, 0.08), (0.9, 0.92)),
            Line((0.9, 0.08), (0.1, 0.92)),
        ],
        2 => vec![
            Line((0.5, 0.05), (0.5, 0.95)),
            Line((0.05, 0.5), (0.95, 0.5)),
        ],
        3 => vec![
            Line((0.05, 0.1), (0.95, 0.1)),
            Line((0.5, 0.1), (0.5, 0.95)),
        ],
        4 => vec![
            Line((0.15, 0.05), (0.15, 0.92)),
            Line((0.15, 0.92), (0.9, 0.92)),
        ],
        5 => vec![
            Line((0.1, 0.08), (0.9, 0.08)),
            Line((0.9, 0.08), (0.1, 0.92)),
            Line((0.1, 0.92), (0.9, 0.92)),
        ],
        6 => vec![
            Line((0.1, 0.05), (0.1, 0.95)),
            Line((0.9, 0.05), (0.9, 0.95)),
            Line((0.1, 0.5), (0.9, 0.5)),
        ],
        7 => vec![
            Line((0.5, 0.05), (0.06, 0.92)),
            Line((0.5, 0.05), (0.94, 0.92)),
            Line((0.06, 0.92), (0.94, 0.92)),
        ],
        8 => vec![
            Line((0.1, 0.05), (0.1, 0.55)),
            Line((0.9, 0.05), (0.9, 0.55)),
            Arc((0.5, 0.55), (0.4, 0.38), 0.0, 0.5),
        ],
        9 => vec![
            Line((0.05, 0.12), (0.95, 0.12)),
            Line((0.05, 0.5), (0.95, 0.5)),
            Line((0.05, 0.88), (0.95, 0.88)),
        ],
        _ => panic!("glyph class {class} out of range"),
    }
}

pub fn class_count() -> usize {
    CLASS_NAMES.len()
}

/// Writer-style parameters for one exemplar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphStyle {
    pub width: usize,
    pub height: usize,
    pub thickness: f64,
    /// Maximum control-point displacement, in pixels.
    pub jitter: f64,
}

impl Default for GlyphStyle {
    fn default() -> Self {
        Self {
            width: 22,
            height: 24,
            thickness: 3.5,
            jitter: 0.0,
        }
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

fn arc_distance(p: (f64, f64), c: (f64, f64), r: (f64, f64), start: f64, end: f64) -> f64 {
    // Distance to the arc sampled densely; exact enough at glyph scale.
    let steps = 96;
    let mut best = f64::MAX;
    for i in 0..=steps {
        let turn = start + (end - start) * i as f64 / steps as f64;
        let a = turn * std::f64::consts::TAU;
        let q = (c.0 + r.0 * a.cos(), c.1 + r.1 * a.sin());
        best = best.min(((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt());
    }
    best
}

/// Renders one exemplar of `class`, tight-cropped to its ink.
pub fn draw_glyph(class: usize, style: &GlyphStyle, rng: &mut impl Rng) -> BinaryImage {
    let (w, h) = (style.width as f64, style.height as f64);
    let mut jit = |v: f64, span: f64| {
        let d = if style.jitter > 0.0 {
            rng.gen_range(-style.jitter..=style.jitter)
        } else {
            0.0
        };
        (v * span + d).clamp(0.0, span)
    };
    let placed: Vec<Stroke> = strokes(class)
        .into_iter()
        .map(|s| match s {
            Line(a, b) => Line((jit(a.0, w), jit(a.1, h)), (jit(b.0, w), jit(b.1, h))),
            Arc(c, r, s0, s1) => Arc((jit(c.0, w), jit(c.1, h)), (r.0 * w, r.1 * h), s0, s1),
        })
        .collect();
    let half = style.thickness / 2.0;
    let canvas = BinaryImage::from_fn(style.width, style.height, |x, y| {
        let p = (x as f64 + 0.5, y as f64 + 0.5);
        placed.iter().any(|s| match *s {
            Line(a, b) => segment_distance(p, a, b) <= half,
            Arc(c, r, s0, s1) => arc_distance(p, c, r, s0, s1) <= half,
        })
    })
    .expect("nonzero canvas");
    let bounds = canvas.ink_bounds().expect("strokes always leave ink");
    crop(&canvas, &bounds).expect("bounds inside canvas")
}

/// How far writer styles may stray from the nominal glyph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StyleRange {
    pub width: (usize, usize),
    pub height: (usize, usize),
    pub thickness: (f64, f64),
    pub jitter: f64,
}

impl Default for StyleRange {
    fn default() -> Self {
        Self {
            width: (20, 24),
            height: (22, 26),
            thickness: (3.0, 4.2),
            jitter: 1.5,
        }
    }
}

pub fn random_style(range: &StyleRange, rng: &mut impl Rng) -> GlyphStyle {
    GlyphStyle {
        width: rng.gen_range(range.width.0..=range.width.1),
        height: rng.gen_range(range.height.0..=range.height.1),
        thickness: rng.gen_range(range.thickness.0..=range.thickness.1),
        jitter: range.jitter,
    }
}
