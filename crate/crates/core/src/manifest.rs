//! JSON-lines manifests and boundary overlays for segmentation output.
//!
//! Every manifest line is one object with a `kind` field: `line`, `char`,
//! `space`, `modifier` or `residue`. Coordinates are page pixels; boxes are
//! half-open `{top, left, bottom, right}`.

use serde::Serialize;

use crate::dynamic_seg::LineResult;
use crate::raster::{BinaryImage, GrayImage, Rect};
use crate::static_seg::{Dissection, LineBand};

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record<'a> {
    Line {
        line: usize,
        #[serde(rename = "box")]
        rect: Rect,
        headline_row: Option<usize>,
        upper_end: usize,
        middle_end: usize,
    },
    Char {
        line: usize,
        index: usize,
        #[serde(rename = "box")]
        rect: Rect,
        file: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        label: Option<&'a str>,
        #[serde(skip_serializing_if = "Option::is_none")]
        confidence: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        similarity: Option<f64>,
    },
    Space {
        line: usize,
        left: usize,
        right: usize,
    },
    Modifier {
        line: usize,
        #[serde(rename = "box")]
        rect: Rect,
    },
    Residue {
        line: usize,
        left: usize,
        right: usize,
    },
}

/// File name used for the character crop at `(line, index)`.
pub fn char_file_name(line: usize, index: usize) -> String {
    format!("char_{line:03}_{index:03}.pbm")
}

fn push(out: &mut String, rec: &Record<'_>) {
    out.push_str(&serde_json::to_string(rec).expect("records always serialize"));
    out.push('\n');
}

fn line_record(i: usize, band: &LineBand) -> Record<'static> {
    Record::Line {
        line: i,
        rect: band.rect,
        headline_row: band.headline_row().map(|r| r + band.rect.top),
        upper_end: band.rect.top + band.upper_end,
        middle_end: band.rect.top + band.middle_end,
    }
}

pub fn static_manifest(d: &Dissection) -> String {
    let mut out = String::new();
    for (i, band) in d.lines.iter().enumerate() {
        push(&mut out, &line_record(i, band));
        for (j, rect) in d.characters[i].iter().enumerate() {
            push(
                &mut out,
                &Record::Char {
                    line: i,
                    index: j,
                    rect: *rect,
                    file: char_file_name(i, j),
                    label: None,
                    confidence: None,
                    similarity: None,
                },
            );
        }
        for s in d.spaces.iter().filter(|s| s.line == i) {
            push(
                &mut out,
                &Record::Space {
                    line: i,
                    left: s.left,
                    right: s.right,
                },
            );
        }
        if let Some(rect) = d.modifiers[i] {
            push(&mut out, &Record::Modifier { line: i, rect });
        }
    }
    out
}

/// `labels` names the network's outputs.
pub fn dynamic_manifest(lines: &[LineResult], labels: &[String]) -> String {
    let mut out = String::new();
    for (i, lr) in lines.iter().enumerate() {
        push(&mut out, &line_record(i, &lr.band));
        for (j, c) in lr.result.characters.iter().enumerate() {
            push(
                &mut out,
                &Record::Char {
                    line: i,
                    index: j,
                    rect: c.rect,
                    file: char_file_name(i, j),
                    label: Some(labels.get(c.label).map_or("?", String::as_str)),
                    confidence: Some(c.confidence),
                    similarity: Some(c.similarity.value),
                },
            );
        }
        if let Some((left, right)) = lr.result.residue {
            push(
                &mut out,
                &Record::Residue {
                    line: i,
                    left,
                    right,
                },
            );
        }
    }
    out
}

/// The page as gray levels (ink 0, paper 255) with each box outlined at 128.
pub fn overlay(page: &BinaryImage, boxes: &[Rect]) -> GrayImage {
    let mut px: Vec<u8> = page
        .pixels()
        .iter()
        .map(|&p| if p == 1 { 0 } else { 255 })
        .collect();
    let w = page.width();
    let mut mark = |x: usize, y: usize| {
        if x < w && y < page.height() {
            px[y * w + x] = 128;
        }
    };
    for r in boxes {
        if r.area() == 0 {
            continue;
        }
        for x in r.left..r.right {
            mark(x, r.top);
            mark(x, r.bottom - 1);
        }
        for y in r.top..r.bottom {
            mark(r.left, y);
            mark(r.right - 1, y);
        }
    }
    GrayImage::new(w, page.height(), px).expect("same dimensions as the page")
}
