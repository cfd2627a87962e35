//! Percentage similarity between a segmented glyph and a reference image.
//!
//! The measure is `S = (1 − N / Σref) · 100`. In `Literal` mode `N` is the
//! ink count of the segmented image, exactly as the formula is usually
//! printed; that gives 0 for a perfect match. `Mismatch` mode uses the count
//! of differing pixels for `N`, so a perfect match scores 100 and higher is
//! better. Reports and boundary confirmation use `Mismatch`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::pnm;
use crate::preprocess::{normalize, PreprocessConfig};
use crate::raster::BinaryImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SimilarityMode {
    Literal,
    #[default]
    Mismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    pub value: f64,
    pub mode: SimilarityMode,
}

/// A labeled reference glyph at the normalized size.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterTemplate {
    /// Class ordinal.
    pub label: usize,
    pub image: BinaryImage,
}

pub fn similarity(
    seg: &BinaryImage,
    reference: &BinaryImage,
    mode: SimilarityMode,
) -> Result<SimilarityScore> {
    if seg.width() != reference.width() || seg.height() != reference.height() {
        return Err(Error::Shape(format!(
            "segment is {}x{}, reference is {}x{}",
            seg.width(),
            seg.height(),
            reference.width(),
            reference.height()
        )));
    }
    let ref_ink = reference.ink_count();
    if ref_ink == 0 {
        return Err(Error::DivisionByZero("reference image has no ink"));
    }
    let numerator = match mode {
        SimilarityMode::Literal => seg.ink_count(),
        SimilarityMode::Mismatch => seg
            .pixels()
            .iter()
            .zip(reference.pixels())
            .filter(|(a, b)| a != b)
            .count(),
    };
    Ok(SimilarityScore {
        value: (1.0 - numerator as f64 / ref_ink as f64) * 100.0,
        mode,
    })
}

/// Highest mismatch-mode score over `templates`; equal scores go to the
/// lowest label, then to the earliest template.
pub fn best_match(
    seg: &BinaryImage,
    templates: &[CharacterTemplate],
) -> Result<(usize, SimilarityScore)> {
    let mut best: Option<(usize, SimilarityScore)> = None;
    for t in templates {
        let score = similarity(seg, &t.image, SimilarityMode::Mismatch)?;
        let better = match &best {
            None => true,
            Some((label, s)) => {
                score.value > s.value || (score.value == s.value && t.label < *label)
            }
        };
        if better {
            best = Some((t.label, score));
        }
    }
    best.ok_or_else(|| Error::Config("template set is empty".into()))
}

/// Splits a template file stem `<label>_<writer>_<n>` into its parts. The
/// label may itself contain underscores; writer and index are the last two
/// fields.
pub fn parse_template_name(stem: &str) -> Option<(&str, &str, u32)> {
    let (rest, n) = stem.rsplit_once('_')?;
    let (label, writer) = rest.rsplit_once('_')?;
    if label.is_empty() || writer.is_empty() {
        return None;
    }
    Some((label, writer, n.parse().ok()?))
}

/// Loads `<label>_<writer>_<n>.pbm` files from `dir`, normalizing each to the
/// configured size. Labels are resolved to ordinals through `labels`; files
/// whose label is unknown are an error. Results are sorted by file name.
pub fn load_templates(
    dir: impl AsRef<Path>,
    labels: &[String],
    cfg: &PreprocessConfig,
) -> Result<Vec<CharacterTemplate>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pbm"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let (label, _, _) = parse_template_name(stem).ok_or_else(|| {
            Error::Config(format!(
                "template file name {} is not <label>_<writer>_<n>.pbm",
                path.display()
            ))
        })?;
        let ordinal = labels.iter().position(|l| l == label).ok_or_else(|| {
            Error::Config(format!("template label {label:?} is not a known class"))
        })?;
        let img = pnm::read_pbm(&path)?;
        out.push(CharacterTemplate {
            label: ordinal,
            image: normalize(&img, &cfg.without_deskew()).map_err(|e| match e {
                Error::EmptyInput(_) => {
                    Error::Config(format!("template {} is blank", path.display()))
                }
                other => other,
            })?,
        });
    }
    if out.is_empty() {
        return Err(Error::Config(format!(
            "no templates found in {}",
            dir.display()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::invert;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> BinaryImage {
        loop {
            let img = BinaryImage::from_fn(w, h, |_, _| rng.gen_bool(0.35)).unwrap();
            if !img.is_blank() {
                return img;
            }
        }
    }

    #[test]
    fn literal_arithmetic() {
        let seg = BinaryImage::from_fn(10, 10, |x, y| y * 10 + x < 14).unwrap();
        let reference = BinaryImage::from_fn(10, 10, |_, _| true).unwrap();
        let s = similarity(&seg, &reference, SimilarityMode::Literal).unwrap();
        assert!((s.value - 86.0).abs() < 1e-12);
    }

    #[test]
    fn identical_and_inverted() {
        let img = BinaryImage::from_fn(6, 4, |x, _| x < 3).unwrap();
        assert_eq!(
            similarity(&img, &img, SimilarityMode::Mismatch)
                .unwrap()
                .value,
            100.0
        );
        assert_eq!(
            similarity(&img, &img, SimilarityMode::Literal)
                .unwrap()
                .value,
            0.0
        );
        assert_eq!(
            similarity(&invert(&img), &img, SimilarityMode::Mismatch)
                .unwrap()
                .value,
            -100.0
        );
    }

    #[test]
    fn errors() {
        let a = BinaryImage::from_fn(3, 3, |_, _| true).unwrap();
        let b = BinaryImage::from_fn(3, 4, |_, _| true).unwrap();
        assert!(matches!(
            similarity(&a, &b, SimilarityMode::Mismatch),
            Err(Error::Shape(_))
        ));
        let blank = BinaryImage::blank(3, 3).unwrap();
        assert!(matches!(
            similarity(&a, &blank, SimilarityMode::Literal),
            Err(Error::DivisionByZero(_))
        ));
        assert!(matches!(best_match(&a, &[]), Err(Error::Config(_))));
    }

    #[test]
    fn best_match_identity_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let templates: Vec<_> = (0..5)
            .map(|label| CharacterTemplate {
                label,
                image: random_image(8, 8, &mut rng),
            })
            .collect();
        let (label, score) = best_match(&templates[3].image, &templates).unwrap();
        assert_eq!((label, score.value), (3, 100.0));

        // Two templates one pixel away from the segment on either side.
        let seg = BinaryImage::from_fn(4, 1, |x, _| x == 1 || x == 2).unwrap();
        let left = BinaryImage::from_fn(4, 1, |x, _| x <= 2).unwrap();
        let right = BinaryImage::from_fn(4, 1, |x, _| x >= 1).unwrap();
        let ts = vec![
            CharacterTemplate {
                label: 7,
                image: right,
            },
            CharacterTemplate {
                label: 2,
                image: left,
            },
        ];
        assert_eq!(best_match(&seg, &ts).unwrap().0, 2);
    }

    #[test]
    fn best_match_is_exhaustive_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let templates: Vec<_> = (0..10)
                .map(|label| CharacterTemplate {
                    label,
                    image: random_image(6, 6, &mut rng),
                })
                .collect();
            let seg = random_image(6, 6, &mut rng);
            let scores: Vec<f64> = templates
                .iter()
                .map(|t| {
                    let diff = (0..36)
                        .filter(|&i| seg.pixels()[i] != t.image.pixels()[i])
                        .count() as f64;
                    100.0 * (1.0 - diff / t.image.ink_count() as f64)
                })
                .collect();
            let max = scores.iter().cloned().fold(f64::MIN, f64::max);
            let expected = scores.iter().position(|&s| s == max).unwrap();
            let (label, score) = best_match(&seg, &templates).unwrap();
            assert_eq!(label, expected);
            assert_eq!(score.value, max);
        }
    }

    #[test]
    fn mismatch_count_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_image(5, 5, &mut rng);
            let b = random_image(5, 5, &mut rng);
            let sa = similarity(&a, &b, SimilarityMode::Mismatch).unwrap().value;
            let sb = similarity(&b, &a, SimilarityMode::Mismatch).unwrap().value;
            let da = (1.0 - sa / 100.0) * b.ink_count() as f64;
            let db = (1.0 - sb / 100.0) * a.ink_count() as f64;
            assert!((da - db).abs() < 1e-9);
        }
    }

    #[test]
    fn template_names() {
        assert_eq!(parse_template_name("ka_w03_2"), Some(("ka", "w03", 2)));
        assert_eq!(parse_template_name("a_b_c_1"), Some(("a_b", "c", 1)));
        assert_eq!(parse_template_name("ka_2"), None);
        assert_eq!(parse_template_name("_w_1"), None);
        assert_eq!(parse_template_name("ka_w_x"), None);
    }

    #[test]
    fn load_templates_from_dir() {
        let dir = tempfile::tempdir().unwrap();
        let img = BinaryImage::from_fn(5, 7, |x, _| x == 2).unwrap();
        pnm::write_pbm(dir.path().join("bar_w1_0.pbm"), &img).unwrap();
        pnm::write_pbm(
            dir.path().join("dot_w1_0.pbm"),
            &BinaryImage::from_fn(3, 3, |_, _| true).unwrap(),
        )
        .unwrap();
        let labels = vec!["dot".to_string(), "bar".to_string()];
        let cfg = PreprocessConfig {
            normalized_width: 8,
            normalized_height: 8,
            ..Default::default()
        };
        let ts = load_templates(dir.path(), &labels, &cfg).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].label, 1);
        assert_eq!(ts[0].image.ink_count(), 64);
        pnm::write_pbm(dir.path().join("zzz_w1_0.pbm"), &img).unwrap();
        assert!(load_templates(dir.path(), &labels, &cfg).is_err());
    }
}
