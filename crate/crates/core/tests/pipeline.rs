use glyphseg::corpus::{generate, CorpusSpec, GlyphSet};
use glyphseg::dynamic_seg::{segment_page, DynamicSegConfig, Recognizer};
use glyphseg::eval::{examples, templates};
use glyphseg::manifest::{dynamic_manifest, overlay, static_manifest};
use glyphseg::mlp::{
    accuracy, read_model, train, write_model, Mlp, MlpConfig, Model, TrainMethod, TrainSpec,
};
use glyphseg::pnm::{read_pbm, read_pgm, write_pbm, write_pgm};
use glyphseg::preprocess::PreprocessConfig;
use glyphseg::static_seg::{dissect, StaticSegConfig};

fn norm() -> PreprocessConfig {
    PreprocessConfig {
        normalized_width: 10,
        normalized_height: 10,
        ..Default::default()
    }
}

#[test]
fn pages_survive_disk_and_dissect_cleanly() {
    let glyphs = GlyphSet::synthetic(2, 3).unwrap();
    let (pages, truth) = generate(&glyphs, &CorpusSpec::clean(5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (i, page) in pages.iter().enumerate() {
        let path = dir.path().join(format!("p{i}.pbm"));
        write_pbm(&path, page).unwrap();
        let back = read_pbm(&path).unwrap();
        assert_eq!(&back, page);

        let d = dissect(&back, &StaticSegConfig::default()).unwrap();
        let found: usize = d.characters.iter().map(Vec::len).sum();
        assert_eq!(found, truth.pages[i].glyphs().count());
        let manifest = static_manifest(&d);
        assert_eq!(
            manifest
                .lines()
                .filter(|l| l.contains(r#""kind":"char""#))
                .count(),
            found
        );

        let ov = overlay(&back, &d.characters.concat());
        let ov_path = dir.path().join(format!("o{i}.pgm"));
        write_pgm(&ov_path, &ov).unwrap();
        assert_eq!(read_pgm(&ov_path).unwrap(), ov);
    }
}

#[test]
fn trained_model_reloads_and_drives_dynamic_segmentation() {
    let glyphs = GlyphSet::synthetic(4, 9).unwrap();
    let norm = norm();
    let data = examples(&glyphs, &norm).unwrap();
    let net = Mlp::init(
        MlpConfig::with_default_hidden(norm.input_len(), glyphs.class_count()),
        1,
    )
    .unwrap();
    let spec = TrainSpec {
        method: TrainMethod::Gdmalrbp,
        epochs: 400,
        ..Default::default()
    };
    let (net, report) = train(&net, &data, &spec).unwrap();
    assert!(report.final_mse < report.mse_per_epoch[0]);
    assert!(accuracy(&net, &data).unwrap() > 0.9);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    let model = Model {
        net,
        labels: glyphs.labels().to_vec(),
    };
    write_model(&path, &model).unwrap();
    let back = read_model(&path).unwrap();
    assert_eq!(back, model);

    let tpl = templates(&glyphs, &norm).unwrap();
    let rec = Recognizer::new(&back.net, &tpl, &norm).unwrap();
    let (pages, truth) = generate(&glyphs, &CorpusSpec::clean(2)).unwrap();
    let lines = segment_page(
        &pages[0],
        &rec,
        &StaticSegConfig::default(),
        &DynamicSegConfig::default(),
    )
    .unwrap();
    assert_eq!(lines.len(), truth.pages[0].lines.len());
    let found: usize = lines.iter().map(|l| l.result.characters.len()).sum();
    assert!(found > 0);
    let manifest = dynamic_manifest(&lines, &back.labels);
    for l in manifest.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        if v["kind"] == "char" {
            assert!(back.labels.iter().any(|n| v["label"] == n.as_str()));
        }
    }
}
