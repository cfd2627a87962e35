//! Evaluation harness: static and dynamic segmentation quality against
//! generator ground truth, and the trainer benchmark over an epoch grid.

use std::fmt::Write as _;

use crate::config::RunConfig;
use crate::corpus::{generate, GlyphSet, GroundTruth, TruthGlyph};
use crate::dynamic_seg::{segment_page, DynamicSegConfig, Recognizer};
use crate::error::{Error, Result};
use crate::mlp::{accuracy, Example, Mlp, MlpConfig, TrainMethod, TrainSpec, Trainer};
use crate::preprocess::{normalize, PreprocessConfig};
use crate::raster::{crop, BinaryImage, Rect};
use crate::similarity::{similarity, CharacterTemplate, SimilarityMode};
use crate::static_seg::{dissect, StaticSegConfig};

/// Minimum intersection-over-union for a detection to count as a truth box.
pub const MIN_IOU: f64 = 0.3;

/// Runs `f` over `items` on up to `jobs` threads; results keep input order.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|r| r.expect("every index visited"))
        .collect()
}

/// Normalized training inputs for every exemplar of `glyphs`.
pub fn examples(glyphs: &GlyphSet, norm: &PreprocessConfig) -> Result<Vec<Example>> {
    let norm = norm.without_deskew();
    glyphs
        .iter()
        .map(|(label, img)| {
            Ok(Example {
                input: normalize(img, &norm)?.features(),
                label,
            })
        })
        .collect()
}

pub fn templates(glyphs: &GlyphSet, norm: &PreprocessConfig) -> Result<Vec<CharacterTemplate>> {
    let norm = norm.without_deskew();
    glyphs
        .iter()
        .map(|(label, img)| {
            Ok(CharacterTemplate {
                label,
                image: normalize(img, &norm)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountStat {
    pub truth: usize,
    pub detected: usize,
    /// One-to-one matches at IoU ≥ [`MIN_IOU`].
    pub matched: usize,
}

impl CountStat {
    /// `matched / max(truth, detected)` in percent; 100 when both are empty.
    pub fn accuracy(&self) -> f64 {
        let denom = self.truth.max(self.detected);
        if denom == 0 {
            100.0
        } else {
            100.0 * self.matched as f64 / denom as f64
        }
    }

    fn add(&mut self, other: CountStat) {
        self.truth += other.truth;
        self.detected += other.detected;
        self.matched += other.matched;
    }
}

/// Greedy one-to-one matching by descending IoU; ties go to the earlier
/// truth box, then the earlier detection.
pub fn match_boxes(truth: &[Rect], detected: &[Rect]) -> CountStat {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, d) in detected.iter().enumerate() {
            let iou = t.iou(d);
            if iou >= MIN_IOU {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_t = vec![false; truth.len()];
    let mut used_d = vec![false; detected.len()];
    let mut matched = 0;
    for (_, i, j) in pairs {
        if !used_t[i] && !used_d[j] {
            used_t[i] = true;
            used_d[j] = true;
            matched += 1;
        }
    }
    CountStat {
        truth: truth.len(),
        detected: detected.len(),
        matched,
    }
}

/// Mismatch similarity between the detection overlapping `glyph` most and
/// the glyph as placed, both normalized. No overlap scores 0.
pub fn glyph_similarity(
    page: &BinaryImage,
    detected: &[Rect],
    glyph: &TruthGlyph,
    norm: &PreprocessConfig,
) -> Result<f64> {
    let mut best: Option<(usize, &Rect)> = None;
    for d in detected {
        let area = d.intersection_area(&glyph.rect);
        if area > 0 && best.is_none_or(|(a, _)| area > a) {
            best = Some((area, d));
        }
    }
    let Some((_, rect)) = best else {
        return Ok(0.0);
    };
    let Some(ink) = page.ink_bounds_within(rect) else {
        return Ok(0.0);
    };
    let norm = norm.without_deskew();
    let seg = normalize(&crop(page, &ink)?, &norm)?;
    let reference = normalize(&glyph.image, &norm)?;
    Ok(similarity(&seg, &reference, SimilarityMode::Mismatch)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassStat {
    pub samples: usize,
    pub similarity_sum: f64,
}

impl ClassStat {
    pub fn mean(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.similarity_sum / self.samples as f64
        }
    }
}

/// Per-class similarity and box-count agreement for one segmentation method.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationScores {
    pub per_class: Vec<ClassStat>,
    pub count: CountStat,
}

impl SegmentationScores {
    pub fn overall(&self) -> ClassStat {
        self.per_class
            .iter()
            .fold(ClassStat::default(), |acc, c| ClassStat {
                samples: acc.samples + c.samples,
                similarity_sum: acc.similarity_sum + c.similarity_sum,
            })
    }
}

/// Scores detections (one box list per page) against the truth.
pub fn score_detections(
    pages: &[BinaryImage],
    truth: &GroundTruth,
    detections: &[Vec<Rect>],
    classes: usize,
    norm: &PreprocessConfig,
) -> Result<SegmentationScores> {
    if pages.len() != truth.pages.len() || pages.len() != detections.len() {
        return Err(Error::Config(
            "pages, truth and detections must align".into(),
        ));
    }
    let mut per_class = vec![ClassStat::default(); classes];
    let mut count = CountStat::default();
    for ((page, t), det) in pages.iter().zip(&truth.pages).zip(detections) {
        let truth_boxes: Vec<Rect> = t.glyphs().map(|g| g.rect).collect();
        count.add(match_boxes(&truth_boxes, det));
        for g in t.glyphs() {
            let stat = per_class.get_mut(g.label).ok_or_else(|| {
                Error::Config(format!("truth label {} outside {classes} classes", g.label))
            })?;
            stat.samples += 1;
            stat.similarity_sum += glyph_similarity(page, det, g, norm)?;
        }
    }
    Ok(SegmentationScores { per_class, count })
}

pub fn static_detections(
    pages: &[BinaryImage],
    cfg: &StaticSegConfig,
    jobs: usize,
) -> Result<Vec<Vec<Rect>>> {
    parallel_map(pages, jobs, |p| {
        dissect(p, cfg).map(|d| d.characters.into_iter().flatten().collect())
    })
    .into_iter()
    .collect()
}

pub fn dynamic_detections(
    pages: &[BinaryImage],
    recognizer: &Recognizer<'_>,
    static_cfg: &StaticSegConfig,
    cfg: &DynamicSegConfig,
    jobs: usize,
) -> Result<Vec<Vec<Rect>>> {
    parallel_map(pages, jobs, |p| {
        segment_page(p, recognizer, static_cfg, cfg).map(|lines| {
            lines
                .into_iter()
                .flat_map(|l| l.result.characters)
                .map(|c| c.rect)
                .collect()
        })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticReport {
    pub labels: Vec<String>,
    pub scores: SegmentationScores,
}

pub fn evaluate_static(
    pages: &[BinaryImage],
    truth: &GroundTruth,
    labels: &[String],
    static_cfg: &StaticSegConfig,
    norm: &PreprocessConfig,
    jobs: usize,
) -> Result<StaticReport> {
    let det = static_detections(pages, static_cfg, jobs)?;
    Ok(StaticReport {
        labels: labels.to_vec(),
        scores: score_detections(pages, truth, &det, labels.len(), norm)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicReport {
    pub labels: Vec<String>,
    pub static_scores: SegmentationScores,
    /// One column per trained network, keyed by its epoch count.
    pub columns: Vec<(usize, SegmentationScores)>,
}

pub struct DynamicEvalConfig<'a> {
    pub norm: &'a PreprocessConfig,
    pub static_cfg: &'a StaticSegConfig,
    pub dynamic_cfg: &'a DynamicSegConfig,
    pub jobs: usize,
}

pub fn evaluate_dynamic(
    pages: &[BinaryImage],
    truth: &GroundTruth,
    labels: &[String],
    nets: &[(usize, &Mlp)],
    templates: &[CharacterTemplate],
    cfg: &DynamicEvalConfig<'_>,
) -> Result<DynamicReport> {
    let det = static_detections(pages, cfg.static_cfg, cfg.jobs)?;
    let static_scores = score_detections(pages, truth, &det, labels.len(), cfg.norm)?;
    let mut columns = Vec::with_capacity(nets.len());
    for &(epochs, net) in nets {
        let rec = Recognizer::new(net, templates, cfg.norm)?;
        let det = dynamic_detections(pages, &rec, cfg.static_cfg, cfg.dynamic_cfg, cfg.jobs)?;
        columns.push((
            epochs,
            score_detections(pages, truth, &det, labels.len(), cfg.norm)?,
        ));
    }
    Ok(DynamicReport {
        labels: labels.to_vec(),
        static_scores,
        columns,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBenchmark {
    pub methods: Vec<TrainMethod>,
    /// Strictly increasing epoch checkpoints.
    pub epochs_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Learning rate, momentum and adaptation constants; method, epochs and
    /// seed are overridden per run.
    pub spec: TrainSpec,
    pub hidden_lens: Vec<usize>,
    pub jobs: usize,
}

impl TrainingBenchmark {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.seeds.is_empty() || self.epochs_grid.is_empty() {
            return Err(Error::Config(
                "benchmark needs methods, seeds and epochs".into(),
            ));
        }
        if self.epochs_grid[0] == 0 || !self.epochs_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "epochs grid must be positive and strictly increasing".into(),
            ));
        }
        TrainSpec {
            epochs: *self.epochs_grid.last().expect("nonempty"),
            ..self.spec.clone()
        }
        .validate()
    }
}

/// One (method, seed) run sampled at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: TrainMethod,
    pub seed: u64,
    /// Final MSE at each checkpoint.
    pub mse: Vec<f64>,
    /// Held-out classification rate in percent at each checkpoint.
    pub rate: Vec<f64>,
    /// Network snapshots at each checkpoint, kept for the first seed only.
    pub snapshots: Vec<Mlp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub methods: Vec<TrainMethod>,
    pub epochs_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunTrace>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => (values[n / 2 - 1] + values[n / 2]) / 2.0,
    }
}

impl TrainingReport {
    fn cell(&self, method: TrainMethod, pick: impl Fn(&RunTrace) -> f64) -> f64 {
        let mut v: Vec<f64> = self
            .runs
            .iter()
            .filter(|r| r.method == method)
            .map(pick)
            .collect();
        median(&mut v)
    }

    pub fn median_mse(&self, method: TrainMethod, grid_index: usize) -> f64 {
        self.cell(method, |r| r.mse[grid_index])
    }

    pub fn median_rate(&self, method: TrainMethod, grid_index: usize) -> f64 {
        self.cell(method, |r| r.rate[grid_index])
    }

    /// Snapshots of `method`'s first-seed run, paired with their epochs.
    pub fn snapshots(&self, method: TrainMethod) -> Vec<(usize, &Mlp)> {
        self.runs
            .iter()
            .find(|r| r.method == method && !r.snapshots.is_empty())
            .map(|r| self.epochs_grid.iter().copied().zip(&r.snapshots).collect())
            .unwrap_or_default()
    }
}

/// Trains every (method, seed) pair once up to the last grid point,
/// sampling MSE and held-out accuracy at each checkpoint. A run sampled at
/// `e` epochs is identical to a fresh run of `e` epochs.
pub fn evaluate_training(
    train: &[Example],
    held_out: &[Example],
    classes: usize,
    bench: &TrainingBenchmark,
) -> Result<TrainingReport> {
    bench.validate()?;
    if classes < 2 {
        return Err(Error::Config(
            "training benchmark needs at least 2 classes".into(),
        ));
    }
    if train.is_empty() || held_out.is_empty() {
        return Err(Error::Config(
            "benchmark needs training and held-out examples".into(),
        ));
    }
    let input_len = train[0].input.len();
    let config = MlpConfig {
        input_len,
        hidden_lens: bench.hidden_lens.clone(),
        output_len: classes,
    };
    config.validate()?;
    let jobs_list: Vec<(TrainMethod, u64)> = bench
        .methods
        .iter()
        .flat_map(|&m| bench.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let first_seed = bench.seeds[0];
    let runs = parallel_map(
        &jobs_list,
        bench.jobs,
        |&(method, seed)| -> Result<RunTrace> {
            let spec = TrainSpec {
                method,
                seed,
                epochs: *bench.epochs_grid.last().expect("validated"),
                ..bench.spec.clone()
            };
            let net = Mlp::init(config.clone(), seed)?;
            let mut trainer = Trainer::new(net, train, &spec)?;
            let mut trace = RunTrace {
                method,
                seed,
                mse: Vec::new(),
                rate: Vec::new(),
                snapshots: Vec::new(),
            };
            for &e in &bench.epochs_grid {
                trainer.run(e - trainer.epochs_run())?;
                trace.mse.push(trainer.mse());
                trace.rate.push(100.0 * accuracy(trainer.net(), held_out)?);
                if seed == first_seed {
                    trace.snapshots.push(trainer.net().clone());
                }
            }
            Ok(trace)
        },
    );
    Ok(TrainingReport {
        methods: bench.methods.clone(),
        epochs_grid: bench.epochs_grid.clone(),
        seeds: bench.seeds.clone(),
        runs: runs.into_iter().collect::<Result<_>>()?,
    })
}

/// An expected trend that the measured reports fail to show.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrendViolation(pub String);

impl std::fmt::Display for TrendViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Trainer ordering at the checkpoint nearest 2000 epochs and MSE decrease
/// down the grid for every method.
pub fn mse_trends(report: &TrainingReport) -> Vec<TrendViolation> {
    let mut out = Vec::new();
    for &m in &report.methods {
        for i in 1..report.epochs_grid.len() {
            let (a, b) = (report.median_mse(m, i - 1), report.median_mse(m, i));
            if !(b < a) {
                out.push(TrendViolation(format!(
                    "{m} median MSE did not decrease from {} to {} epochs ({a:.6e} -> {b:.6e})",
                    report.epochs_grid[i - 1],
                    report.epochs_grid[i]
                )));
            }
        }
    }
    let at = report
        .epochs_grid
        .iter()
        .enumerate()
        .min_by_key(|(_, &e)| e.abs_diff(2000))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let order = [
        TrainMethod::Gdmalrbp,
        TrainMethod::Gdalbp,
        TrainMethod::Gdmbp,
        TrainMethod::Gdbp,
    ];
    if order.iter().all(|m| report.methods.contains(m)) {
        for w in order.windows(2) {
            let (a, b) = (report.median_mse(w[0], at), report.median_mse(w[1], at));
            if !(a < b) {
                out.push(TrendViolation(format!(
                    "median MSE at {} epochs: {} ({a:.6e}) not below {} ({b:.6e})",
                    report.epochs_grid[at], w[0], w[1]
                )));
            }
        }
    }
    out
}

/// Held-out rate of GDMALRBP improves from first to last checkpoint and
/// never trails GDBP.
pub fn classification_trends(report: &TrainingReport) -> Vec<TrendViolation> {
    let mut out = Vec::new();
    let (best, base) = (TrainMethod::Gdmalrbp, TrainMethod::Gdbp);
    if !report.methods.contains(&best) {
        return out;
    }
    let last = report.epochs_grid.len() - 1;
    if last > 0 {
        let (a, b) = (report.median_rate(best, 0), report.median_rate(best, last));
        if !(b > a) {
            out.push(TrendViolation(format!(
                "{best} held-out rate did not rise from {} to {} epochs ({a:.1}% -> {b:.1}%)",
                report.epochs_grid[0], report.epochs_grid[last]
            )));
        }
    }
    if report.methods.contains(&base) {
        for (i, e) in report.epochs_grid.iter().enumerate() {
            let (a, b) = (report.median_rate(best, i), report.median_rate(base, i));
            if a < b {
                out.push(TrendViolation(format!(
                    "at {e} epochs {best} rate {a:.1}% trails {base} {b:.1}%"
                )));
            }
        }
    }
    out
}

/// The last network column beats static per class and in count accuracy.
pub fn dynamic_trends(report: &DynamicReport) -> Vec<TrendViolation> {
    let mut out = Vec::new();
    let Some((epochs, dynamic)) = report.columns.last() else {
        return out;
    };
    for (i, label) in report.labels.iter().enumerate() {
        let (s, d) = (report.static_scores.per_class[i], dynamic.per_class[i]);
        if s.samples > 0 && !(d.mean() > s.mean()) {
            out.push(TrendViolation(format!(
                "class {label}: dynamic ({epochs} epochs) similarity {:.1}% not above static {:.1}%",
                d.mean(),
                s.mean()
            )));
        }
    }
    let (s, d) = (
        report.static_scores.count.accuracy(),
        dynamic.count.accuracy(),
    );
    if d < s {
        out.push(TrendViolation(format!(
            "dynamic count accuracy {d:.1}% below static {s:.1}%"
        )));
    }
    out
}

fn pct(v: f64) -> String {
    format!("{v:.1}")
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

/// Left-aligned first column, right-aligned rest, two-space separation.
fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, cell) in r.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[0]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn csv(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join(",") + "\n").collect()
}

/// A rendered report: an aligned text table and its CSV twin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub csv: String,
}

fn render(title: &str, header: Vec<String>, body: Vec<Vec<String>>, footer: &str) -> Rendered {
    let mut rows = vec![header];
    rows.extend(body);
    let mut text = format!("{title}\n\n");
    text.push_str(&aligned(&rows));
    text.push_str(footer);
    Rendered {
        text,
        csv: csv(&rows),
    }
}

fn class_rows(labels: &[String], columns: &[&SegmentationScores]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let mut r = vec![label.clone(), columns[0].per_class[i].samples.to_string()];
        r.extend(columns.iter().map(|s| pct(s.per_class[i].mean())));
        rows.push(r);
    }
    let mut all = vec!["all".to_string(), columns[0].overall().samples.to_string()];
    all.extend(columns.iter().map(|s| pct(s.overall().mean())));
    rows.push(all);
    let mut count = vec![
        "count_accuracy".to_string(),
        columns[0].count.truth.to_string(),
    ];
    count.extend(columns.iter().map(|s| pct(s.count.accuracy())));
    rows.push(count);
    rows
}

/// CSV: `label,samples,similarity_pct`; closing rows `all` (overall mean)
/// and `count_accuracy` (samples = truth boxes, value = accuracy %).
pub fn render_static(report: &StaticReport) -> Rendered {
    let header = ["label", "samples", "similarity_pct"]
        .map(String::from)
        .to_vec();
    render(
        "Similarity (%) of static segmentation",
        header,
        class_rows(&report.labels, &[&report.scores]),
        "",
    )
}

/// CSV: `epochs,<method>...` with the median final MSE of each method.
pub fn render_mse(report: &TrainingReport) -> Rendered {
    let mut header = vec!["epochs".to_string()];
    header.extend(report.methods.iter().map(|m| m.name().to_string()));
    let body = (0..report.epochs_grid.len())
        .map(|i| {
            let mut r = vec![report.epochs_grid[i].to_string()];
            r.extend(report.methods.iter().map(|&m| sci(report.median_mse(m, i))));
            r
        })
        .collect();
    let footer = format!("\nMedian over {} seed(s).\n", report.seeds.len());
    render("MSE attained during training", header, body, &footer)
}

/// CSV: `epochs,<method>...` with the median held-out rate in percent.
pub fn render_classification(report: &TrainingReport) -> Rendered {
    let mut header = vec!["epochs".to_string()];
    header.extend(report.methods.iter().map(|m| m.name().to_string()));
    let body = (0..report.epochs_grid.len())
        .map(|i| {
            let mut r = vec![report.epochs_grid[i].to_string()];
            r.extend(
                report
                    .methods
                    .iter()
                    .map(|&m| pct(report.median_rate(m, i))),
            );
            r
        })
        .collect();
    let footer = format!(
        "\nHeld-out classification (%), median over {} seed(s).\n",
        report.seeds.len()
    );
    render("Classification performance (%)", header, body, &footer)
}

/// CSV: `label,samples,static_pct,dynamic_<epochs>_pct...`; closing rows as
/// in [`render_static`].
pub fn render_dynamic(report: &DynamicReport) -> Rendered {
    let mut header = ["label", "samples", "static_pct"]
        .map(String::from)
        .to_vec();
    header.extend(
        report
            .columns
            .iter()
            .map(|(e, _)| format!("dynamic_{e}_pct")),
    );
    let mut cols: Vec<&SegmentationScores> = vec![&report.static_scores];
    cols.extend(report.columns.iter().map(|(_, s)| s));
    render(
        "Similarity (%) of static versus recognition-driven segmentation",
        header,
        class_rows(&report.labels, &cols),
        "",
    )
}

/// Everything `evaluate` reports, in table order.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub static_report: StaticReport,
    pub training: TrainingReport,
    pub dynamic: DynamicReport,
}

impl Evaluation {
    /// `(file stem, rendering)` for each of the four tables.
    pub fn reports(&self) -> Vec<(&'static str, Rendered)> {
        vec![
            ("table1_static", render_static(&self.static_report)),
            ("table2_mse", render_mse(&self.training)),
            (
                "table3_classification",
                render_classification(&self.training),
            ),
            ("table4_dynamic", render_dynamic(&self.dynamic)),
        ]
    }

    pub fn violations(&self) -> Vec<TrendViolation> {
        let mut v = mse_trends(&self.training);
        v.extend(classification_trends(&self.training));
        v.extend(dynamic_trends(&self.dynamic));
        v
    }
}

/// The full benchmark: split the glyph set, train every method on the
/// training part, then segment pages built from that same part with both
/// methods. The recognizer columns use the adaptive-momentum network (or
/// the last listed method) at each checkpoint.
pub fn run_evaluation(cfg: &RunConfig, jobs: usize) -> Result<Evaluation> {
    cfg.validate()?;
    let glyphs = cfg.glyph_set()?;
    let (train, held_out) = glyphs.split(cfg.glyphs.train_fraction)?;
    let norm = cfg.benchmark_preprocess();
    let classes = glyphs.class_count();
    let bench = TrainingBenchmark {
        methods: cfg.evaluate.methods.clone(),
        epochs_grid: cfg.evaluate.epochs.clone(),
        seeds: (0..cfg.evaluate.seeds as u64)
            .map(|i| cfg.seed.wrapping_add(i))
            .collect(),
        spec: cfg.train_spec(),
        hidden_lens: cfg.mlp_config(norm.input_len(), classes).hidden_lens,
        jobs,
    };
    let training = evaluate_training(
        &examples(&train, &norm)?,
        &examples(&held_out, &norm)?,
        classes,
        &bench,
    )?;

    let (pages, truth) = generate(&train, &cfg.corpus_spec())?;
    let static_report = evaluate_static(
        &pages,
        &truth,
        glyphs.labels(),
        &cfg.static_seg,
        &norm,
        jobs,
    )?;
    let recognizer_method = if bench.methods.contains(&TrainMethod::Gdmalrbp) {
        TrainMethod::Gdmalrbp
    } else {
        *bench.methods.last().expect("validated")
    };
    let dyn_cfg = DynamicEvalConfig {
        norm: &norm,
        static_cfg: &cfg.static_seg,
        dynamic_cfg: &cfg.dynamic,
        jobs,
    };
    let dynamic = evaluate_dynamic(
        &pages,
        &truth,
        glyphs.labels(),
        &training.snapshots(recognizer_method),
        &templates(&train, &norm)?,
        &dyn_cfg,
    )?;
    Ok(Evaluation {
        static_report,
        training,
        dynamic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate, CorpusSpec};

    #[test]
    fn matching_is_one_to_one() {
        let t = vec![Rect::new(0, 0, 10, 10), Rect::new(0, 12, 10, 22)];
        let merged = vec![Rect::new(0, 0, 10, 22)];
        let s = match_boxes(&t, &merged);
        assert_eq!((s.truth, s.detected, s.matched), (2, 1, 1));
        assert_eq!(s.accuracy(), 50.0);
        let exact = match_boxes(&t, &t);
        assert_eq!(exact.accuracy(), 100.0);
        let extra = match_boxes(&t, &[t[0], t[1], Rect::new(20, 0, 30, 10)]);
        assert!((extra.accuracy() - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(match_boxes(&[], &[]).accuracy(), 100.0);
    }

    #[test]
    fn static_on_clean_and_touching_corpora() {
        let glyphs = GlyphSet::synthetic(3, 2).unwrap();
        let norm = PreprocessConfig {
            normalized_width: 16,
            normalized_height: 16,
            ..Default::default()
        };
        let (pages, truth) = generate(&glyphs, &CorpusSpec::clean(4)).unwrap();
        let r = evaluate_static(
            &pages,
            &truth,
            glyphs.labels(),
            &StaticSegConfig::default(),
            &norm,
            1,
        )
        .unwrap();
        assert_eq!(r.scores.count.accuracy(), 100.0);
        assert_eq!(r.scores.overall().mean(), 100.0);

        let spec = CorpusSpec {
            touching_rate: 0.5,
            ..CorpusSpec::clean(4)
        };
        let (pages, truth) = generate(&glyphs, &spec).unwrap();
        let r2 = evaluate_static(
            &pages,
            &truth,
            glyphs.labels(),
            &StaticSegConfig::default(),
            &norm,
            2,
        )
        .unwrap();
        assert!(r2.scores.count.accuracy() < 100.0);
        assert!(r2.scores.overall().mean() < 100.0);

        let text = render_static(&r);
        assert!(text.csv.starts_with("label,samples,similarity_pct\nring,"));
        assert!(text.csv.ends_with("count_accuracy,96,100.0\n"));
    }

    #[test]
    fn evaluation_does_not_mutate_inputs() {
        let glyphs = GlyphSet::synthetic(2, 2).unwrap();
        let (pages, truth) = generate(&glyphs, &CorpusSpec::default()).unwrap();
        let (p0, t0) = (pages.clone(), truth.clone());
        let norm = PreprocessConfig {
            normalized_width: 16,
            normalized_height: 16,
            ..Default::default()
        };
        evaluate_static(
            &pages,
            &truth,
            glyphs.labels(),
            &StaticSegConfig::default(),
            &norm,
            1,
        )
        .unwrap();
        assert_eq!((pages, truth), (p0, t0));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..37).collect();
        let a = parallel_map(&items, 1, |x| x * x);
        let b = parallel_map(&items, 4, |x| x * x);
        assert_eq!(a, b);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn training_grid_shape_and_rendering() {
        let glyphs = GlyphSet::synthetic(2, 5).unwrap();
        let norm = PreprocessConfig {
            normalized_width: 8,
            normalized_height: 8,
            ..Default::default()
        };
        let (train, held) = glyphs.split(0.5).unwrap();
        let bench = TrainingBenchmark {
            methods: TrainMethod::ALL.to_vec(),
            epochs_grid: vec![5, 10, 15, 20],
            seeds: vec![0, 1],
            spec: TrainSpec::default(),
            hidden_lens: vec![12],
            jobs: 2,
        };
        let report = evaluate_training(
            &examples(&train, &norm).unwrap(),
            &examples(&held, &norm).unwrap(),
            glyphs.class_count(),
            &bench,
        )
        .unwrap();
        assert_eq!(report.runs.len(), 8);
        let mse = render_mse(&report);
        let lines: Vec<&str> = mse.csv.lines().collect();
        assert_eq!(lines[0], "epochs,GDBP,GDMBP,GDALBP,GDMALRBP");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("5,"));
        assert_eq!(render_classification(&report).csv.lines().count(), 5);
        assert_eq!(report.snapshots(TrainMethod::Gdmalrbp).len(), 4);

        let bad = TrainingBenchmark {
            epochs_grid: vec![10, 5],
            ..bench
        };
        assert!(evaluate_training(&examples(&train, &norm).unwrap(), &[], 10, &bad).is_err());
    }
}
