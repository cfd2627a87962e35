use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glyphseg::config::RunConfig;
use glyphseg::corpus::{generate, GlyphSet};
use glyphseg::dynamic_seg::{segment_page, Recognizer};
use glyphseg::error::Error;
use glyphseg::eval::{run_evaluation, templates};
use glyphseg::manifest::{char_file_name, dynamic_manifest, overlay, static_manifest};
use glyphseg::mlp::{read_model, train, write_model, Example, Mlp, Model};
use glyphseg::pnm::{self, PnmImage};
use glyphseg::preprocess::{binarize, denoise, enhance, estimate_skew, normalize, rotate};
use glyphseg::raster::{crop, BinaryImage, GrayImage, Rect};
use glyphseg::similarity::{load_templates, CharacterTemplate};
use glyphseg::static_seg::dissect;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_TRENDS: u8 = 3;

/// Projection-based and recognition-driven segmentation of handwritten text.
#[derive(Parser, Debug)]
#[command(name = "glyphseg", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// INI run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run seed; overrides the config file.
    #[arg(long, global = true, env = "GLYPHSEG_SEED", value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Exit with status 3 when a report misses an expected trend.
    #[arg(long, global = true)]
    assert_trends: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the denoised, enhanced, binarized, deskewed and normalized stages of an image.
    Preprocess { input: PathBuf },
    /// Train a recognizer on a glyph directory (or the synthetic set).
    Train {
        /// Glyph set laid out as `<label>/<n>.pbm`.
        #[arg(long, value_name = "DIR")]
        glyphs: Option<PathBuf>,
        /// Model file to write (default: `<out>/model.txt`).
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Dissect a page by projection profiles.
    SegmentStatic { page: PathBuf },
    /// Segment a page by recognition over fixed-interval cuts.
    SegmentDynamic {
        page: PathBuf,
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
        /// Templates named `<label>_<writer>_<n>.pbm`.
        #[arg(long, value_name = "DIR")]
        templates: Option<PathBuf>,
        /// Glyph set whose exemplars serve as templates.
        #[arg(long, value_name = "DIR")]
        glyphs: Option<PathBuf>,
    },
    /// Generate synthetic pages with ground truth.
    GenerateCorpus,
    /// Run the full benchmark and write the four report tables.
    Evaluate,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Trends(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    jobs: usize,
    assert_trends: bool,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, Failure> {
        let mut cfg = match &common.config {
            // An unreadable config file is a configuration problem, not bad data.
            Some(p) => RunConfig::load(p).map_err(|e| match e {
                Error::Io { .. } => Failure::Usage(e.to_string()),
                other => Failure::Lib(other),
            })?,
            None => RunConfig::default(),
        };
        if let Some(seed) = common.seed {
            cfg.seed = seed;
        }
        if common.jobs == Some(0) {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        let jobs = common
            .jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let out = common
            .out
            .clone()
            .or_else(|| cfg.paths.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self {
            cfg,
            out,
            jobs,
            assert_trends: common.assert_trends,
        })
    }

    fn out_path(&self, name: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out).map_err(|e| Error::Io {
            path: self.out.clone(),
            source: e,
        })?;
        Ok(self.out.join(name))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let path = self.out_path(name)?;
        std::fs::write(&path, text).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        Ok(path)
    }
}

fn read_gray(path: &Path) -> Result<GrayImage, Error> {
    Ok(match pnm::read_pnm(path)? {
        PnmImage::Gray(g) => g,
        PnmImage::Binary(b) => GrayImage::from_binary(&b),
    })
}

/// PBM pages are used as they are; gray pages go through denoise, enhance
/// and binarization first.
fn read_page(path: &Path, cfg: &RunConfig) -> Result<BinaryImage, Error> {
    Ok(match pnm::read_pnm(path)? {
        PnmImage::Binary(b) => b,
        PnmImage::Gray(g) => binarize(&enhance(
            &denoise(&g, cfg.preprocess.median_window)?,
            cfg.preprocess.high_boost,
        )),
    })
}

fn cmd_preprocess(ctx: &Ctx, input: &Path) -> CmdResult {
    let p = &ctx.cfg.preprocess;
    let gray = read_gray(input)?;
    let denoised = denoise(&gray, p.median_window)?;
    let enhanced = enhance(&denoised, p.high_boost);
    let binary = binarize(&enhanced);
    let deskewed = if p.deskew_range > 0.0 {
        rotate(
            &binary,
            estimate_skew(&binary, p.deskew_range, p.deskew_step),
        )
    } else {
        binary.clone()
    };
    let normalized = normalize(&binary, p)?;
    pnm::write_pgm(ctx.out_path("1_denoised.pgm")?, &denoised)?;
    pnm::write_pgm(ctx.out_path("2_enhanced.pgm")?, &enhanced)?;
    pnm::write_pbm(ctx.out_path("3_binarized.pbm")?, &binary)?;
    pnm::write_pbm(ctx.out_path("4_deskewed.pbm")?, &deskewed)?;
    pnm::write_pbm(ctx.out_path("5_normalized.pbm")?, &normalized)?;
    println!("wrote 5 stages to {}", ctx.out.display());
    Ok(())
}

fn glyph_set(ctx: &Ctx, dir: Option<&Path>) -> Result<GlyphSet, Error> {
    match dir.or(ctx.cfg.paths.glyph_dir.as_deref()) {
        Some(d) => GlyphSet::load_dir(d),
        None => ctx.cfg.glyph_set(),
    }
}

fn cmd_train(ctx: &Ctx, glyphs: Option<&Path>, model: Option<&Path>) -> CmdResult {
    let set = glyph_set(ctx, glyphs)?;
    let norm = &ctx.cfg.preprocess;
    let data: Vec<Example> = glyphseg::eval::examples(&set, norm)?;
    let net = Mlp::init(
        ctx.cfg.mlp_config(norm.input_len(), set.class_count()),
        ctx.cfg.seed,
    )?;
    let (net, report) = train(&net, &data, &ctx.cfg.train_spec())?;
    let path = match model.or(ctx.cfg.paths.model.as_deref()) {
        Some(p) => p.to_path_buf(),
        None => ctx.out_path("model.txt")?,
    };
    write_model(
        &path,
        &Model {
            net,
            labels: set.labels().to_vec(),
        },
    )?;
    let mut csv = String::from("epoch,mse\n");
    for (i, m) in report.mse_per_epoch.iter().enumerate() {
        csv.push_str(&format!("{},{m:.9e}\n", i + 1));
    }
    ctx.write_text("train_report.csv", &csv)?;
    println!(
        "trained {} epochs on {} exemplars, final MSE {:.6e}; model at {}",
        report.epochs_run,
        data.len(),
        report.final_mse,
        path.display()
    );
    Ok(())
}

fn write_crops(ctx: &Ctx, dir: &str, page: &BinaryImage, lines: &[Vec<Rect>]) -> CmdResult {
    for (i, boxes) in lines.iter().enumerate() {
        for (j, r) in boxes.iter().enumerate() {
            pnm::write_pbm(
                ctx.out_path(&format!("{dir}/{}", char_file_name(i, j)))?,
                &crop(page, r)?,
            )?;
        }
    }
    Ok(())
}

fn cmd_segment_static(ctx: &Ctx, page_path: &Path) -> CmdResult {
    let page = read_page(page_path, &ctx.cfg)?;
    let d = dissect(&page, &ctx.cfg.static_seg)?;
    std::fs::create_dir_all(ctx.out.join("static_chars")).map_err(|e| Error::Io {
        path: ctx.out.join("static_chars"),
        source: e,
    })?;
    write_crops(ctx, "static_chars", &page, &d.characters)?;
    ctx.write_text("manifest_static.jsonl", &static_manifest(&d))?;
    let boxes: Vec<Rect> = d.characters.iter().flatten().copied().collect();
    pnm::write_pgm(ctx.out_path("overlay_static.pgm")?, &overlay(&page, &boxes))?;
    println!(
        "{} line(s), {} character box(es)",
        d.lines.len(),
        boxes.len()
    );
    Ok(())
}

fn cmd_segment_dynamic(
    ctx: &Ctx,
    page_path: &Path,
    model: Option<&Path>,
    template_dir: Option<&Path>,
    glyphs: Option<&Path>,
) -> CmdResult {
    let model_path = model.or(ctx.cfg.paths.model.as_deref()).ok_or_else(|| {
        Failure::Usage("segment-dynamic needs --model PATH (or [paths] model)".into())
    })?;
    let model = read_model(model_path)?;
    let norm = &ctx.cfg.preprocess;
    let tpl: Vec<CharacterTemplate> = match template_dir.or(ctx.cfg.paths.template_dir.as_deref()) {
        Some(dir) => load_templates(dir, &model.labels, norm)?,
        None => {
            let set = glyph_set(ctx, glyphs)?;
            if set.labels() != model.labels.as_slice() {
                return Err(Error::Config(
                    "glyph set classes differ from the model's labels".into(),
                )
                .into());
            }
            templates(&set, norm)?
        }
    };
    let rec = Recognizer::new(&model.net, &tpl, norm)?;
    let page = read_page(page_path, &ctx.cfg)?;
    let lines = segment_page(&page, &rec, &ctx.cfg.static_seg, &ctx.cfg.dynamic)?;
    let boxes: Vec<Vec<Rect>> = lines
        .iter()
        .map(|l| l.result.characters.iter().map(|c| c.rect).collect())
        .collect();
    std::fs::create_dir_all(ctx.out.join("dynamic_chars")).map_err(|e| Error::Io {
        path: ctx.out.join("dynamic_chars"),
        source: e,
    })?;
    write_crops(ctx, "dynamic_chars", &page, &boxes)?;
    ctx.write_text(
        "manifest_dynamic.jsonl",
        &dynamic_manifest(&lines, &model.labels),
    )?;
    let flat: Vec<Rect> = boxes.iter().flatten().copied().collect();
    pnm::write_pgm(ctx.out_path("overlay_dynamic.pgm")?, &overlay(&page, &flat))?;
    println!("{} line(s), {} character(s)", lines.len(), flat.len());
    for (i, l) in lines.iter().enumerate() {
        if let Some((a, b)) = l.result.residue {
            println!("line {i}: unrecognized residue in columns {a}..{b}");
        }
    }
    Ok(())
}

fn cmd_generate_corpus(ctx: &Ctx) -> CmdResult {
    let set = ctx.cfg.glyph_set()?;
    let (train_part, _) = set.split(ctx.cfg.glyphs.train_fraction)?;
    let (pages, truth) = generate(&train_part, &ctx.cfg.corpus_spec())?;
    for (i, p) in pages.iter().enumerate() {
        pnm::write_pbm(ctx.out_path(&format!("page_{i:03}.pbm"))?, p)?;
    }
    let json = serde_json::to_string_pretty(&truth).expect("truth serializes");
    ctx.write_text("truth.json", &(json + "\n"))?;
    train_part.save_dir(ctx.out.join("glyphs"))?;
    println!(
        "wrote {} page(s) and truth to {}",
        pages.len(),
        ctx.out.display()
    );
    Ok(())
}

fn cmd_evaluate(ctx: &Ctx) -> CmdResult {
    let ev = run_evaluation(&ctx.cfg, ctx.jobs)?;
    for (stem, r) in ev.reports() {
        ctx.write_text(&format!("{stem}.csv"), &r.csv)?;
        ctx.write_text(&format!("{stem}.txt"), &r.text)?;
        println!("{}", r.text);
    }
    let violations = ev.violations();
    for v in &violations {
        eprintln!("trend not shown: {v}");
    }
    if ctx.assert_trends && !violations.is_empty() {
        return Err(Failure::Trends(
            violations.into_iter().map(|v| v.0).collect(),
        ));
    }
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    let ctx = Ctx::new(&cli.common)?;
    match &cli.command {
        Command::Preprocess { input } => cmd_preprocess(&ctx, input),
        Command::Train { glyphs, model } => cmd_train(&ctx, glyphs.as_deref(), model.as_deref()),
        Command::SegmentStatic { page } => cmd_segment_static(&ctx, page),
        Command::SegmentDynamic {
            page,
            model,
            templates,
            glyphs,
        } => cmd_segment_dynamic(
            &ctx,
            page,
            model.as_deref(),
            templates.as_deref(),
            glyphs.as_deref(),
        ),
        Command::GenerateCorpus => cmd_generate_corpus(&ctx),
        Command::Evaluate => cmd_evaluate(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            })
        }
        Err(Failure::Trends(v)) => {
            eprintln!("{} trend assertion(s) failed", v.len());
            ExitCode::from(EXIT_TRENDS)
        }
    }
}
