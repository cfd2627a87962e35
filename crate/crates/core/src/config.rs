//! Run configuration: an INI file with one section per pipeline stage.
//! Absent keys keep their defaults; unknown sections and keys are errors, so
//! a typo never silently falls back to a default.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{Ini, ParseOption};

use crate::corpus::{CorpusSpec, GlyphSet, StyleRange};
use crate::dynamic_seg::DynamicSegConfig;
use crate::error::{Error, Result};
use crate::mlp::{MlpConfig, TrainMethod, TrainSpec};
use crate::preprocess::PreprocessConfig;
use crate::static_seg::StaticSegConfig;

/// The synthetic glyph set used when no glyph directory is given: a fixed
/// pool of writers, each writing every class once per session.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSource {
    pub writers: usize,
    pub sessions: usize,
    /// Share of each class (in session order) used for training.
    pub train_fraction: f64,
    pub style: StyleRange,
}

impl Default for GlyphSource {
    fn default() -> Self {
        Self {
            writers: 20,
            sessions: 4,
            train_fraction: 0.5,
            style: StyleRange {
                width: (16, 26),
                height: (18, 28),
                thickness: (2.0, 5.5),
                jitter: 3.0,
            },
        }
    }
}

/// Settings of the `evaluate` command's training benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateConfig {
    /// Glyph side used by the benchmark networks and similarity scoring.
    pub normalized_size: usize,
    pub epochs: Vec<usize>,
    /// Number of training seeds, counted up from the run seed.
    pub seeds: usize,
    pub methods: Vec<TrainMethod>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            normalized_size: 8,
            epochs: vec![1000, 2000, 3000, 4000],
            seeds: 5,
            methods: TrainMethod::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub glyph_dir: Option<PathBuf>,
    pub template_dir: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    pub static_seg: StaticSegConfig,
    pub dynamic: DynamicSegConfig,
    /// `None` sizes hidden layers by the default rule.
    pub hidden_lens: Option<Vec<usize>>,
    /// Training recipe; its seed is replaced by the run seed.
    pub train: TrainSpec,
    pub glyphs: GlyphSource,
    /// Page layout; its seed is replaced by the run seed.
    pub corpus: CorpusSpec,
    pub evaluate: EvaluateConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            preprocess: PreprocessConfig::default(),
            static_seg: StaticSegConfig::default(),
            dynamic: DynamicSegConfig::default(),
            hidden_lens: None,
            train: TrainSpec::default(),
            glyphs: GlyphSource::default(),
            corpus: CorpusSpec {
                pages: 8,
                glyphs_per_line: 5,
                inter_glyph_gap: (0, 2),
                ..CorpusSpec::default()
            },
            evaluate: EvaluateConfig::default(),
            paths: Paths::default(),
        }
    }
}

const SECTIONS: &[&str] = &[
    "run",
    "preprocess",
    "static",
    "dynamic",
    "mlp",
    "train",
    "glyphs",
    "corpus",
    "evaluate",
    "paths",
];

fn parse_value<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        Error::Config(format!(
            "[{section}] {key} = {value:?} is not a valid value"
        ))
    })
}

fn parse_bool(section: &str, key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "[{section}] {key} = {value:?} is not a boolean"
        ))),
    }
}

fn parse_list<T: FromStr>(section: &str, key: &str, value: &str) -> Result<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| parse_value(section, key, v))
        .collect()
}

fn parse_pair<T: FromStr + Copy>(section: &str, key: &str, value: &str) -> Result<(T, T)> {
    match parse_list::<T>(section, key, value)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        [a] => Ok((*a, *a)),
        _ => Err(Error::Config(format!(
            "[{section}] {key} needs one value or a `low,high` pair"
        ))),
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values
        .iter()
        .map(T::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn pair<T: ToString>(p: (T, T)) -> String {
    format!("{},{}", p.0.to_string(), p.1.to_string())
}

fn opt_path(value: &str) -> Option<PathBuf> {
    let v = value.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let opts = ParseOption {
            enabled_escape: false,
            ..ParseOption::default()
        };
        let ini = Ini::load_from_str_opt(text, opts)
            .map_err(|e| Error::Config(format!("config line {}: {}", e.line, e.msg)))?;
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            if !section.is_empty() && !SECTIONS.contains(&section) {
                return Err(Error::Config(format!("unknown section [{section}]")));
            }
            for (key, value) in props.iter() {
                if !seen.insert((section.to_string(), key.to_string())) {
                    return Err(Error::Config(format!("[{section}] {key} is set twice")));
                }
                cfg.set(section, key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let s = section;
        match (section, key) {
            ("run", "seed") => self.seed = parse_value(s, key, v)?,

            ("preprocess", "median_window") => {
                self.preprocess.median_window = parse_value(s, key, v)?
            }
            ("preprocess", "high_boost") => self.preprocess.high_boost = parse_value(s, key, v)?,
            ("preprocess", "normalized_width") => {
                self.preprocess.normalized_width = parse_value(s, key, v)?
            }
            ("preprocess", "normalized_height") => {
                self.preprocess.normalized_height = parse_value(s, key, v)?
            }
            ("preprocess", "deskew_range") => {
                self.preprocess.deskew_range = parse_value(s, key, v)?
            }
            ("preprocess", "deskew_step") => self.preprocess.deskew_step = parse_value(s, key, v)?,

            ("static", "min_gap") => self.static_seg.min_gap = parse_value(s, key, v)?,
            ("static", "modifier_factor") => {
                self.static_seg.modifier_factor = parse_value(s, key, v)?
            }
            ("static", "dilate_for_word_spacing") => {
                self.static_seg.dilate_for_word_spacing = parse_bool(s, key, v)?
            }
            ("static", "remove_headline") => {
                self.static_seg.remove_headline = parse_bool(s, key, v)?
            }

            ("dynamic", "interval_fraction") => {
                self.dynamic.interval_fraction = parse_value(s, key, v)?
            }
            ("dynamic", "confidence_threshold") => {
                self.dynamic.confidence_threshold = parse_value(s, key, v)?
            }
            ("dynamic", "similarity_floor") => {
                self.dynamic.similarity_floor = parse_value(s, key, v)?
            }
            ("dynamic", "max_segments_per_char") => {
                self.dynamic.max_segments_per_char = parse_value(s, key, v)?
            }

            ("mlp", "hidden_lens") => {
                let lens: Vec<usize> = parse_list(s, key, v)?;
                self.hidden_lens = (!lens.is_empty()).then_some(lens);
            }

            ("train", "method") => self.train.method = parse_value(s, key, v)?,
            ("train", "learning_rate") => self.train.learning_rate = parse_value(s, key, v)?,
            ("train", "momentum") => self.train.momentum = parse_value(s, key, v)?,
            ("train", "lr_increase") => self.train.lr_increase = parse_value(s, key, v)?,
            ("train", "lr_decrease") => self.train.lr_decrease = parse_value(s, key, v)?,
            ("train", "err_ratio_cap") => self.train.err_ratio_cap = parse_value(s, key, v)?,
            ("train", "epochs") => self.train.epochs = parse_value(s, key, v)?,

            ("glyphs", "writers") => self.glyphs.writers = parse_value(s, key, v)?,
            ("glyphs", "sessions") => self.glyphs.sessions = parse_value(s, key, v)?,
            ("glyphs", "train_fraction") => self.glyphs.train_fraction = parse_value(s, key, v)?,
            ("glyphs", "cell_width") => self.glyphs.style.width = parse_pair(s, key, v)?,
            ("glyphs", "cell_height") => self.glyphs.style.height = parse_pair(s, key, v)?,
            ("glyphs", "thickness") => self.glyphs.style.thickness = parse_pair(s, key, v)?,
            ("glyphs", "jitter") => self.glyphs.style.jitter = parse_value(s, key, v)?,

            ("corpus", "pages") => self.corpus.pages = parse_value(s, key, v)?,
            ("corpus", "lines_per_page") => self.corpus.lines_per_page = parse_value(s, key, v)?,
            ("corpus", "glyphs_per_line") => self.corpus.glyphs_per_line = parse_value(s, key, v)?,
            ("corpus", "inter_glyph_gap") => self.corpus.inter_glyph_gap = parse_pair(s, key, v)?,
            ("corpus", "inter_word_gap") => self.corpus.inter_word_gap = parse_pair(s, key, v)?,
            ("corpus", "glyphs_per_word") => self.corpus.glyphs_per_word = parse_pair(s, key, v)?,
            ("corpus", "line_gap") => self.corpus.line_gap = parse_pair(s, key, v)?,
            ("corpus", "scale_jitter") => self.corpus.scale_jitter = parse_pair(s, key, v)?,
            ("corpus", "rotation_jitter") => self.corpus.rotation_jitter = parse_pair(s, key, v)?,
            ("corpus", "salt_pepper_rate") => {
                self.corpus.salt_pepper_rate = parse_value(s, key, v)?
            }
            ("corpus", "headline_bar") => self.corpus.headline_bar = parse_bool(s, key, v)?,
            ("corpus", "lower_modifier_rate") => {
                self.corpus.lower_modifier_rate = parse_value(s, key, v)?
            }
            ("corpus", "touching_rate") => self.corpus.touching_rate = parse_value(s, key, v)?,
            ("corpus", "margin") => self.corpus.margin = parse_value(s, key, v)?,
            ("corpus", "page_width") => {
                self.corpus.page_width = if v.trim().is_empty() {
                    None
                } else {
                    Some(parse_value(s, key, v)?)
                }
            }

            ("evaluate", "normalized_size") => {
                self.evaluate.normalized_size = parse_value(s, key, v)?
            }
            ("evaluate", "epochs") => self.evaluate.epochs = parse_list(s, key, v)?,
            ("evaluate", "seeds") => self.evaluate.seeds = parse_value(s, key, v)?,
            ("evaluate", "methods") => self.evaluate.methods = parse_list(s, key, v)?,

            ("paths", "glyph_dir") => self.paths.glyph_dir = opt_path(v),
            ("paths", "template_dir") => self.paths.template_dir = opt_path(v),
            ("paths", "model") => self.paths.model = opt_path(v),
            ("paths", "out_dir") => self.paths.out_dir = opt_path(v),

            ("", _) => {
                return Err(Error::Config(format!(
                    "key {key:?} must sit inside a section"
                )))
            }
            _ => return Err(Error::Config(format!("unknown setting [{section}] {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.preprocess.validate()?;
        self.static_seg.validate()?;
        self.dynamic.validate()?;
        self.train.validate()?;
        self.corpus_spec().validate()?;
        if let Some(h) = &self.hidden_lens {
            MlpConfig {
                input_len: 1,
                hidden_lens: h.clone(),
                output_len: 1,
            }
            .validate()?;
        }
        let g = &self.glyphs;
        if g.writers == 0 || g.sessions == 0 {
            return Err(Error::Config(
                "[glyphs] needs at least one writer and one session".into(),
            ));
        }
        if !(g.train_fraction > 0.0 && g.train_fraction < 1.0) {
            return Err(Error::Config(
                "[glyphs] train_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        g.style.validate()?;
        let e = &self.evaluate;
        if e.normalized_size < 8 {
            return Err(Error::Config(
                "[evaluate] normalized_size must be at least 8".into(),
            ));
        }
        self.benchmark_preprocess().validate()?;
        if e.seeds == 0 || e.methods.is_empty() {
            return Err(Error::Config(
                "[evaluate] needs at least one seed and one method".into(),
            ));
        }
        if e.epochs.is_empty() || e.epochs[0] == 0 || e.epochs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "[evaluate] epochs must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// The corpus layout with the run seed applied.
    pub fn corpus_spec(&self) -> CorpusSpec {
        CorpusSpec {
            seed: self.seed,
            ..self.corpus.clone()
        }
    }

    /// The training recipe with the run seed applied.
    pub fn train_spec(&self) -> TrainSpec {
        TrainSpec {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn mlp_config(&self, input_len: usize, output_len: usize) -> MlpConfig {
        match &self.hidden_lens {
            Some(h) => MlpConfig {
                input_len,
                hidden_lens: h.clone(),
                output_len,
            },
            None => MlpConfig::with_default_hidden(input_len, output_len),
        }
    }

    /// Preprocessing for the evaluation benchmark: the configured stages at
    /// the benchmark's glyph size.
    pub fn benchmark_preprocess(&self) -> PreprocessConfig {
        PreprocessConfig {
            normalized_width: self.evaluate.normalized_size,
            normalized_height: self.evaluate.normalized_size,
            ..self.preprocess.clone()
        }
    }

    /// The glyph set named by `[paths] glyph_dir`, or the synthetic one.
    pub fn glyph_set(&self) -> Result<GlyphSet> {
        match &self.paths.glyph_dir {
            Some(dir) => GlyphSet::load_dir(dir),
            None => GlyphSet::synthetic_sessions(
                self.glyphs.writers,
                self.glyphs.sessions,
                self.seed,
                &self.glyphs.style,
            ),
        }
    }

    /// Renders the configuration as INI text that parses back to `self`.
    pub fn to_ini(&self) -> String {
        let mut o = String::new();
        let p = &self.preprocess;
        let st = &self.static_seg;
        let d = &self.dynamic;
        let t = &self.train;
        let g = &self.glyphs;
        let c = &self.corpus;
        let e = &self.evaluate;
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let _ = writeln!(o, "[run]\nseed = {}\n", self.seed);
        let _ = writeln!(
            o,
            "[preprocess]\nmedian_window = {}\nhigh_boost = {}\nnormalized_width = {}\nnormalized_height = {}\ndeskew_range = {}\ndeskew_step = {}\n",
            p.median_window, p.high_boost, p.normalized_width, p.normalized_height, p.deskew_range, p.deskew_step
        );
        let _ = writeln!(
            o,
            "[static]\nmin_gap = {}\nmodifier_factor = {}\ndilate_for_word_spacing = {}\nremove_headline = {}\n",
            st.min_gap, st.modifier_factor, st.dilate_for_word_spacing, st.remove_headline
        );
        let _ = writeln!(
            o,
            "[dynamic]\ninterval_fraction = {}\nconfidence_threshold = {}\nsimilarity_floor = {}\nmax_segments_per_char = {}\n",
            d.interval_fraction, d.confidence_threshold, d.similarity_floor, d.max_segments_per_char
        );
        let _ = writeln!(
            o,
            "[mlp]\nhidden_lens = {}\n",
            self.hidden_lens.as_deref().map(join).unwrap_or_default()
        );
        let _ = writeln!(
            o,
            "[train]\nmethod = {}\nlearning_rate = {}\nmomentum = {}\nlr_increase = {}\nlr_decrease = {}\nerr_ratio_cap = {}\nepochs = {}\n",
            t.method.name(),
            t.learning_rate,
            t.momentum,
            t.lr_increase,
            t.lr_decrease,
            t.err_ratio_cap,
            t.epochs
        );
        let _ = writeln!(
            o,
            "[glyphs]\nwriters = {}\nsessions = {}\ntrain_fraction = {}\ncell_width = {}\ncell_height = {}\nthickness = {}\njitter = {}\n",
            g.writers,
            g.sessions,
            g.train_fraction,
            pair(g.style.width),
            pair(g.style.height),
            pair(g.style.thickness),
            g.style.jitter
        );
        let _ = writeln!(
            o,
            "[corpus]\npages = {}\nlines_per_page = {}\nglyphs_per_line = {}\ninter_glyph_gap = {}\ninter_word_gap = {}\nglyphs_per_word = {}\nline_gap = {}\nscale_jitter = {}\nrotation_jitter = {}\nsalt_pepper_rate = {}\nheadline_bar = {}\nlower_modifier_rate = {}\ntouching_rate = {}\nmargin = {}\npage_width = {}\n",
            c.pages,
            c.lines_per_page,
            c.glyphs_per_line,
            pair(c.inter_glyph_gap),
            pair(c.inter_word_gap),
            pair(c.glyphs_per_word),
            pair(c.line_gap),
            pair(c.scale_jitter),
            pair(c.rotation_jitter),
            c.salt_pepper_rate,
            c.headline_bar,
            c.lower_modifier_rate,
            c.touching_rate,
            c.margin,
            c.page_width.map(|w| w.to_string()).unwrap_or_default()
        );
        let methods: Vec<&str> = e.methods.iter().map(|m| m.name()).collect();
        let _ = writeln!(
            o,
            "[evaluate]\nnormalized_size = {}\nepochs = {}\nseeds = {}\nmethods = {}\n",
            e.normalized_size,
            join(&e.epochs),
            e.seeds,
            methods.join(",")
        );
        let _ = write!(
            o,
            "[paths]\nglyph_dir = {}\ntemplate_dir = {}\nmodel = {}\nout_dir = {}\n",
            path(&self.paths.glyph_dir),
            path(&self.paths.template_dir),
            path(&self.paths.model),
            path(&self.paths.out_dir)
        );
        o
    }
}
