//! End-to-end page transcription and corpus runs.
//!
//! Per page: enhance, deskew, pick the cardinal rotation whose OCR output
//! scores best against the dictionary, spell check every word, send failing
//! words to handwriting recognition, then nominate one word per position.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc_model::{OptionsList, PageRecord, Transcription, WordBox, UNK};
use crate::embeddings::{EmbeddingBackend, EmbeddingError, EmbeddingModel};
use crate::hocr::HocrPage;
use crate::imaging::{self, ImageError, RasterImage, SkewEstimate};
use crate::lexicon::{dictionary_score, CheckerConfig, Dictionary, LexiconError, SpellChain};
use crate::metrics::{build_report, EvaluatedPair, EvaluationReport};
use crate::nomination::{resolve_document, NominationError, Strategy};
use crate::recognizers::{self, PageRecognizer, ProcessLimiter, RecognizerError, RecognizerSpec, WordRecognizer};

pub const CARDINAL_ANGLES: [u32; 4] = [0, 90, 180, 270];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
    #[error("every rotation failed to recognize: {0}")]
    Rotation(String),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Nomination(#[from] NominationError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageToggles {
    pub enhance: bool,
    pub deskew: bool,
    pub rotate_select: bool,
}

impl Default for StageToggles {
    fn default() -> Self {
        Self { enhance: true, deskew: true, rotate_select: true }
    }
}

fn default_pad() -> u32 {
    imaging::DEFAULT_PAD_PIXELS
}
fn default_range() -> f64 {
    imaging::DEFAULT_SKEW_RANGE
}
fn default_step() -> f64 {
    imaging::DEFAULT_SKEW_STEP
}
fn default_rotations() -> Vec<u32> {
    CARDINAL_ANGLES.to_vec()
}
fn default_backend() -> EmbeddingBackend {
    EmbeddingBackend::Hash
}
fn default_dim() -> usize {
    64
}
fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
fn default_timeout() -> f64 {
    recognizers::DEFAULT_TIMEOUT.as_secs_f64()
}
fn default_max_edit() -> usize {
    crate::lexicon::DEFAULT_MAX_EDIT
}
fn yes() -> bool {
    true
}

/// Pipeline settings, read from JSON. Relative paths resolve against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub machine_printed: RecognizerSpec,
    pub handwritten: RecognizerSpec,
    /// Spell-check chain, one dictionary per checker, in order.
    #[serde(default)]
    pub dictionary_paths: Vec<String>,
    #[serde(default)]
    pub frequency_path: Option<String>,
    #[serde(default)]
    pub embedding_model_path: Option<String>,
    #[serde(default = "default_backend")]
    pub embedding_backend: EmbeddingBackend,
    /// Dimension of the hash backend.
    #[serde(default = "default_dim")]
    pub embedding_dim: usize,
    #[serde(default = "default_pad")]
    pub pad_pixels: u32,
    #[serde(default = "default_range")]
    pub deskew_range: f64,
    #[serde(default = "default_step")]
    pub deskew_step: f64,
    #[serde(default = "default_rotations")]
    pub rotation_candidates: Vec<u32>,
    #[serde(default)]
    pub nomination: Strategy,
    #[serde(default)]
    pub enhancement_command: Option<Vec<String>>,
    #[serde(default)]
    pub stages: StageToggles,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    #[serde(default = "default_timeout")]
    pub external_timeout_secs: f64,
    #[serde(default = "default_max_edit")]
    pub max_edit: usize,
    #[serde(default = "yes")]
    pub pass_digit_tokens: bool,
}

impl PipelineConfig {
    pub fn new(machine_printed: RecognizerSpec, handwritten: RecognizerSpec) -> Self {
        Self {
            machine_printed,
            handwritten,
            dictionary_paths: Vec::new(),
            frequency_path: None,
            embedding_model_path: None,
            embedding_backend: default_backend(),
            embedding_dim: default_dim(),
            pad_pixels: default_pad(),
            deskew_range: default_range(),
            deskew_step: default_step(),
            rotation_candidates: default_rotations(),
            nomination: Strategy::Rule,
            enhancement_command: None,
            stages: StageToggles::default(),
            parallelism: default_parallelism(),
            external_timeout_secs: default_timeout(),
            max_edit: default_max_edit(),
            pass_digit_tokens: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut String| {
            if Path::new(p).is_relative() {
                *p = base.join(&*p).to_string_lossy().into_owned();
            }
        };
        self.dictionary_paths.iter_mut().for_each(fix);
        self.frequency_path.iter_mut().for_each(fix);
        self.embedding_model_path.iter_mut().for_each(fix);
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.rotation_candidates.is_empty() {
            return bad("rotation_candidates is empty".into());
        }
        if let Some(a) = self.rotation_candidates.iter().find(|a| !CARDINAL_ANGLES.contains(a)) {
            return bad(format!("rotation candidate {a} not in {{0,90,180,270}}"));
        }
        if !(self.deskew_step > 0.0 && self.deskew_step <= self.deskew_range && self.deskew_range <= 45.0) {
            return bad(format!("deskew range {} / step {} invalid", self.deskew_range, self.deskew_step));
        }
        if !(1..=2).contains(&self.max_edit) {
            return bad(format!("max_edit {} not in 1..=2", self.max_edit));
        }
        if self.embedding_backend == EmbeddingBackend::File && self.embedding_model_path.is_none() {
            return bad("file embedding backend needs embedding_model_path".into());
        }
        if self.external_timeout_secs.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return bad("external_timeout_secs must be positive".into());
        }
        self.machine_printed.validate()?;
        self.handwritten.validate()?;
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.external_timeout_secs)
    }
}

/// Result of cardinal rotation selection.
#[derive(Debug, Clone)]
pub struct RotationChoice {
    pub angle: u32,
    pub page: HocrPage,
    pub image: RasterImage,
    /// Dictionary score per attempted angle; `None` where recognition failed.
    pub scores: Vec<(u32, Option<f64>)>,
}

/// A processed page plus diagnostics that are not part of the checkpoint.
#[derive(Debug, Clone)]
pub struct PageOutcome {
    pub record: PageRecord,
    pub rotation: u32,
    pub skew: Option<SkewEstimate>,
    pub handwriting_calls: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PageFailure {
    pub source_id: String,
    pub error: String,
}

/// One page's record and whether it has no words.
type PageResult = Result<(PageRecord, bool), PipelineError>;

#[derive(Debug, Clone, Default)]
pub struct CorpusOutcome {
    pub records: Vec<PageRecord>,
    pub failures: Vec<PageFailure>,
    /// Pages where OCR found no words.
    pub flagged: Vec<String>,
    pub report: Option<EvaluationReport>,
}

pub struct Pipeline {
    config: PipelineConfig,
    page_recognizer: Arc<dyn PageRecognizer>,
    word_recognizer: Arc<dyn WordRecognizer>,
    spell: SpellChain,
    model: EmbeddingModel,
}

impl Pipeline {
    /// Builds recognizers, dictionaries and the embedding model from `config`.
    pub fn from_config(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let limiter = ProcessLimiter::new(config.parallelism);
        let page = recognizers::page_recognizer(&config.machine_printed, config.timeout(), Arc::clone(&limiter))?;
        let word = recognizers::word_recognizer(&config.handwritten, config.timeout(), limiter)?;
        if config.dictionary_paths.is_empty() {
            return Err(PipelineError::Config("dictionary_paths is empty".into()));
        }
        let mut checkers = Vec::new();
        for (i, path) in config.dictionary_paths.iter().enumerate() {
            let mut dict = Dictionary::load(path)?;
            if let Some(freq) = &config.frequency_path {
                dict.load_frequencies(freq)?;
            }
            checkers.push(CheckerConfig::new(format!("dict{i}"), Arc::new(dict), config.max_edit)?);
        }
        let spell = SpellChain::new(checkers)?.with_digit_bypass(config.pass_digit_tokens);
        let model = match (&config.embedding_model_path, config.embedding_backend) {
            (Some(path), EmbeddingBackend::File) => EmbeddingModel::load(path)?,
            _ => EmbeddingModel::hashed(config.embedding_dim)?,
        };
        Ok(Self::new(config, page, word, spell, model))
    }

    pub fn new(
        config: PipelineConfig,
        page_recognizer: Arc<dyn PageRecognizer>,
        word_recognizer: Arc<dyn WordRecognizer>,
        spell: SpellChain,
        model: EmbeddingModel,
    ) -> Self {
        Self { config, page_recognizer, word_recognizer, spell, model }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn model(&self) -> &EmbeddingModel {
        &self.model
    }

    /// Enhancement and deskew, as enabled.
    pub fn preprocess(&self, img: &RasterImage) -> Result<(RasterImage, Option<SkewEstimate>, Vec<String>), PipelineError> {
        let mut warnings = Vec::new();
        let mut img = if !self.config.stages.enhance {
            img.clone()
        } else if let Some(argv) = &self.config.enhancement_command {
            imaging::enhance_external(img, argv, self.config.timeout()).unwrap_or_else(|e| {
                warnings.push(format!("{e}; using built-in enhancement"));
                imaging::enhance(img)
            })
        } else {
            imaging::enhance(img)
        };
        let mut skew = None;
        if self.config.stages.deskew {
            let est = imaging::estimate_skew(&img, self.config.deskew_range, self.config.deskew_step)?;
            if est.angle_degrees != 0.0 {
                img = imaging::rotate(&img, est.angle_degrees);
            }
            skew = Some(est);
        }
        Ok((img, skew, warnings))
    }

    /// Recognizes each candidate rotation and keeps the one whose words score
    /// best against the primary dictionary; ties keep the smaller angle.
    pub fn select_rotation(&self, img: &RasterImage) -> Result<RotationChoice, PipelineError> {
        let mut angles = self.config.rotation_candidates.clone();
        angles.sort_unstable();
        angles.dedup();
        let mut best: Option<(f64, u32, HocrPage, RasterImage)> = None;
        let mut scores = Vec::new();
        let mut errors = Vec::new();
        for angle in angles {
            let rotated = imaging::rotate(img, angle as f64);
            match self.page_recognizer.recognize_page(&rotated) {
                Ok(page) => {
                    let score = dictionary_score(&page.texts(), self.spell.primary_dictionary());
                    scores.push((angle, Some(score)));
                    if best.as_ref().is_none_or(|b| score > b.0) {
                        best = Some((score, angle, page, rotated));
                    }
                }
                Err(e) => {
                    scores.push((angle, None));
                    errors.push(format!("{angle}°: {e}"));
                }
            }
        }
        let (_, angle, page, image) = best.ok_or_else(|| PipelineError::Rotation(errors.join("; ")))?;
        Ok(RotationChoice { angle, page, image, scores })
    }

    fn handwriting_options(&self, img: &RasterImage, word: &WordBox, b: String) -> (OptionsList, Option<String>) {
        let failed = |why: String| (OptionsList::full(word.text.clone(), b.clone(), UNK, UNK), Some(why));
        let Some(bbox) = imaging::clamp_box(img, &word.bbox) else {
            return failed(format!("word {} at {:?} lies outside the page", word.key(), word.bbox));
        };
        let crop = match imaging::crop_word(img, &bbox, self.config.pad_pixels) {
            Ok(c) => c,
            Err(e) => return failed(format!("word {}: {e}", word.key())),
        };
        match self.word_recognizer.recognize_word(&crop) {
            Ok(out) if !out.text.is_empty() => {
                let d = self.spell.check(&out.text).corrected;
                (OptionsList::full(word.text.clone(), b, out.text, d), None)
            }
            Ok(_) => failed(format!("word {}: empty handwriting output", word.key())),
            Err(e) => failed(format!("word {}: {e}", word.key())),
        }
    }

    /// Runs the full flow on an already loaded image.
    pub fn transcribe_image(&self, source_id: &str, image_path: &str, img: &RasterImage) -> Result<PageOutcome, PipelineError> {
        let (img, skew, mut warnings) = self.preprocess(img)?;
        let (rotation, page, img) = if self.config.stages.rotate_select {
            let choice = self.select_rotation(&img)?;
            (choice.angle, choice.page, choice.image)
        } else {
            let page = self.page_recognizer.recognize_page(&img)?;
            (0, page, img)
        };
        let mut words = page.words;
        words.sort_by_key(WordBox::key);
        if words.is_empty() {
            warnings.push("OCR found no words on the page".into());
        }

        enum Gate {
            Passed(OptionsList),
            Handwriting(String),
        }
        let gated: Vec<Gate> = words
            .iter()
            .map(|w| {
                let b = self.spell.check(&w.text);
                if b.passed {
                    Gate::Passed(OptionsList::single(w.text.clone()))
                } else {
                    Gate::Handwriting(b.corrected)
                }
            })
            .collect();
        let handwriting_calls = gated.iter().filter(|g| matches!(g, Gate::Handwriting(_))).count();
        let resolved: Vec<(OptionsList, Option<String>)> = gated
            .into_par_iter()
            .zip(words.par_iter())
            .map(|(gate, word)| match gate {
                Gate::Passed(o) => (o, None),
                Gate::Handwriting(b) => self.handwriting_options(&img, word, b),
            })
            .collect();

        let mut options = BTreeMap::new();
        let mut lines: Vec<Vec<OptionsList>> = Vec::new();
        let mut current_line = None;
        for (word, (opts, warning)) in words.iter().zip(resolved) {
            warnings.extend(warning);
            if current_line != Some(word.line_index) {
                lines.push(Vec::new());
                current_line = Some(word.line_index);
            }
            lines.last_mut().expect("pushed above").push(opts.clone());
            options.insert(word.key(), opts);
        }
        let final_transcription = resolve_document(source_id, &lines, self.config.nomination, Some(&self.model))?;
        let record = PageRecord {
            source_id: source_id.to_string(),
            image_path: image_path.to_string(),
            word_boxes: words,
            options,
            final_transcription: Some(final_transcription),
        };
        Ok(PageOutcome { record, rotation, skew, handwriting_calls, warnings })
    }

    pub fn transcribe_page(&self, path: impl AsRef<Path>) -> Result<PageOutcome, PipelineError> {
        let path = path.as_ref();
        let img = imaging::load_image(path)?;
        self.transcribe_image(&source_id_of(path), &path.display().to_string(), &img)
    }

    /// Transcribes every PGM/PNG page in `input_dir` into `out_dir`
    /// (`<id>.txt` plus `<id>.json` checkpoint), resuming from existing
    /// checkpoints. With `labels_dir`, also writes `report.json` and
    /// `report.txt`.
    pub fn run_corpus(&self, input_dir: &Path, labels_dir: Option<&Path>, out_dir: &Path) -> Result<CorpusOutcome, PipelineError> {
        std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        let images = list_files(input_dir, &["pgm", "png"])?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.parallelism.max(1))
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let results: Vec<(String, PageResult)> = pool.install(|| {
            images
                .par_iter()
                .map(|path| {
                    let id = source_id_of(path);
                    (id.clone(), self.process_one(&id, path, out_dir))
                })
                .collect()
        });

        let mut outcome = CorpusOutcome::default();
        for (id, result) in results {
            match result {
                Ok((record, flagged)) => {
                    if flagged {
                        outcome.flagged.push(id);
                    }
                    outcome.records.push(record);
                }
                Err(e) => {
                    log::warn!("page {id} failed: {e}");
                    outcome.failures.push(PageFailure { source_id: id, error: e.to_string() });
                }
            }
        }
        if let Some(labels) = labels_dir {
            let mut pairs = Vec::new();
            for record in &outcome.records {
                let label_path = labels.join(format!("{}.txt", record.source_id));
                if !label_path.exists() {
                    continue;
                }
                let text = std::fs::read_to_string(&label_path).map_err(io_err(&label_path))?;
                pairs.push(EvaluatedPair {
                    source_id: record.source_id.clone(),
                    prediction: record.final_transcription.clone().unwrap_or_default(),
                    target: Transcription::from_text(&record.source_id, &text),
                    options_histogram: record.options_histogram().unwrap_or_default(),
                });
            }
            let report = build_report(&pairs, &self.model);
            write_report(&report, out_dir)?;
            outcome.report = Some(report);
        }
        Ok(outcome)
    }

    fn process_one(&self, id: &str, path: &Path, out_dir: &Path) -> PageResult {
        let checkpoint = out_dir.join(format!("{id}.json"));
        if let Some(record) = std::fs::read_to_string(&checkpoint)
            .ok()
            .and_then(|s| PageRecord::from_json(&s).ok())
            .filter(|r| r.final_transcription.is_some())
        {
            let empty = record.word_boxes.is_empty();
            return Ok((record, empty));
        }
        let outcome = self.transcribe_page(path)?;
        for w in &outcome.warnings {
            log::info!("{id}: {w}");
        }
        let record = outcome.record;
        let text = record.final_transcription.as_ref().map(Transcription::to_text).unwrap_or_default();
        let txt = out_dir.join(format!("{id}.txt"));
        std::fs::write(&txt, text).map_err(io_err(&txt))?;
        let json = record.to_json().map_err(|source| PipelineError::Json { path: checkpoint.display().to_string(), source })?;
        std::fs::write(&checkpoint, json).map_err(io_err(&checkpoint))?;
        let empty = record.word_boxes.is_empty();
        Ok((record, empty))
    }
}

pub fn source_id_of(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

fn list_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.is_file()
                && p.extension().and_then(|e| e.to_str()).is_some_and(|e| extensions.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    files.sort();
    Ok(files)
}

pub fn write_report(report: &EvaluationReport, out_dir: &Path) -> Result<(), PipelineError> {
    let json_path = out_dir.join("report.json");
    let json = report.to_json().map_err(|source| PipelineError::Json { path: json_path.display().to_string(), source })?;
    std::fs::write(&json_path, json).map_err(io_err(&json_path))?;
    let txt_path = out_dir.join("report.txt");
    std::fs::write(&txt_path, report.to_table()).map_err(io_err(&txt_path))?;
    Ok(())
}

/// Scores `<id>.txt` predictions against `<id>.txt` labels. Options
/// histograms come from `<id>.json` checkpoints in `pred_dir` when present.
pub fn evaluate_dirs(pred_dir: &Path, label_dir: &Path, model: &EmbeddingModel) -> Result<EvaluationReport, PipelineError> {
    let mut pairs = Vec::new();
    for label_path in list_files(label_dir, &["txt"])? {
        let id = source_id_of(&label_path);
        let pred_path = pred_dir.join(format!("{id}.txt"));
        if !pred_path.exists() {
            continue;
        }
        let pred = std::fs::read_to_string(&pred_path).map_err(io_err(&pred_path))?;
        let label = std::fs::read_to_string(&label_path).map_err(io_err(&label_path))?;
        let options_histogram = std::fs::read_to_string(pred_dir.join(format!("{id}.json")))
            .ok()
            .and_then(|s| PageRecord::from_json(&s).ok())
            .and_then(|r| r.options_histogram().ok())
            .unwrap_or_default();
        pairs.push(EvaluatedPair {
            prediction: Transcription::from_text(&id, &pred),
            target: Transcription::from_text(&id, &label),
            source_id: id,
            options_histogram,
        });
    }
    Ok(build_report(&pairs, model))
}

/// Loads every `*.json` page checkpoint in `dir`.
pub fn load_records(dir: &Path) -> Result<Vec<PageRecord>, PipelineError> {
    let mut records = Vec::new();
    for path in list_files(dir, &["json"])? {
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        // report.json and label sidecars live alongside checkpoints
        if let Ok(record) = PageRecord::from_json(&text) {
            records.push(record);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recognizers::RecognizerKind;

    fn mock_config() -> PipelineConfig {
        PipelineConfig::new(
            RecognizerSpec::mock(RecognizerKind::MachinePrinted, BTreeMap::new()),
            RecognizerSpec::mock(RecognizerKind::Handwritten, BTreeMap::new()),
        )
    }

    #[test]
    fn config_json_defaults() {
        let json = r#"{
            "machine_printed": {"kind": "machine_printed", "backend": "external", "argv_template": ["tesseract", "{in}", "{out}", "hocr"]},
            "handwritten": {"kind": "handwritten", "backend": "external", "argv_template": ["htr", "{in}"]}
        }"#;
        let cfg = PipelineConfig::from_json(json).unwrap();
        assert_eq!(cfg.pad_pixels, 10);
        assert_eq!((cfg.deskew_range, cfg.deskew_step), (15.0, 0.5));
        assert_eq!(cfg.rotation_candidates, vec![0, 90, 180, 270]);
        assert_eq!(cfg.nomination, Strategy::Rule);
        assert!(cfg.stages.enhance && cfg.stages.deskew && cfg.stages.rotate_select);
        assert_eq!(cfg.external_timeout_secs, 30.0);
    }

    #[test]
    fn config_rejects_bad_rotations() {
        let mut cfg = mock_config();
        cfg.rotation_candidates = vec![];
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
        cfg.rotation_candidates = vec![0, 45];
        assert!(cfg.validate().is_err());
        cfg.rotation_candidates = vec![180];
        cfg.validate().unwrap();
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = mock_config();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = mock_config();
        cfg.dictionary_paths = vec!["words.txt".into(), "/abs/words.txt".into()];
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
        let loaded = PipelineConfig::load(&path).unwrap();
        assert_eq!(loaded.dictionary_paths[0], dir.path().join("words.txt").to_string_lossy());
        assert_eq!(loaded.dictionary_paths[1], "/abs/words.txt");
    }

    #[test]
    fn from_config_needs_dictionary() {
        assert!(matches!(Pipeline::from_config(mock_config()), Err(PipelineError::Config(_))));
    }
}
