//! Synthetic pages plus mock engines that read them from pixels.
//!
//! Each word is a solid ink block whose width identifies it. The page engine
//! reads a block only when it is axis-aligned (high fill ratio) and reports a
//! box slightly tighter than the ink, the way OCR boxes hug the x-height. The
//! word engine reads a crop only when the ink does not touch the crop edge.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use mixscan::embeddings::EmbeddingModel;
use mixscan::hocr::{parse_hocr, render_hocr, HocrPage};
use mixscan::imaging::{RasterImage, BINARIZE_THRESHOLD, WHITE};
use mixscan::lexicon::{CheckerConfig, Dictionary, SpellChain};
use mixscan::pipeline::{Pipeline, PipelineConfig, StageToggles};
use mixscan::recognizers::{
    PageRecognizer, RecognizerError, RecognizerKind, RecognizerSpec, WordOutput, WordRecognizer,
};
use mixscan::{BBox, Transcription, WordBox};

pub const BLOB_HEIGHT: u32 = 12;
pub const LINE_PITCH: u32 = 40;
pub const MARGIN: u32 = 40;
pub const GAP: u32 = 24;
/// Reported boxes are this much shorter than the ink at top and bottom.
pub const BOX_INSET: u32 = 2;
pub const MIN_FILL: f64 = 0.9;

/// What each engine reads from a clean rendering of one word.
#[derive(Debug, Clone)]
pub struct Glyph {
    pub truth: String,
    pub ocr: String,
    pub htr: String,
}

impl Glyph {
    pub fn printed(word: &str) -> Self {
        Self { truth: word.into(), ocr: word.into(), htr: word.into() }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub base_width: u32,
    pub step: u32,
    pub glyphs: Vec<Glyph>,
}

impl World {
    pub fn new(base_width: u32, step: u32) -> Self {
        Self { base_width, step, glyphs: Vec::new() }
    }

    pub fn add(&mut self, g: Glyph) -> usize {
        self.glyphs.push(g);
        self.glyphs.len() - 1
    }

    pub fn width_of(&self, id: usize) -> u32 {
        self.base_width + self.step * id as u32
    }

    pub fn identify(&self, width: u32) -> Option<&Glyph> {
        let off = width as f64 - self.base_width as f64;
        let k = (off / self.step as f64).round();
        if k < 0.0 || (off - k * self.step as f64).abs() > self.step as f64 / 2.0 {
            return None;
        }
        self.glyphs.get(k as usize)
    }

    /// Renders lines of glyph ids; returns the page and the ink box of every
    /// word in reading order.
    pub fn render(&self, lines: &[Vec<usize>]) -> (RasterImage, Vec<Vec<BBox>>) {
        let mut boxes = Vec::new();
        let mut right = 0;
        for (i, line) in lines.iter().enumerate() {
            let y0 = MARGIN + i as u32 * LINE_PITCH;
            let mut x = MARGIN;
            let mut row = Vec::new();
            for &id in line {
                let w = self.width_of(id);
                row.push(BBox::new(x, y0, x + w, y0 + BLOB_HEIGHT).unwrap());
                x += w + GAP;
            }
            right = right.max(x);
            boxes.push(row);
        }
        let width = right + MARGIN;
        let height = 2 * MARGIN + lines.len() as u32 * LINE_PITCH;
        let mut img = RasterImage::filled(width, height, WHITE);
        for b in boxes.iter().flatten() {
            for y in b.y0..b.y1 {
                for x in b.x0..b.x1 {
                    img.set(x, y, 0);
                }
            }
        }
        (img, boxes)
    }

    pub fn label(&self, source_id: &str, lines: &[Vec<usize>]) -> Transcription {
        let words = lines.iter().map(|l| l.iter().map(|&id| self.glyphs[id].truth.clone()).collect()).collect();
        Transcription::new(source_id, words).unwrap()
    }
}

/// A misread of `word`: same length, no letters in common.
pub fn smudge(word: &str) -> String {
    "x".repeat(word.chars().count().max(1))
}

#[derive(Debug, Clone, Copy)]
pub struct Blob {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    pub area: usize,
}

impl Blob {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn fill(&self) -> f64 {
        self.area as f64 / ((self.x1 - self.x0) as f64 * (self.y1 - self.y0) as f64)
    }

    fn center_y(&self) -> f64 {
        (self.y0 + self.y1) as f64 / 2.0
    }
}

/// 4-connected ink components of at least 20 pixels, in scan order.
pub fn blobs(img: &RasterImage) -> Vec<Blob> {
    let (w, h) = (img.width(), img.height());
    let ink = |x: u32, y: u32| img.get(x, y) < BINARIZE_THRESHOLD;
    let mut seen = vec![false; (w * h) as usize];
    let mut out = Vec::new();
    for sy in 0..h {
        for sx in 0..w {
            if seen[(sy * w + sx) as usize] || !ink(sx, sy) {
                continue;
            }
            let mut b = Blob { x0: sx, y0: sy, x1: sx + 1, y1: sy + 1, area: 0 };
            let mut stack = vec![(sx, sy)];
            seen[(sy * w + sx) as usize] = true;
            while let Some((x, y)) = stack.pop() {
                b.area += 1;
                b.x0 = b.x0.min(x);
                b.y0 = b.y0.min(y);
                b.x1 = b.x1.max(x + 1);
                b.y1 = b.y1.max(y + 1);
                let mut visit = |nx: u32, ny: u32| {
                    let i = (ny * w + nx) as usize;
                    if !seen[i] && ink(nx, ny) {
                        seen[i] = true;
                        stack.push((nx, ny));
                    }
                };
                if x > 0 {
                    visit(x - 1, y);
                }
                if y > 0 {
                    visit(x, y - 1);
                }
                if x + 1 < w {
                    visit(x + 1, y);
                }
                if y + 1 < h {
                    visit(x, y + 1);
                }
            }
            if b.area >= 20 {
                out.push(b);
            }
        }
    }
    out
}

pub struct BlobOcr {
    pub world: Arc<World>,
}

impl PageRecognizer for BlobOcr {
    fn recognize_page(&self, img: &RasterImage) -> Result<HocrPage, RecognizerError> {
        let mut found = blobs(img);
        found.sort_by(|a, b| a.center_y().total_cmp(&b.center_y()).then(a.x0.cmp(&b.x0)));
        let mut lines: Vec<Vec<Blob>> = Vec::new();
        for b in found {
            match lines.last_mut() {
                Some(line) if b.center_y() - line[0].center_y() < (LINE_PITCH / 2) as f64 => line.push(b),
                _ => lines.push(vec![b]),
            }
        }
        let mut words = Vec::new();
        for (li, line) in lines.iter_mut().enumerate() {
            line.sort_by_key(|b| b.x0);
            for (wi, b) in line.iter().enumerate() {
                let text = match self.world.identify(b.width()) {
                    Some(g) if b.fill() >= MIN_FILL => g.ocr.clone(),
                    Some(g) => smudge(&g.truth),
                    None => "xxxx".into(),
                };
                let inset = if b.y1 - b.y0 > 2 * BOX_INSET + 1 { BOX_INSET } else { 0 };
                words.push(WordBox {
                    text,
                    bbox: BBox::new(b.x0, b.y0 + inset, b.x1, b.y1 - inset).unwrap(),
                    line_index: li,
                    word_index: wi,
                    confidence: None,
                });
            }
        }
        let page = BBox::new(0, 0, img.width(), img.height()).unwrap();
        Ok(parse_hocr(&render_hocr(&page, &words))?)
    }
}

pub struct BlobHtr {
    pub world: Arc<World>,
}

impl WordRecognizer for BlobHtr {
    fn recognize_word(&self, crop: &RasterImage) -> Result<WordOutput, RecognizerError> {
        let Some(b) = blobs(crop).into_iter().max_by_key(|b| b.area) else {
            return Ok(WordOutput::from_raw(""));
        };
        let clipped = b.x0 == 0 || b.y0 == 0 || b.x1 == crop.width() || b.y1 == crop.height();
        let text = match self.world.identify(b.width()) {
            Some(g) if !clipped && b.fill() >= MIN_FILL => g.htr.clone(),
            Some(g) => smudge(&g.truth),
            None => "xxxx".into(),
        };
        Ok(WordOutput::from_raw(text))
    }
}

/// Wraps an engine and counts calls.
pub struct Counting<T> {
    pub inner: T,
    pub calls: AtomicUsize,
}

impl<T> Counting<T> {
    pub fn new(inner: T) -> Arc<Self> {
        Arc::new(Self { inner, calls: AtomicUsize::new(0) })
    }

    pub fn count(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: PageRecognizer> PageRecognizer for Counting<T> {
    fn recognize_page(&self, img: &RasterImage) -> Result<HocrPage, RecognizerError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.recognize_page(img)
    }
}

impl<T: WordRecognizer> WordRecognizer for Counting<T> {
    fn recognize_word(&self, img: &RasterImage) -> Result<WordOutput, RecognizerError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.recognize_word(img)
    }
}

/// Config with mock recognizer specs and every optional stage off.
pub fn bare_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::new(
        RecognizerSpec::mock(RecognizerKind::MachinePrinted, BTreeMap::new()),
        RecognizerSpec::mock(RecognizerKind::Handwritten, BTreeMap::new()),
    );
    cfg.stages = StageToggles { enhance: false, deskew: false, rotate_select: false };
    cfg.parallelism = 4;
    cfg
}

pub fn spell_chain<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> SpellChain {
    let dict = Arc::new(Dictionary::from_words(words));
    SpellChain::new(vec![CheckerConfig::new("dict", dict, 2).unwrap()]).unwrap()
}

pub fn pipeline(
    cfg: PipelineConfig,
    ocr: Arc<dyn PageRecognizer>,
    htr: Arc<dyn WordRecognizer>,
    spell: SpellChain,
) -> Pipeline {
    Pipeline::new(cfg, ocr, htr, spell, EmbeddingModel::hashed(32).unwrap())
}

pub fn blob_pipeline(cfg: PipelineConfig, world: &Arc<World>, spell: SpellChain) -> Pipeline {
    pipeline(cfg, Arc::new(BlobOcr { world: Arc::clone(world) }), Arc::new(BlobHtr { world: Arc::clone(world) }), spell)
}

/// Words from the bundled frequency-ranked list, skipping the first `skip`,
/// with lengths in `len` and pairwise edit distance of at least `min_gap`.
pub fn spaced_vocabulary(skip: usize, count: usize, len: std::ops::RangeInclusive<usize>, min_gap: usize) -> Vec<String> {
    let text = include_str!("../fixtures/english_50k.txt");
    let mut picked: Vec<String> = Vec::new();
    for w in text.lines().skip(skip) {
        if picked.len() == count {
            break;
        }
        if !len.contains(&w.len()) || !w.chars().all(|c| c.is_ascii_lowercase()) {
            continue;
        }
        if picked.iter().all(|p| mixscan::metrics::levenshtein(p, w) >= min_gap) {
            picked.push(w.to_string());
        }
    }
    assert_eq!(picked.len(), count, "vocabulary too small");
    picked
}
