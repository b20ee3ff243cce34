//! Document data types shared by every stage of the pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Marker produced by spell checking when no correction could be found.
pub const UNK: &str = "<UNK>";

#[derive(Debug, Error, PartialEq)]
pub enum DocError {
    #[error("invalid bounding box ({x0},{y0},{x1},{y1}): need x0 < x1 and y0 < y1")]
    InvalidBBox { x0: u32, y0: u32, x1: u32, y1: u32 },
    #[error("malformed options list: {0}")]
    MalformedOptions(String),
    #[error("empty word at line {line}, position {word}")]
    EmptyWord { line: usize, word: usize },
    #[error("line lengths sum to {expected} but {actual} words were given")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("duplicate word key {0}")]
    DuplicateKey(WordKey),
    #[error("options entry {0} has no matching word box")]
    OrphanOptions(WordKey),
    #[error("final transcription has {actual} words for {expected} word boxes")]
    FinalWordCount { expected: usize, actual: usize },
}

/// Pixel rectangle with origin at the top-left; `x1` and `y1` are exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self, DocError> {
        if x0 < x1 && y0 < y1 {
            Ok(Self { x0, y0, x1, y1 })
        } else {
            Err(DocError::InvalidBBox { x0, y0, x1, y1 })
        }
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn contains(&self, other: &BBox) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }
}

/// Position of a word on a page: `(line_index, word_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WordKey {
    pub line: usize,
    pub word: usize,
}

impl fmt::Display for WordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.word)
    }
}

impl FromStr for WordKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (line, word) = s.split_once(':').ok_or_else(|| format!("bad word key {s:?}"))?;
        Ok(WordKey {
            line: line.parse().map_err(|_| format!("bad line index in {s:?}"))?,
            word: word.parse().map_err(|_| format!("bad word index in {s:?}"))?,
        })
    }
}

impl Serialize for WordKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WordKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A word as emitted by page-level OCR, with its pixel bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordBox {
    pub text: String,
    pub bbox: BBox,
    pub line_index: usize,
    pub word_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl WordBox {
    pub fn key(&self) -> WordKey {
        WordKey { line: self.line_index, word: self.word_index }
    }
}

/// Logical size of an [`OptionsList`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OptionsSize {
    One,
    Three,
    Four,
}

impl OptionsSize {
    pub fn as_usize(self) -> usize {
        match self {
            OptionsSize::One => 1,
            OptionsSize::Three => 3,
            OptionsSize::Four => 4,
        }
    }
}

/// Candidate words for one position on the page.
///
/// `a` is the machine-printed output and `b` its spell-checked form; `c` is
/// the handwriting output for the cropped word and `d` its spell-checked form.
/// `c` and `d` are only present when `b` failed the spell check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionsList {
    pub a: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
}

impl OptionsList {
    /// A word whose machine-printed output passed spell checking.
    pub fn single(a: impl Into<String>) -> Self {
        let a = a.into();
        Self { b: Some(a.clone()), a, c: None, d: None }
    }

    pub fn full(
        a: impl Into<String>,
        b: impl Into<String>,
        c: impl Into<String>,
        d: impl Into<String>,
    ) -> Self {
        Self { a: a.into(), b: Some(b.into()), c: Some(c.into()), d: Some(d.into()) }
    }

    /// Classifies the list shape.
    ///
    /// A handwriting output of `<UNK>` never counts as matching its spell
    /// check, so `c == d == <UNK>` (a failed handwriting call) is size four.
    pub fn size(&self) -> Result<OptionsSize, DocError> {
        let malformed = |msg: &str| Err(DocError::MalformedOptions(format!("{msg}: {self:?}")));
        let Some(b) = self.b.as_deref() else {
            return malformed("option B missing");
        };
        match (self.c.as_deref(), self.d.as_deref()) {
            (None, None) if b == self.a => Ok(OptionsSize::One),
            (None, None) => malformed("B differs from A but no handwriting options"),
            (None, Some(_)) => malformed("D present without C"),
            (Some(_), None) => malformed("C present without D"),
            (Some(c), Some(d)) => {
                if b == self.a && b != UNK {
                    return malformed("handwriting options present although B matches A");
                }
                if d == c && c != UNK {
                    Ok(OptionsSize::Three)
                } else {
                    Ok(OptionsSize::Four)
                }
            }
        }
    }

    /// Present options in `A, B, C, D` order, truncated to the logical size.
    pub fn logical_options(&self) -> Result<Vec<&str>, DocError> {
        let size = self.size()?;
        let all = [Some(self.a.as_str()), self.b.as_deref(), self.c.as_deref(), self.d.as_deref()];
        Ok(all.into_iter().flatten().take(size.as_usize()).collect())
    }
}

/// Ordered words grouped into lines.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Transcription {
    pub lines: Vec<Vec<String>>,
    pub source_id: String,
}

impl Transcription {
    pub fn new(source_id: impl Into<String>, lines: Vec<Vec<String>>) -> Result<Self, DocError> {
        for (line, words) in lines.iter().enumerate() {
            if let Some(word) = words.iter().position(|w| w.is_empty()) {
                return Err(DocError::EmptyWord { line, word });
            }
        }
        Ok(Self { lines, source_id: source_id.into() })
    }

    pub fn word_count(&self) -> usize {
        self.lines.iter().map(Vec::len).sum()
    }

    pub fn line_lengths(&self) -> Vec<usize> {
        self.lines.iter().map(Vec::len).collect()
    }

    /// Words in (line, word) order.
    pub fn flatten(&self) -> Vec<String> {
        self.lines.iter().flatten().cloned().collect()
    }

    /// Inverse of [`flatten`](Self::flatten) given the original line lengths.
    pub fn unflatten(
        source_id: impl Into<String>,
        words: Vec<String>,
        line_lengths: &[usize],
    ) -> Result<Self, DocError> {
        let expected: usize = line_lengths.iter().sum();
        if expected != words.len() {
            return Err(DocError::LengthMismatch { expected, actual: words.len() });
        }
        let mut iter = words.into_iter();
        let lines = line_lengths.iter().map(|&n| iter.by_ref().take(n).collect()).collect();
        Self::new(source_id, lines)
    }

    /// The whole document as one space-joined paragraph.
    pub fn paragraph(&self) -> String {
        self.flatten().join(" ")
    }

    /// Plain-text form: one line per entry, words separated by single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the plain-text form. Blank lines are kept as empty lines
    /// except trailing ones.
    pub fn from_text(source_id: impl Into<String>, text: &str) -> Self {
        let mut lines: Vec<Vec<String>> = text
            .lines()
            .map(|l| l.split_whitespace().map(str::to_owned).collect())
            .collect();
        while lines.last().is_some_and(|l| l.is_empty()) {
            lines.pop();
        }
        Self { lines, source_id: source_id.into() }
    }
}

/// Checkpoint of one processed page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRecord {
    pub source_id: String,
    pub image_path: String,
    pub word_boxes: Vec<WordBox>,
    pub options: BTreeMap<WordKey, OptionsList>,
    #[serde(rename = "final", default)]
    pub final_transcription: Option<Transcription>,
}

impl PageRecord {
    pub fn validate(&self) -> Result<(), DocError> {
        let mut keys = std::collections::BTreeSet::new();
        for wb in &self.word_boxes {
            BBox::new(wb.bbox.x0, wb.bbox.y0, wb.bbox.x1, wb.bbox.y1)?;
            if !keys.insert(wb.key()) {
                return Err(DocError::DuplicateKey(wb.key()));
            }
        }
        for (key, opts) in &self.options {
            if !keys.contains(key) {
                return Err(DocError::OrphanOptions(*key));
            }
            opts.size()?;
        }
        if let Some(t) = &self.final_transcription {
            if t.word_count() != self.word_boxes.len() {
                return Err(DocError::FinalWordCount {
                    expected: self.word_boxes.len(),
                    actual: t.word_count(),
                });
            }
        }
        Ok(())
    }

    /// Counts of options lists of size 1, 3 and 4 on this page.
    pub fn options_histogram(&self) -> Result<[usize; 3], DocError> {
        let mut counts = [0; 3];
        for opts in self.options.values() {
            match opts.size()? {
                OptionsSize::One => counts[0] += 1,
                OptionsSize::Three => counts[1] += 1,
                OptionsSize::Four => counts[2] += 1,
            }
        }
        Ok(counts)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
