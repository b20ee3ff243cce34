//! Ground-truth transcriptions for forms that carry a machine-printed
//! paragraph followed by its handwritten copy.
//!
//! The printed section is tokenized and placed before the handwritten lines,
//! giving one label in page order regardless of text type.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc_model::Transcription;
use crate::lexicon::tokenize;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("form is missing the {0:?} marker")]
    MissingMarker(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Lines that introduce the printed section and the handwritten line records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormMarkers {
    pub printed: String,
    pub handwritten: String,
}

impl Default for FormMarkers {
    fn default() -> Self {
        Self { printed: "OCR:".into(), handwritten: "CSR:".into() }
    }
}

/// Printed paragraph lines first, then handwritten lines. Blank printed
/// lines and empty handwritten lines are dropped.
pub fn build_mixed_label(source_id: &str, printed_paragraph: &str, handwritten_lines: &[Vec<String>]) -> Transcription {
    let mut lines: Vec<Vec<String>> = printed_paragraph
        .lines()
        .map(tokenize)
        .filter(|l| !l.is_empty())
        .collect();
    lines.extend(
        handwritten_lines
            .iter()
            .map(|l| l.iter().map(|w| w.trim().to_string()).filter(|w| !w.is_empty()).collect::<Vec<_>>())
            .filter(|l| !l.is_empty()),
    );
    Transcription { lines, source_id: source_id.to_string() }
}

/// The printed paragraph and tokenized handwritten lines of one form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedForm {
    pub printed_paragraph: String,
    pub handwritten_lines: Vec<Vec<String>>,
}

fn find_marker(lines: &[&str], marker: &str, from: usize) -> Result<usize, LabelError> {
    lines[from..]
        .iter()
        .position(|l| l.trim() == marker)
        .map(|i| i + from)
        .ok_or_else(|| LabelError::MissingMarker(marker.to_string()))
}

/// Splits a form ground-truth file into header, printed section and line
/// records. Line records may be plain text or `|`-separated tokens (optionally
/// after space-separated metadata fields, as in `lines.txt`).
pub fn parse_iam_ascii(form_text: &str, markers: &FormMarkers) -> Result<ParsedForm, LabelError> {
    let lines: Vec<&str> = form_text.lines().collect();
    let printed_at = find_marker(&lines, &markers.printed, 0)?;
    let handwritten_at = find_marker(&lines, &markers.handwritten, printed_at + 1)?;
    let printed_paragraph = lines[printed_at + 1..handwritten_at]
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    let handwritten_lines = lines[handwritten_at + 1..]
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let text = if l.contains('|') {
                l.rsplit(' ').next().unwrap_or(l).replace('|', " ")
            } else {
                l.to_string()
            };
            tokenize(&text)
        })
        .filter(|t| !t.is_empty())
        .collect();
    Ok(ParsedForm { printed_paragraph, handwritten_lines })
}

/// Token counts written next to each label for auditing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSidecar {
    pub source_id: String,
    pub printed_tokens: usize,
    pub handwritten_tokens: usize,
    pub lines: usize,
}

pub fn label_form(source_id: &str, form_text: &str, markers: &FormMarkers) -> Result<(Transcription, LabelSidecar), LabelError> {
    let form = parse_iam_ascii(form_text, markers)?;
    let label = build_mixed_label(source_id, &form.printed_paragraph, &form.handwritten_lines);
    let printed_tokens = tokenize(&form.printed_paragraph).len();
    let sidecar = LabelSidecar {
        source_id: source_id.to_string(),
        printed_tokens,
        handwritten_tokens: label.word_count() - printed_tokens,
        lines: label.lines.len(),
    };
    Ok((label, sidecar))
}

/// Labels every `*.txt` form in `iam_dir`, writing `<id>.txt` and `<id>.json`
/// into `out_dir`. Returns the processed ids in order.
pub fn build_label_dir(iam_dir: &Path, out_dir: &Path, markers: &FormMarkers) -> Result<Vec<String>, LabelError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| LabelError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut forms: Vec<_> = std::fs::read_dir(iam_dir)
        .map_err(io(iam_dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    forms.sort();
    let mut ids = Vec::new();
    for path in forms {
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        let (label, sidecar) = label_form(&id, &text, markers)?;
        let txt = out_dir.join(format!("{id}.txt"));
        std::fs::write(&txt, label.to_text()).map_err(io(&txt))?;
        let json = out_dir.join(format!("{id}.json"));
        let body = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(&json, body).map_err(io(&json))?;
        ids.push(id);
    }
    Ok(ids)
}
