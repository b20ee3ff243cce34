//! Browser bindings for three pipeline pieces: the deskew search, word
//! nomination, and transcription scoring.
//!
//! Each export takes and returns plain values or JSON strings. The `*_json`
//! functions hold the logic and also run natively in tests.

use mixscan::embeddings::EmbeddingModel;
use mixscan::imaging::{self, RasterImage};
use mixscan::metrics::{bow_prf, doc_similarity, lev_accuracy, levenshtein};
use mixscan::nomination::{build_similarity, context_candidates, nominate_context, nominate_rule, resolve_sequence};
use mixscan::{OptionsList, Strategy, Transcription};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const PAGE_W: u32 = 360;
const PAGE_H: u32 = 240;
const EMBEDDING_DIM: usize = 64;

fn synthetic_page(skew: f64, lines: u32) -> RasterImage {
    let page = imaging::striped_page(PAGE_W, PAGE_H, lines.clamp(1, 20), 3);
    imaging::rotate(&page, skew)
}

#[derive(Serialize)]
struct SkewView {
    width: u32,
    height: u32,
    estimate: f64,
    score: f64,
    profile: Vec<(f64, f64)>,
}

pub fn skew_json(skew: f64, lines: u32, range: f64, step: f64) -> Result<String, String> {
    let img = synthetic_page(skew, lines);
    let est = imaging::estimate_skew(&img, range, step).map_err(|e| e.to_string())?;
    let profile = imaging::skew_profile(&img, range, step).map_err(|e| e.to_string())?;
    let view = SkewView { width: img.width(), height: img.height(), estimate: est.angle_degrees, score: est.score, profile };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// RGBA pixels of the skewed page, straightened by `correction` degrees.
pub fn page_rgba(skew: f64, lines: u32, correction: f64) -> (u32, u32, Vec<u8>) {
    let mut img = synthetic_page(skew, lines);
    if correction != 0.0 {
        img = imaging::rotate(&img, correction);
    }
    let rgba = img.pixels().iter().flat_map(|&p| [p, p, p, 255]).collect();
    (img.width(), img.height(), rgba)
}

#[derive(Deserialize)]
struct NominationInput {
    lists: Vec<OptionsList>,
}

#[derive(Serialize)]
struct Step {
    position: usize,
    prev: String,
    current: Vec<String>,
    next: Vec<String>,
    similarity: Vec<Vec<f64>>,
    chosen: String,
}

#[derive(Serialize)]
struct NominationView {
    rule: Vec<String>,
    context: Vec<String>,
    steps: Vec<Step>,
}

/// Rule and context picks for a word sequence, with the similarity matrix
/// of every position that had a real choice.
pub fn nominate_json(input: &str) -> Result<String, String> {
    let input: NominationInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let model = EmbeddingModel::hashed(EMBEDDING_DIM).map_err(|e| e.to_string())?;
    let lists = &input.lists;
    let rule = lists.iter().map(nominate_rule).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let context = resolve_sequence(lists, Strategy::Context, Some(&model)).map_err(|e| e.to_string())?;
    let candidates = lists.iter().map(context_candidates).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let mut steps = Vec::new();
    for (i, current) in candidates.iter().enumerate() {
        if current.len() < 2 {
            continue;
        }
        let prev = if i == 0 { String::new() } else { context[i - 1].clone() };
        let next = candidates.get(i + 1).cloned().unwrap_or_else(|| vec![String::new()]);
        let ctx = build_similarity(std::slice::from_ref(&prev), current, &next, &model).map_err(|e| e.to_string())?;
        let chosen = nominate_context(&ctx);
        steps.push(Step { position: i, prev, current: current.clone(), next, similarity: ctx.similarity, chosen });
    }
    serde_json::to_string(&NominationView { rule, context, steps }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ScoreView {
    edit_distance: usize,
    lev_accuracy: f64,
    precision: f64,
    recall: f64,
    f_score: f64,
    doc_similarity: f64,
}

pub fn score_json(prediction: &str, target: &str) -> Result<String, String> {
    let words = |text: &str| mixscan::metrics::normalized_words(&Transcription::from_text("demo", text));
    let (p, t) = (words(prediction), words(target));
    let (pj, tj) = (p.join(" "), t.join(" "));
    let prf = bow_prf(&p, &t);
    let model = EmbeddingModel::hashed(EMBEDDING_DIM).map_err(|e| e.to_string())?;
    let view = ScoreView {
        edit_distance: levenshtein(&pj, &tj),
        lev_accuracy: lev_accuracy(&pj, &tj),
        precision: prf.precision,
        recall: prf.recall,
        f_score: prf.f_score,
        doc_similarity: doc_similarity(&p, &t, &model),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn skew(skew: f64, lines: u32, range: f64, step: f64) -> Result<String, JsValue> {
    skew_json(skew, lines, range, step).map_err(|e| JsValue::from_str(&e))
}

/// Canvas-ready RGBA bytes; width and height come from `skew`.
#[wasm_bindgen]
pub fn page_pixels(skew: f64, lines: u32, correction: f64) -> Vec<u8> {
    page_rgba(skew, lines, correction).2
}

#[wasm_bindgen]
pub fn page_size(skew: f64, lines: u32, correction: f64) -> Vec<u32> {
    let (w, h, _) = page_rgba(skew, lines, correction);
    vec![w, h]
}

#[wasm_bindgen]
pub fn nominate(input: &str) -> Result<String, JsValue> {
    nominate_json(input).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn score(prediction: &str, target: &str) -> Result<String, JsValue> {
    score_json(prediction, target).map_err(|e| JsValue::from_str(&e))
}
