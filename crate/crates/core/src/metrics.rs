//! Character-level, word-level and document-level transcription scores.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::doc_model::{DocError, PageRecord, Transcription};
use crate::embeddings::{cosine, EmbeddingModel};
use crate::lexicon::tokenize;

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - distance / max(len)`; two empty strings score 1.
pub fn lev_accuracy(pred: &str, target: &str) -> f64 {
    let longest = pred.chars().count().max(target.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(pred, target) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

fn counts<S: AsRef<str>>(words: &[S]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for w in words {
        *m.entry(w.as_ref()).or_insert(0) += 1;
    }
    m
}

/// Bag-of-words precision, recall and F-score from multiset overlap.
pub fn bow_prf<S: AsRef<str>, T: AsRef<str>>(pred: &[S], target: &[T]) -> Prf {
    let pc = counts(pred);
    let tc = counts(target);
    let tp: usize = pc.iter().map(|(w, &n)| n.min(tc.get(w).copied().unwrap_or(0))).sum();
    let ratio = |n: usize| if n == 0 { 0.0 } else { tp as f64 / n as f64 };
    let precision = ratio(pred.len());
    let recall = ratio(target.len());
    let f_score = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Prf { precision, recall, f_score }
}

pub fn doc_similarity<S: AsRef<str>, T: AsRef<str>>(pred: &[S], target: &[T], model: &EmbeddingModel) -> f64 {
    let p = model.embed_document(pred);
    let t = model.embed_document(target);
    cosine(&p, &t).expect("same model dimension")
}

/// Fractions of words whose options list has size 1, 3 and 4.
pub fn options_stats(pages: &[PageRecord]) -> Result<(f64, f64, f64), DocError> {
    let mut total = [0usize; 3];
    for page in pages {
        let h = page.options_histogram()?;
        for (t, n) in total.iter_mut().zip(h) {
            *t += n;
        }
    }
    let n: usize = total.iter().sum();
    if n == 0 {
        return Ok((0.0, 0.0, 0.0));
    }
    let frac = |k: usize| k as f64 / n as f64;
    Ok((frac(total[0]), frac(total[1]), frac(total[2])))
}

/// Decile bin: `[0,10%) ... [80,90%)`, then `[90,100%]`. Values below zero
/// land in the first bin.
pub fn decile_bin(value: f64) -> usize {
    ((value * 10.0 + 1e-9).floor().max(0.0) as usize).min(9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocMetrics {
    pub lev_accuracy: f64,
    pub doc_similarity: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Counts of options lists of size 1, 3, 4.
    pub options_histogram: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusMeans {
    pub lev_accuracy: f64,
    pub doc_similarity: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_doc: BTreeMap<String, DocMetrics>,
    pub corpus: CorpusMeans,
    /// Documents per Levenshtein-accuracy decile.
    pub accuracy_histogram: [usize; 10],
    /// Documents per document-similarity decile.
    pub similarity_histogram: [usize; 10],
    /// Options-list size fractions over all words (1, 3, 4).
    pub options_fractions: (f64, f64, f64),
}

/// A prediction paired with its label.
#[derive(Debug, Clone)]
pub struct EvaluatedPair {
    pub source_id: String,
    pub prediction: Transcription,
    pub target: Transcription,
    pub options_histogram: [usize; 3],
}

/// Words of a transcription re-tokenized with the label tokenizer.
pub fn normalized_words(t: &Transcription) -> Vec<String> {
    tokenize(&t.paragraph())
}

pub fn evaluate_pair(pair: &EvaluatedPair, model: &EmbeddingModel) -> DocMetrics {
    let pred = normalized_words(&pair.prediction);
    let target = normalized_words(&pair.target);
    let prf = bow_prf(&pred, &target);
    DocMetrics {
        lev_accuracy: lev_accuracy(&pred.join(" "), &target.join(" ")),
        doc_similarity: doc_similarity(&pred, &target, model),
        precision: prf.precision,
        recall: prf.recall,
        f_score: prf.f_score,
        options_histogram: pair.options_histogram,
    }
}

pub fn build_report(docs: &[EvaluatedPair], model: &EmbeddingModel) -> EvaluationReport {
    let per_doc: BTreeMap<String, DocMetrics> =
        docs.iter().map(|d| (d.source_id.clone(), evaluate_pair(d, model))).collect();
    report_from_metrics(per_doc)
}

pub fn report_from_metrics(per_doc: BTreeMap<String, DocMetrics>) -> EvaluationReport {
    let n = per_doc.len();
    let mut report = EvaluationReport { per_doc, ..Default::default() };
    if n == 0 {
        return report;
    }
    let mean = |f: fn(&DocMetrics) -> f64| report.per_doc.values().map(f).sum::<f64>() / n as f64;
    report.corpus = CorpusMeans {
        lev_accuracy: mean(|m| m.lev_accuracy),
        doc_similarity: mean(|m| m.doc_similarity),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f_score: mean(|m| m.f_score),
    };
    let mut sizes = [0usize; 3];
    for m in report.per_doc.values() {
        report.accuracy_histogram[decile_bin(m.lev_accuracy)] += 1;
        report.similarity_histogram[decile_bin(m.doc_similarity)] += 1;
        for (s, k) in sizes.iter_mut().zip(m.options_histogram) {
            *s += k;
        }
    }
    let words: usize = sizes.iter().sum();
    if words > 0 {
        let f = |k: usize| k as f64 / words as f64;
        report.options_fractions = (f(sizes[0]), f(sizes[1]), f(sizes[2]));
    }
    report
}

impl EvaluationReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Aligned plain-text tables: corpus metrics, then decile histograms.
    pub fn to_table(&self) -> String {
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        let mut out = String::new();
        let _ = writeln!(out, "Documents: {}", self.per_doc.len());
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<22}{:>12}", "Evaluation Metric", "Accuracy(%)");
        let _ = writeln!(out, "{:<22}{:>12}", "Levenshtein", pct(self.corpus.lev_accuracy));
        let _ = writeln!(out, "{:<22}{:>12}", "Document Similarity", pct(self.corpus.doc_similarity));
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<14}{:>14}{:>14}{:>14}", "", "Precision(%)", "Recall(%)", "F-Score(%)");
        let _ = writeln!(
            out,
            "{:<14}{:>14}{:>14}{:>14}",
            "Bag-of-Words",
            pct(self.corpus.precision),
            pct(self.corpus.recall),
            pct(self.corpus.f_score)
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12}{:>14}{:>14}", "Range", "Levenshtein", "Similarity");
        for bin in 0..10 {
            let label = if bin == 9 { "90-100%".to_string() } else { format!("{}-{}%", bin * 10, bin * 10 + 10) };
            let _ = writeln!(out, "{:<12}{:>14}{:>14}", label, self.accuracy_histogram[bin], self.similarity_histogram[bin]);
        }
        let (f1, f3, f4) = self.options_fractions;
        let _ = writeln!(out);
        let _ = writeln!(out, "Options lists: size 1 {}%, size 3 {}%, size 4 {}%", pct(f1), pct(f3), pct(f4));
        out
    }
}
