//! Picks one final word from each options list.
//!
//! Rule-based nomination looks only at the list shape. Context-based
//! nomination compares bi-grams formed with the resolved previous word
//! against bi-grams formed with the next word's options, and keeps the
//! candidate whose bi-gram is most similar.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc_model::{DocError, OptionsList, OptionsSize, Transcription, UNK};
use crate::embeddings::{cosine, EmbeddingModel};

#[derive(Debug, Error, PartialEq)]
pub enum NominationError {
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error("previous options list must hold exactly one word, got {0}")]
    PrevNotSingleton(usize),
    #[error("{0} options list is empty")]
    EmptyList(&'static str),
    #[error("context nomination needs an embedding model")]
    MissingModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Rule,
    Context,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rule" => Ok(Strategy::Rule),
            "context" => Ok(Strategy::Context),
            other => Err(format!("unknown nomination strategy {other:?} (expected rule|context)")),
        }
    }
}

/// Shape-driven choice: A for size 1, C for size 3; for size 4 the first of
/// D, B that is not `<UNK>`, else A.
pub fn nominate_rule(o: &OptionsList) -> Result<String, DocError> {
    let pick = |v: &Option<String>| v.clone().unwrap_or_default();
    Ok(match o.size()? {
        OptionsSize::One => o.a.clone(),
        OptionsSize::Three => pick(&o.c),
        OptionsSize::Four => {
            if o.d.as_deref() != Some(UNK) {
                pick(&o.d)
            } else if o.b.as_deref() != Some(UNK) {
                pick(&o.b)
            } else {
                o.a.clone()
            }
        }
    })
}

/// Candidates used for context nomination: the logical options without
/// `<UNK>` entries, or just A if nothing else is left.
pub fn context_candidates(o: &OptionsList) -> Result<Vec<String>, DocError> {
    let opts: Vec<String> = o.logical_options()?.into_iter().filter(|w| *w != UNK).map(str::to_owned).collect();
    Ok(if opts.is_empty() { vec![o.a.clone()] } else { opts })
}

/// Bi-gram similarity matrix for one position.
#[derive(Debug, Clone, PartialEq)]
pub struct NominationContext {
    pub prev: Vec<String>,
    pub current: Vec<String>,
    pub next: Vec<String>,
    /// `similarity[i][j]` compares previous-current bi-gram `i` with
    /// current-next bi-gram `j`.
    pub similarity: Vec<Vec<f64>>,
}

impl NominationContext {
    /// `(prev, current[i])` for every `i`.
    pub fn prev_current_bigrams(&self) -> Vec<(String, String)> {
        cross_join(&self.prev, &self.current)
    }

    /// `(current[i], next[j])` in row-major order.
    pub fn current_next_bigrams(&self) -> Vec<(String, String)> {
        cross_join(&self.current, &self.next)
    }
}

fn cross_join(left: &[String], right: &[String]) -> Vec<(String, String)> {
    left.iter().flat_map(|l| right.iter().map(move |r| (l.clone(), r.clone()))).collect()
}

pub fn build_similarity(
    prev: &[String],
    current: &[String],
    next: &[String],
    model: &EmbeddingModel,
) -> Result<NominationContext, NominationError> {
    if prev.len() != 1 {
        return Err(NominationError::PrevNotSingleton(prev.len()));
    }
    if current.is_empty() {
        return Err(NominationError::EmptyList("current"));
    }
    if next.is_empty() {
        return Err(NominationError::EmptyList("next"));
    }
    let embed = |pairs: Vec<(String, String)>| -> Vec<Vec<f64>> {
        pairs
            .iter()
            .map(|(a, b)| model.embed_bigram(&a.to_lowercase(), &b.to_lowercase()))
            .collect()
    };
    let prev_current = embed(cross_join(prev, current));
    let current_next = embed(cross_join(current, next));
    let similarity = prev_current
        .iter()
        .map(|p| {
            current_next
                .iter()
                .map(|c| cosine(p, c).expect("vectors share the model dimension"))
                .collect()
        })
        .collect();
    Ok(NominationContext { prev: prev.to_vec(), current: current.to_vec(), next: next.to_vec(), similarity })
}

/// Similarities closer than this to the maximum count as tied with it, so
/// rounding noise cannot break mathematically equal entries unevenly.
pub const TIE_EPSILON: f64 = 1e-12;

/// Row index of the global maximum of `matrix`; ties go to the smallest row,
/// then the smallest column.
pub fn argmax_row(matrix: &[Vec<f64>]) -> usize {
    let max = matrix.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    matrix
        .iter()
        .position(|row| row.iter().any(|&v| v >= max - TIE_EPSILON))
        .unwrap_or(0)
}

pub fn nominate_context(ctx: &NominationContext) -> String {
    ctx.current[argmax_row(&ctx.similarity)].clone()
}

/// Resolves a flat sequence of options lists left to right.
pub fn resolve_sequence(
    options_seq: &[OptionsList],
    strategy: Strategy,
    model: Option<&EmbeddingModel>,
) -> Result<Vec<String>, NominationError> {
    match strategy {
        Strategy::Rule => Ok(options_seq.iter().map(nominate_rule).collect::<Result<_, _>>()?),
        Strategy::Context => {
            let model = model.ok_or(NominationError::MissingModel)?;
            let candidates: Vec<Vec<String>> =
                options_seq.iter().map(context_candidates).collect::<Result<_, _>>()?;
            let boundary = vec![String::new()];
            let mut resolved: Vec<String> = Vec::with_capacity(candidates.len());
            for (i, current) in candidates.iter().enumerate() {
                let word = if current.len() == 1 {
                    current[0].clone()
                } else {
                    let prev = vec![resolved.last().cloned().unwrap_or_default()];
                    let next = candidates.get(i + 1).unwrap_or(&boundary);
                    nominate_context(&build_similarity(&prev, current, next, model)?)
                };
                resolved.push(word);
            }
            Ok(resolved)
        }
    }
}

/// Resolves a page given its options lists grouped by line; context flows
/// across line boundaries in reading order.
pub fn resolve_document(
    source_id: &str,
    lines: &[Vec<OptionsList>],
    strategy: Strategy,
    model: Option<&EmbeddingModel>,
) -> Result<Transcription, NominationError> {
    let flat: Vec<OptionsList> = lines.iter().flatten().cloned().collect();
    let words = resolve_sequence(&flat, strategy, model)?;
    let lengths: Vec<usize> = lines.iter().map(Vec::len).collect();
    Ok(Transcription::unflatten(source_id, words, &lengths)?)
}
