//! Tokenization, dictionaries and the spell-check chain that gates
//! handwriting recognition.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::doc_model::UNK;
use crate::metrics::levenshtein;

pub const DEFAULT_MAX_EDIT: usize = 2;

const LEADING_PUNCT: &[char] = &['(', '"', '\'', '[', '{'];
const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', ')', ']', '}'];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: expected `word<TAB>count`")]
    BadFrequencyLine { path: String, line: usize },
    #[error("max_edit must be 1 or 2, got {0}")]
    MaxEdit(usize),
    #[error("spell chain needs at least one checker")]
    EmptyChain,
}

/// Splits text into word and punctuation tokens.
///
/// Leading `("'([{` and trailing `.,;:!?"')]}` characters are detached one
/// at a time; apostrophes and hyphens inside a word stay. Angle brackets are
/// removed.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        let cleaned: String = chunk.chars().filter(|c| *c != '<' && *c != '>').collect();
        let mut core = cleaned.as_str();
        while let Some(c) = core.chars().next().filter(|c| LEADING_PUNCT.contains(c)) {
            tokens.push(c.to_string());
            core = &core[c.len_utf8()..];
        }
        let mut trailing = Vec::new();
        while let Some(c) = core.chars().next_back().filter(|c| TRAILING_PUNCT.contains(c)) {
            trailing.push(c.to_string());
            core = &core[..core.len() - c.len_utf8()];
        }
        if !core.is_empty() {
            tokens.push(core.to_string());
        }
        tokens.extend(trailing.into_iter().rev());
    }
    tokens
}

/// Splits a word into `(leading punctuation, core, trailing punctuation)`
/// using the tokenizer's punctuation sets.
fn peel(word: &str) -> (&str, &str, &str) {
    let core_start = word.find(|c| !LEADING_PUNCT.contains(&c)).unwrap_or(word.len());
    let rest = &word[core_start..];
    let core_len = rest.trim_end_matches(TRAILING_PUNCT).len();
    (&word[..core_start], &rest[..core_len], &rest[core_len..])
}

#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    words: HashSet<String>,
    casefold_index: HashSet<String>,
    /// Lowercased word to its stored spellings, sorted.
    by_casefold: HashMap<String, Vec<String>>,
    frequencies: HashMap<String, u64>,
}

impl Dictionary {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut dict = Self::default();
        for w in words {
            let w: String = w.into();
            let w = w.trim();
            if w.is_empty() || dict.words.contains(w) {
                continue;
            }
            let folded = w.to_lowercase();
            dict.casefold_index.insert(folded.clone());
            let spellings = dict.by_casefold.entry(folded).or_default();
            spellings.push(w.to_string());
            spellings.sort();
            dict.words.insert(w.to_string());
        }
        dict
    }

    /// One word per line, UTF-8.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        Ok(Self::from_words(text.lines()))
    }

    /// Loads `word<TAB>count` lines, replacing any existing frequencies.
    pub fn load_frequencies(&mut self, path: impl AsRef<Path>) -> Result<(), LexiconError> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: display.clone(), source })?;
        let mut table = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || LexiconError::BadFrequencyLine { path: display.clone(), line: n + 1 };
            let (word, count) = line.split_once('\t').ok_or_else(bad)?;
            let count: u64 = count.trim().parse().map_err(|_| bad())?;
            table.insert(word.to_string(), count);
        }
        self.frequencies = table;
        Ok(())
    }

    pub fn with_frequencies(mut self, table: HashMap<String, u64>) -> Self {
        self.frequencies = table;
        self
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains_exact(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn contains_casefold(&self, word: &str) -> bool {
        self.casefold_index.contains(&word.to_lowercase())
    }

    pub fn frequency(&self, word: &str) -> u64 {
        self.frequencies.get(word).copied().unwrap_or(0)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Closest word within `max_edit` edits of `word`, compared casefolded.
    ///
    /// Ties: smaller distance, then higher frequency, then lexicographic.
    pub fn nearest(&self, word: &str, max_edit: usize) -> Option<&str> {
        let folded = word.to_lowercase();
        let len = folded.chars().count();
        let mut best: Option<(usize, u64, &str)> = None;
        for (key, spellings) in &self.by_casefold {
            if key.chars().count().abs_diff(len) > max_edit {
                continue;
            }
            let dist = levenshtein(&folded, key);
            if dist > max_edit {
                continue;
            }
            for spelling in spellings {
                let cand = (dist, self.frequency(spelling), spelling.as_str());
                let better = match best {
                    None => true,
                    Some((d, f, s)) => (cand.0, std::cmp::Reverse(cand.1), cand.2) < (d, std::cmp::Reverse(f), s),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        best.map(|(_, _, s)| s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpellResult {
    /// Corrected word, or `<UNK>` when nothing was close enough.
    pub corrected: String,
    pub passed: bool,
    pub checker_id: String,
}

impl SpellResult {
    fn new(input: &str, corrected: String, checker_id: &str) -> Self {
        Self { passed: corrected == input, corrected, checker_id: checker_id.to_string() }
    }
}

fn check_max_edit(max_edit: usize) -> Result<(), LexiconError> {
    if (1..=2).contains(&max_edit) {
        Ok(())
    } else {
        Err(LexiconError::MaxEdit(max_edit))
    }
}

/// Dictionary lookup with bounded-edit correction.
pub fn spell_check(word: &str, dict: &Dictionary, max_edit: usize) -> SpellResult {
    spell_check_as(word, dict, max_edit, "dictionary")
}

fn spell_check_as(word: &str, dict: &Dictionary, max_edit: usize, id: &str) -> SpellResult {
    if dict.contains_exact(word) || dict.contains_casefold(word) {
        return SpellResult::new(word, word.to_string(), id);
    }
    let corrected = dict.nearest(word, max_edit).unwrap_or(UNK).to_string();
    SpellResult::new(word, corrected, id)
}

#[derive(Debug, Clone)]
pub struct CheckerConfig {
    pub id: String,
    pub dictionary: Arc<Dictionary>,
    pub max_edit: usize,
}

impl CheckerConfig {
    pub fn new(id: impl Into<String>, dictionary: Arc<Dictionary>, max_edit: usize) -> Result<Self, LexiconError> {
        check_max_edit(max_edit)?;
        Ok(Self { id: id.into(), dictionary, max_edit })
    }

    pub fn check(&self, word: &str) -> SpellResult {
        spell_check_as(word, &self.dictionary, self.max_edit, &self.id)
    }
}

/// Runs checkers in order: the first pass wins, otherwise the first real
/// correction, otherwise `<UNK>`.
pub fn spell_chain(word: &str, checkers: &[CheckerConfig]) -> SpellResult {
    let results: Vec<SpellResult> = checkers.iter().map(|c| c.check(word)).collect();
    if let Some(pass) = results.iter().find(|r| r.passed) {
        return pass.clone();
    }
    if let Some(fix) = results.iter().find(|r| r.corrected != UNK) {
        return fix.clone();
    }
    SpellResult::new(word, UNK.to_string(), checkers.first().map_or("none", |c| c.id.as_str()))
}

/// The spell-check gate used by the pipeline.
///
/// Punctuation around a word is peeled off before checking and put back on
/// the correction. Single punctuation characters always pass, as do tokens
/// containing digits when `pass_digit_tokens` is set.
#[derive(Debug, Clone)]
pub struct SpellChain {
    checkers: Vec<CheckerConfig>,
    pub pass_digit_tokens: bool,
}

impl SpellChain {
    pub fn new(checkers: Vec<CheckerConfig>) -> Result<Self, LexiconError> {
        if checkers.is_empty() {
            return Err(LexiconError::EmptyChain);
        }
        Ok(Self { checkers, pass_digit_tokens: true })
    }

    pub fn with_digit_bypass(mut self, enabled: bool) -> Self {
        self.pass_digit_tokens = enabled;
        self
    }

    /// Dictionary of the first checker; also used to score rotations.
    pub fn primary_dictionary(&self) -> &Dictionary {
        &self.checkers[0].dictionary
    }

    pub fn check(&self, word: &str) -> SpellResult {
        let bypass = |id: &str| SpellResult::new(word, word.to_string(), id);
        let mut chars = word.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if !c.is_alphanumeric() {
                return bypass("punctuation");
            }
        }
        if self.pass_digit_tokens && word.chars().any(|c| c.is_ascii_digit()) {
            return bypass("digits");
        }
        let (lead, core, trail) = peel(word);
        if core.is_empty() {
            return bypass("punctuation");
        }
        let inner = spell_chain(core, &self.checkers);
        let corrected = if inner.corrected == UNK {
            UNK.to_string()
        } else {
            format!("{lead}{}{trail}", inner.corrected)
        };
        SpellResult::new(word, corrected, &inner.checker_id)
    }
}

/// Fraction of alphabetic tokens of length ≥ 2 found in `dict` (casefolded).
pub fn dictionary_score<S: AsRef<str>>(words: &[S], dict: &Dictionary) -> f64 {
    let mut qualifying = 0usize;
    let mut found = 0usize;
    for w in words {
        let w = w.as_ref();
        if w.chars().count() >= 2 && w.chars().all(char::is_alphabetic) {
            qualifying += 1;
            if dict.contains_casefold(w) {
                found += 1;
            }
        }
    }
    if qualifying == 0 {
        0.0
    } else {
        found as f64 / qualifying as f64
    }
}
