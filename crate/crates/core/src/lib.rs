//! Transcription of scanned document pages that mix machine-printed and
//! handwritten text, without classifying text type up front.
//!
//! A page goes through enhancement, deskew and cardinal rotation selection,
//! then page-level machine-printed OCR. Every recognized word is spell
//! checked; words that fail are cropped, padded and sent to a word-level
//! handwriting recognizer whose output is itself spell checked. The up to
//! four candidates per word (an [`OptionsList`]) are resolved to a final
//! word by rule-based or context-based [`nomination`].
//!
//! The [`metrics`] module scores transcriptions at character level
//! (normalized Levenshtein), word level (bag-of-words precision, recall and
//! F-score) and document level (embedding cosine similarity).

pub mod doc_model;
pub mod embeddings;
pub mod hocr;
pub mod imaging;
pub mod lexicon;
pub mod metrics;
pub mod mixed_labels;
pub mod nomination;
pub mod pipeline;
pub mod recognizers;

pub use doc_model::{BBox, OptionsList, OptionsSize, PageRecord, Transcription, WordBox, WordKey, UNK};
pub use embeddings::EmbeddingModel;
pub use hocr::HocrPage;
pub use imaging::{RasterImage, SkewEstimate};
pub use lexicon::{Dictionary, SpellChain, SpellResult};
pub use metrics::EvaluationReport;
pub use nomination::Strategy;
pub use pipeline::{Pipeline, PipelineConfig};
