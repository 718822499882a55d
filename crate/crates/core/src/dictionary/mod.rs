//! Visual-word dictionary: per-class concept clustering, concept filtering,
//! global word clustering, two-stage assignment, visual sentences, and the
//! word co-occurrence matrix.

mod concepts;
mod kmeans;
mod sentences;
mod words;

pub use concepts::{build_concepts, filter_concepts, Concept, ConceptBuild};
pub use kmeans::{kmeans, KMeansResult};
pub use sentences::{
    build_sentence, cooccurrence_matrix, CooccurrenceMatrix, SentenceEntry, SentenceScope,
    VisualSentence,
};
pub use words::{assign_word, build_dictionary, DictionaryEntry, VisualWordDictionary};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DictionaryError {
    #[error("no points to cluster")]
    EmptyInput,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the number of points {n}")]
    KExceedsPoints { k: usize, n: usize },
    #[error("point {index} has dim {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("no class label for image {image_id:?}")]
    MissingClass { image_id: String },
    #[error("malformed superpixel id {id:?} in dictionary store")]
    BadSuperpixelId { id: String },
    #[error(
        "only {survivors} concepts at min_frequency {min_frequency}, cannot keep {keep_count}"
    )]
    NotEnoughSurvivors {
        survivors: usize,
        keep_count: usize,
        min_frequency: usize,
    },
    #[error("{n_concepts} concepts cannot form {n_words} words")]
    NotEnoughConcepts { n_concepts: usize, n_words: usize },
    #[error("word {word_id} has no concepts (degenerate clustering input)")]
    EmptyWord { word_id: u32 },
    #[error("query vector has dim {found}, dictionary dim is {expected}")]
    QueryDimMismatch { expected: usize, found: usize },
    #[error("word id {word_id} out of range for {n_words} words")]
    WordOutOfRange { word_id: u32, n_words: usize },
}
