//! Visual sentences and the word co-occurrence matrix.

use super::DictionaryError;
use std::collections::BTreeSet;

/// Word assignment of one superpixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceEntry {
    pub resolution: String,
    pub label: u32,
    pub word_id: u32,
}

/// Which superpixel assignments feed an image's sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SentenceScope {
    /// Union over all segmentation resolutions (the default).
    Union,
    /// A single named resolution.
    Single(String),
}

/// The set of visual words present in one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisualSentence {
    pub image_id: String,
    pub words: BTreeSet<u32>,
}

impl VisualSentence {
    /// Number of distinct words.
    pub fn length(&self) -> usize {
        self.words.len()
    }

    pub fn contains(&self, word: u32) -> bool {
        self.words.contains(&word)
    }
}

/// Collect an image's sentence from its per-superpixel word assignments.
pub fn build_sentence(
    image_id: &str,
    entries: &[SentenceEntry],
    scope: &SentenceScope,
) -> VisualSentence {
    let words = entries
        .iter()
        .filter(|e| match scope {
            SentenceScope::Union => true,
            SentenceScope::Single(tag) => &e.resolution == tag,
        })
        .map(|e| e.word_id)
        .collect();
    VisualSentence {
        image_id: image_id.to_owned(),
        words,
    }
}

/// Symmetric image-level co-occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    pub n_words: usize,
    /// `counts[i][j]` = number of sentences containing both word i and
    /// word j; the diagonal holds per-word sentence frequency.
    pub counts: Vec<Vec<u64>>,
}

impl CooccurrenceMatrix {
    /// Co-occurrence row for `word`, i.e. `counts[word][..]`.
    pub fn row(&self, word: u32) -> Result<&[u64], DictionaryError> {
        self.counts
            .get(word as usize)
            .map(|r| r.as_slice())
            .ok_or(DictionaryError::WordOutOfRange {
                word_id: word,
                n_words: self.n_words,
            })
    }
}

/// Count, for every word pair, the images whose sentences contain both.
pub fn cooccurrence_matrix(sentences: &[VisualSentence], n_words: usize) -> CooccurrenceMatrix {
    let mut counts = vec![vec![0u64; n_words]; n_words];
    for sentence in sentences {
        let words: Vec<u32> = sentence
            .words
            .iter()
            .copied()
            .filter(|&w| (w as usize) < n_words)
            .collect();
        for (i, &a) in words.iter().enumerate() {
            counts[a as usize][a as usize] += 1;
            for &b in &words[i + 1..] {
                counts[a as usize][b as usize] += 1;
                counts[b as usize][a as usize] += 1;
            }
        }
    }
    CooccurrenceMatrix { n_words, counts }
}
