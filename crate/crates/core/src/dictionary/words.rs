//! Global word clustering over concept centroids and two-stage assignment.

use super::{kmeans, Concept, DictionaryError};

/// One concept inside a built dictionary, tagged with its word.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryEntry {
    /// Stable concept index from the concept-building stage.
    pub concept_index: usize,
    pub centroid: Vec<f64>,
    pub class_label: String,
    pub member_count: usize,
    pub importance: Option<f64>,
    pub word_id: u32,
}

/// The visual-word dictionary: filtered concepts grouped into words.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualWordDictionary {
    /// Entries ordered by stable concept index.
    pub entries: Vec<DictionaryEntry>,
    /// Word centroids from the global clustering, indexed by word id.
    pub word_centroids: Vec<Vec<f64>>,
}

impl VisualWordDictionary {
    pub fn n_words(&self) -> usize {
        self.word_centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.word_centroids.first().map_or(0, |c| c.len())
    }

    /// Concept indices belonging to `word_id`.
    pub fn concepts_of_word(&self, word_id: u32) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.word_id == word_id)
            .map(|e| e.concept_index)
            .collect()
    }
}

/// Cluster the filtered concepts' centroids into `n_words` visual words.
///
/// Every concept is assigned to exactly one word and every word receives at
/// least one concept (an empty word is an error and indicates degenerate,
/// duplicate-heavy input). Deterministic for a fixed seed.
pub fn build_dictionary(
    filtered: &[(usize, Concept)],
    n_words: usize,
    seed: u64,
    kmeans_max_iter: usize,
    kmeans_tol: f64,
) -> Result<VisualWordDictionary, DictionaryError> {
    if n_words == 0 {
        return Err(DictionaryError::ZeroK);
    }
    if filtered.len() < n_words {
        return Err(DictionaryError::NotEnoughConcepts {
            n_concepts: filtered.len(),
            n_words,
        });
    }
    let points: Vec<Vec<f64>> = filtered.iter().map(|(_, c)| c.centroid.clone()).collect();
    let result = kmeans(&points, n_words, seed, kmeans_max_iter, kmeans_tol)?;

    let mut seen = vec![false; n_words];
    let entries: Vec<DictionaryEntry> = filtered
        .iter()
        .zip(&result.assignments)
        .map(|((index, c), &word)| {
            seen[word] = true;
            DictionaryEntry {
                concept_index: *index,
                centroid: c.centroid.clone(),
                class_label: c.class_label.clone(),
                member_count: c.member_count,
                importance: c.importance,
                word_id: word as u32,
            }
        })
        .collect();
    if let Some(empty) = seen.iter().position(|&s| !s) {
        return Err(DictionaryError::EmptyWord {
            word_id: empty as u32,
        });
    }

    Ok(VisualWordDictionary {
        entries,
        word_centroids: result.centroids,
    })
}

/// Two-stage assignment: find the nearest concept centroid (Euclidean, ties
/// to the lowest concept index), then return that concept's word.
pub fn assign_word(dict: &VisualWordDictionary, vector: &[f64]) -> Result<u32, DictionaryError> {
    let dim = dict.dim();
    if vector.len() != dim {
        return Err(DictionaryError::QueryDimMismatch {
            expected: dim,
            found: vector.len(),
        });
    }
    let mut best = f64::INFINITY;
    let mut word = None;
    for entry in &dict.entries {
        let d: f64 = entry
            .centroid
            .iter()
            .zip(vector)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best {
            best = d;
            word = Some(entry.word_id);
        }
    }
    word.ok_or(DictionaryError::EmptyInput)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn concept_at(centroid: Vec<f64>) -> Concept {
        Concept {
            centroid,
            class_label: "c".into(),
            member_count: 10,
            importance: None,
        }
    }

    fn indexed(concepts: Vec<Concept>) -> Vec<(usize, Concept)> {
        concepts.into_iter().enumerate().collect()
    }

    #[test]
    fn every_concept_mapped_every_word_nonempty() {
        let mut concepts = Vec::new();
        for i in 0..12 {
            let base = (i / 3) as f64 * 10.0;
            concepts.push(concept_at(vec![base + (i % 3) as f64 * 0.1, base]));
        }
        let dict = build_dictionary(&indexed(concepts), 4, 5, 100, 1e-9).unwrap();
        assert_eq!(dict.entries.len(), 12);
        assert_eq!(dict.n_words(), 4);
        for w in 0..4u32 {
            assert!(
                !dict.concepts_of_word(w).is_empty(),
                "word {w} has no concepts"
            );
        }
    }

    #[test]
    fn duplicate_pairs_pair_up() {
        // Concepts duplicated in pairs, n_words = half: each word holds
        // exactly one duplicated pair.
        let mut concepts = Vec::new();
        for i in 0..5 {
            let c = vec![i as f64 * 7.0, -(i as f64)];
            concepts.push(concept_at(c.clone()));
            concepts.push(concept_at(c));
        }
        let dict = build_dictionary(&indexed(concepts), 5, 2, 100, 1e-12).unwrap();
        for w in 0..5u32 {
            let members = dict.concepts_of_word(w);
            assert_eq!(members.len(), 2, "word {w}: {members:?}");
            // Pairs were adjacent in the input.
            assert_eq!(members[0] + 1, members[1]);
        }
    }

    #[test]
    fn too_few_concepts_is_an_error() {
        let concepts = indexed(vec![concept_at(vec![0.0]), concept_at(vec![1.0])]);
        assert!(matches!(
            build_dictionary(&concepts, 3, 0, 10, 1e-6),
            Err(DictionaryError::NotEnoughConcepts {
                n_concepts: 2,
                n_words: 3
            })
        ));
    }

    #[test]
    fn deterministic() {
        let concepts: Vec<Concept> = (0..20)
            .map(|i| concept_at(vec![(i as f64 * 13.7) % 5.0, (i as f64 * 7.3) % 3.0]))
            .collect();
        let a = build_dictionary(&indexed(concepts.clone()), 6, 99, 100, 1e-9).unwrap();
        let b = build_dictionary(&indexed(concepts), 6, 99, 100, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assignment_at_concept_centroid_returns_its_word() {
        let concepts: Vec<Concept> = (0..8)
            .map(|i| concept_at(vec![i as f64 * 3.0, (i % 2) as f64]))
            .collect();
        let dict = build_dictionary(&indexed(concepts), 3, 1, 100, 1e-9).unwrap();
        for entry in &dict.entries {
            let w = assign_word(&dict, &entry.centroid).unwrap();
            assert_eq!(w, entry.word_id);
        }
    }

    #[test]
    fn assignment_tie_takes_lowest_concept_index() {
        // Two concepts equidistant from the query; the lower concept index
        // must win even if its word id is higher.
        let concepts = vec![
            (0usize, concept_at(vec![-1.0, 0.0])),
            (1usize, concept_at(vec![1.0, 0.0])),
        ];
        let dict = build_dictionary(&concepts, 2, 3, 100, 1e-9).unwrap();
        let w = assign_word(&dict, &[0.0, 0.0]).unwrap();
        assert_eq!(w, dict.entries[0].word_id);
    }

    #[test]
    fn two_stage_differs_from_word_mean_nearest() {
        // Concepts at {0, 1, 4, 6, 6.5} under k=2 have a unique Lloyd fixed
        // point {0,1} | {4,6,6.5} with word means 0.5 and 5.5. Query 2.8:
        // nearest concept is 4 (word B, distance 1.2), but the nearest word
        // mean is A (2.3 < 2.7). Two-stage must say B.
        let concepts = vec![
            (0usize, concept_at(vec![0.0])),
            (1usize, concept_at(vec![1.0])),
            (2usize, concept_at(vec![4.0])),
            (3usize, concept_at(vec![6.0])),
            (4usize, concept_at(vec![6.5])),
        ];
        let dict = build_dictionary(&concepts, 2, 11, 100, 1e-9).unwrap();
        let word_a = dict.entries[0].word_id;
        let word_b = dict.entries[2].word_id;
        assert_eq!(dict.entries[1].word_id, word_a, "0 and 1 share a word");
        assert_eq!(dict.entries[3].word_id, word_b, "4 and 6 share a word");
        assert_eq!(dict.entries[4].word_id, word_b, "4 and 6.5 share a word");
        assert_ne!(word_a, word_b);

        let assigned = assign_word(&dict, &[2.8]).unwrap();
        assert_eq!(assigned, word_b, "two-stage follows the concept");

        // Confirm the word-mean rule would have disagreed.
        let mean_a = 0.5;
        let mean_b = (4.0 + 6.0 + 6.5) / 3.0;
        assert!((2.8f64 - mean_a).abs() < (2.8f64 - mean_b).abs());
    }

    #[test]
    fn query_dim_is_validated() {
        let concepts = vec![(0usize, concept_at(vec![0.0, 0.0]))];
        let dict = build_dictionary(&concepts, 1, 0, 10, 1e-6).unwrap();
        assert!(matches!(
            assign_word(&dict, &[1.0]),
            Err(DictionaryError::QueryDimMismatch { .. })
        ));
    }
}
