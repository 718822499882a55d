//! Matching-words pair task: sampled image pairs labeled by whether the
//! two visual sentences share a word, carrying the representation-space
//! distance used to bin the analysis.

use super::TaskError;
use crate::dictionary::VisualSentence;
use crate::embedding::{EmbeddingStore, StoreRole};
use crate::probes::cosine_distance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::{BTreeMap, BTreeSet};

/// One sampled image pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MwcPair {
    pub image_a: String,
    pub image_b: String,
    /// Per-word flags: labels[w] = 1 when word w occurs in both images.
    pub labels: Vec<u8>,
    /// Cosine distance between the two image representations.
    pub distance: f64,
}

/// Start offset of each first-element block in the (i < j) pair
/// enumeration: pair index k belongs to first element i when
/// starts[i] <= k < starts[i + 1].
fn pair_starts(n: usize) -> Vec<usize> {
    let mut starts = Vec::with_capacity(n);
    let mut acc = 0usize;
    for i in 0..n {
        starts.push(acc);
        acc += n - 1 - i;
    }
    starts
}

/// Draw `n_pairs` distinct pair indices from `0..available`, returned
/// ascending. Small universes use a partial Fisher-Yates pass over the
/// full index range; large ones sample by rejection.
fn sample_pair_indices(available: usize, n_pairs: usize, rng: &mut impl Rng) -> Vec<usize> {
    const EXHAUSTIVE_LIMIT: usize = 1_000_000;
    let mut picked: Vec<usize> = if available <= EXHAUSTIVE_LIMIT {
        let mut all: Vec<usize> = (0..available).collect();
        for i in 0..n_pairs {
            let j = rng.random_range(i..available);
            all.swap(i, j);
        }
        all.truncate(n_pairs);
        all
    } else {
        let mut seen = BTreeSet::new();
        while seen.len() < n_pairs {
            seen.insert(rng.random_range(0..available));
        }
        seen.into_iter().collect()
    };
    picked.sort_unstable();
    picked
}

/// Sample `n_pairs` distinct image pairs without replacement; each pair
/// carries one flag per word marking mutual occurrence in both
/// sentences. The store must hold representation embeddings covering
/// every image, and every image needs a sentence.
pub fn mwc_build_pairs(
    image_ids: &[String],
    sentences: &BTreeMap<String, VisualSentence>,
    store: &EmbeddingStore,
    n_words: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<MwcPair>, TaskError> {
    if store.role() != StoreRole::Representation {
        return Err(TaskError::WrongRole {
            expected: StoreRole::Representation,
            found: store.role(),
        });
    }
    let n = image_ids.len();
    let available = n * n.saturating_sub(1) / 2;
    if n_pairs > available {
        return Err(TaskError::TooManyPairs {
            requested: n_pairs,
            available,
            n_images: n,
        });
    }
    let mut words = Vec::with_capacity(n);
    let mut embeddings: Vec<Vec<f64>> = Vec::with_capacity(n);
    for id in image_ids {
        let sentence = sentences
            .get(id)
            .ok_or_else(|| TaskError::MissingSentence {
                image_id: id.clone(),
            })?;
        words.push(&sentence.words);
        let vector = store
            .get(id)
            .ok_or_else(|| TaskError::MissingRepresentation {
                image_id: id.clone(),
            })?;
        embeddings.push(vector.iter().map(|&v| v as f64).collect());
    }

    let starts = pair_starts(n);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_pair_indices(available, n_pairs, &mut rng)
        .into_iter()
        .map(|k| {
            let i = starts.partition_point(|&s| s <= k) - 1;
            let j = i + 1 + (k - starts[i]);
            let labels = (0..n_words)
                .map(|w| {
                    let w = w as u32;
                    u8::from(words[i].contains(&w) && words[j].contains(&w))
                })
                .collect();
            let distance = cosine_distance(&embeddings[i], &embeddings[j])?;
            Ok(MwcPair {
                image_a: image_ids[i].clone(),
                image_b: image_ids[j].clone(),
                labels,
                distance,
            })
        })
        .collect()
}

/// Assign each pair to one of `n_bins` equal-count distance bins
/// (remainders go to the lowest bins). Returns the bin index per input
/// position; ties order by original position.
pub fn mwc_distance_bins(distances: &[f64], n_bins: usize) -> Result<Vec<usize>, TaskError> {
    let got = distances.len();
    if n_bins == 0 || got < n_bins {
        return Err(TaskError::TooFewPairs { got, n_bins });
    }
    if let Some(index) = distances.iter().position(|d| !d.is_finite()) {
        return Err(TaskError::NonFiniteValue { index });
    }
    let mut order: Vec<usize> = (0..got).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
    let (base, rem) = (got / n_bins, got % n_bins);
    let mut bins = vec![0usize; got];
    let mut cursor = 0;
    for (bin, chunk) in (0..n_bins).map(|b| (b, base + usize::from(b < rem))) {
        for _ in 0..chunk {
            bins[order[cursor]] = bin;
            cursor += 1;
        }
    }
    Ok(bins)
}

/// Probe input for a pair: the two representations concatenated.
pub fn mwc_pair_input(a: &[f64], b: &[f64]) -> Result<Vec<f64>, TaskError> {
    if a.len() != b.len() {
        return Err(TaskError::FieldLengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().chain(b).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i:02}")).collect()
    }

    fn sentence_map(word_sets: &[&[u32]]) -> BTreeMap<String, VisualSentence> {
        word_sets
            .iter()
            .enumerate()
            .map(|(i, ws)| {
                let id = format!("img{i:02}");
                (
                    id.clone(),
                    VisualSentence {
                        image_id: id,
                        words: ws.iter().copied().collect(),
                    },
                )
            })
            .collect()
    }

    /// Store of 3-dim unit vectors: image i points along axis i % 3.
    fn axis_store(n: usize) -> EmbeddingStore {
        let mut store = EmbeddingStore::new(StoreRole::Representation, 3);
        for (i, id) in ids(n).into_iter().enumerate() {
            let mut v = vec![0.0f32; 3];
            v[i % 3] = 1.0;
            store.insert(id, v).unwrap();
        }
        store
    }

    #[test]
    fn requesting_every_pair_enumerates_each_exactly_once() {
        let n = 5;
        let image_ids = ids(n);
        let sentences = sentence_map(&[&[0], &[0], &[1], &[1], &[2]]);
        let store = axis_store(n);
        let pairs = mwc_build_pairs(&image_ids, &sentences, &store, 3, 10, 7).unwrap();
        assert_eq!(pairs.len(), 10);
        let seen: BTreeSet<(String, String)> = pairs
            .iter()
            .map(|p| (p.image_a.clone(), p.image_b.clone()))
            .collect();
        assert_eq!(seen.len(), 10, "a pair repeated");
        for (a, b) in &seen {
            assert!(a < b, "pair ({a}, {b}) not in canonical order");
        }
    }

    #[test]
    fn labels_flag_mutual_words_and_distances_follow_the_store() {
        let image_ids = ids(3);
        // img00 and img01 share word 5; img02 shares nothing.
        let sentences = sentence_map(&[&[5, 8], &[5, 9], &[1]]);
        let mut store = EmbeddingStore::new(StoreRole::Representation, 2);
        store.insert("img00", vec![1.0, 0.0]).unwrap();
        store.insert("img01", vec![1.0, 0.0]).unwrap();
        store.insert("img02", vec![0.0, 1.0]).unwrap();
        let pairs = mwc_build_pairs(&image_ids, &sentences, &store, 10, 3, 1).unwrap();
        let find = |a: &str, b: &str| pairs.iter().find(|p| p.image_a == a && p.image_b == b);
        let p01 = find("img00", "img01").unwrap();
        let mut expected = vec![0u8; 10];
        expected[5] = 1;
        assert_eq!(p01.labels, expected);
        assert!(p01.distance.abs() < 1e-12);
        let p02 = find("img00", "img02").unwrap();
        assert_eq!(p02.labels, vec![0u8; 10], "disjoint sentences share nothing");
        assert!((p02.distance - 1.0).abs() < 1e-12);
        assert_eq!(find("img01", "img02").unwrap().labels, vec![0u8; 10]);
    }

    #[test]
    fn equal_sentences_yield_that_sentence_word_flags() {
        let image_ids = ids(2);
        let sentences = sentence_map(&[&[1, 3], &[1, 3]]);
        let mut store = EmbeddingStore::new(StoreRole::Representation, 2);
        store.insert("img00", vec![2.0, 1.0]).unwrap();
        store.insert("img01", vec![2.0, 1.0]).unwrap();
        let pairs = mwc_build_pairs(&image_ids, &sentences, &store, 5, 1, 0).unwrap();
        assert_eq!(
            pairs[0].labels,
            crate::tasks::wc_labels(&sentences["img00"], 5)
        );
        assert!(pairs[0].distance.abs() < 1e-12);
    }

    #[test]
    fn sampling_is_seeded_and_without_replacement() {
        let n = 30;
        let image_ids = ids(n);
        let word_sets: Vec<Vec<u32>> = (0..n).map(|i| vec![i as u32]).collect();
        let refs: Vec<&[u32]> = word_sets.iter().map(|w| w.as_slice()).collect();
        let sentences = sentence_map(&refs);
        let store = axis_store(n);
        let a = mwc_build_pairs(&image_ids, &sentences, &store, 30, 20, 11).unwrap();
        let b = mwc_build_pairs(&image_ids, &sentences, &store, 30, 20, 11).unwrap();
        assert_eq!(a, b);
        let c = mwc_build_pairs(&image_ids, &sentences, &store, 30, 20, 12).unwrap();
        assert_ne!(a, c, "different seeds drew the same 20 of 435 pairs");
        let distinct: BTreeSet<_> = a
            .iter()
            .map(|p| (p.image_a.clone(), p.image_b.clone()))
            .collect();
        assert_eq!(distinct.len(), 20);
    }

    #[test]
    fn rejection_sampler_matches_the_contract_above_the_cutoff() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let picked = sample_pair_indices(1_500_000, 100, &mut rng);
        assert_eq!(picked.len(), 100);
        assert!(picked.windows(2).all(|w| w[0] < w[1]), "not strictly ascending");
        assert!(picked.iter().all(|&k| k < 1_500_000));
    }

    #[test]
    fn exhaustive_sampler_returns_the_full_range_when_asked_for_all() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let picked = sample_pair_indices(10, 10, &mut rng);
        assert_eq!(picked, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn pair_index_decode_covers_all_positions() {
        let n = 7;
        let starts = pair_starts(n);
        let mut seen = BTreeSet::new();
        for k in 0..n * (n - 1) / 2 {
            let i = starts.partition_point(|&s| s <= k) - 1;
            let j = i + 1 + (k - starts[i]);
            assert!(i < j && j < n, "decoded ({i}, {j}) out of range");
            seen.insert((i, j));
        }
        assert_eq!(seen.len(), n * (n - 1) / 2);
    }

    #[test]
    fn build_errors_cover_role_counts_and_missing_entries() {
        let image_ids = ids(3);
        let sentences = sentence_map(&[&[0], &[1], &[2]]);
        let store = axis_store(3);
        assert!(matches!(
            mwc_build_pairs(&image_ids, &sentences, &store, 3, 4, 0),
            Err(TaskError::TooManyPairs {
                requested: 4,
                available: 3,
                n_images: 3
            })
        ));
        let dict_store = EmbeddingStore::new(StoreRole::Dictionary, 3);
        assert!(matches!(
            mwc_build_pairs(&image_ids, &sentences, &dict_store, 3, 1, 0),
            Err(TaskError::WrongRole { .. })
        ));
        let mut short = sentences.clone();
        short.remove("img02");
        assert!(matches!(
            mwc_build_pairs(&image_ids, &short, &store, 3, 1, 0),
            Err(TaskError::MissingSentence { image_id }) if image_id == "img02"
        ));
        let small_store = axis_store(2);
        assert!(matches!(
            mwc_build_pairs(&image_ids, &sentences, &small_store, 3, 1, 0),
            Err(TaskError::MissingRepresentation { image_id }) if image_id == "img02"
        ));
    }

    #[test]
    fn bins_are_equal_count_and_ordered_by_distance() {
        // 100 shuffled distances into 10 bins of exactly 10.
        let mut distances: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64).collect();
        distances.reverse();
        let bins = mwc_distance_bins(&distances, 10).unwrap();
        let mut counts = [0usize; 10];
        for &b in &bins {
            counts[b] += 1;
        }
        assert_eq!(counts, [10; 10]);
        for lower in 0..9 {
            let max_lower = distances
                .iter()
                .zip(&bins)
                .filter(|(_, &b)| b == lower)
                .map(|(d, _)| *d)
                .fold(f64::NEG_INFINITY, f64::max);
            let min_upper = distances
                .iter()
                .zip(&bins)
                .filter(|(_, &b)| b == lower + 1)
                .map(|(d, _)| *d)
                .fold(f64::INFINITY, f64::min);
            assert!(max_lower <= min_upper, "bins {lower} and {} overlap", lower + 1);
        }
    }

    #[test]
    fn bin_remainders_fill_the_lowest_bins_first() {
        let distances: Vec<f64> = (0..103).map(|i| i as f64).collect();
        let bins = mwc_distance_bins(&distances, 10).unwrap();
        let mut counts = [0usize; 10];
        for &b in &bins {
            counts[b] += 1;
        }
        assert_eq!(counts, [11, 11, 11, 10, 10, 10, 10, 10, 10, 10]);
    }

    #[test]
    fn tied_distances_bin_by_original_position() {
        let bins = mwc_distance_bins(&[5.0, 5.0, 5.0, 5.0], 2).unwrap();
        assert_eq!(bins, vec![0, 0, 1, 1]);
    }

    #[test]
    fn bin_errors() {
        assert!(matches!(
            mwc_distance_bins(&[1.0, 2.0, 3.0], 5),
            Err(TaskError::TooFewPairs { got: 3, n_bins: 5 })
        ));
        assert!(matches!(
            mwc_distance_bins(&[1.0], 0),
            Err(TaskError::TooFewPairs { got: 1, n_bins: 0 })
        ));
        assert!(matches!(
            mwc_distance_bins(&[1.0, f64::NAN, 2.0], 2),
            Err(TaskError::NonFiniteValue { index: 1 })
        ));
    }

    #[test]
    fn pair_input_concatenates_matching_lengths() {
        assert_eq!(
            mwc_pair_input(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert!(matches!(
            mwc_pair_input(&[1.0], &[1.0, 2.0]),
            Err(TaskError::FieldLengthMismatch { left: 1, right: 2 })
        ));
    }
}
