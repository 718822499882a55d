//! Label extraction for the WC, SL, and CB tasks.

use super::bins::BinSpec;
use crate::dictionary::VisualSentence;
use crate::imaging::SuperpixelStats;

/// One presence flag per vocabulary word: 1 iff the word occurs in the
/// image's sentence.
pub fn wc_labels(sentence: &VisualSentence, vocab: usize) -> Vec<u8> {
    let mut flags = vec![0u8; vocab];
    for &w in &sentence.words {
        if (w as usize) < vocab {
            flags[w as usize] = 1;
        }
    }
    flags
}

/// Binned count of unique words in the sentence.
pub fn sl_label(sentence: &VisualSentence, bins: &BinSpec) -> usize {
    bins.classify(sentence.length() as f64)
}

/// Binned compactness (shape) and intra-cluster variation (color) of one
/// superpixel.
pub fn cb_labels(
    stats: &SuperpixelStats,
    shape_bins: &BinSpec,
    color_bins: &BinSpec,
) -> (usize, usize) {
    (
        shape_bins.classify(stats.co),
        color_bins.classify(stats.icv),
    )
}

#[cfg(test)]
mod tests {
    use super::super::bins::{table3_cb_color_bins, table3_cb_shape_bins, table3_sl_bins};
    use super::*;
    use std::collections::BTreeSet;

    fn sentence(words: &[u32]) -> VisualSentence {
        VisualSentence {
            image_id: "img".into(),
            words: words.iter().copied().collect(),
        }
    }

    #[test]
    fn flags_mark_member_words() {
        let flags = wc_labels(&sentence(&[3, 7]), 10);
        let expect: Vec<u8> = (0..10).map(|w| (w == 3 || w == 7) as u8).collect();
        assert_eq!(flags, expect);
    }

    #[test]
    fn full_vocabulary_sentence_is_all_ones() {
        let words: Vec<u32> = (0..50).collect();
        assert_eq!(wc_labels(&sentence(&words), 50), vec![1u8; 50]);
    }

    #[test]
    fn flags_match_membership_oracle() {
        let mut state = 77u64;
        for _ in 0..50 {
            let mut words = BTreeSet::new();
            for w in 0..50u32 {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                if state.is_multiple_of(4) {
                    words.insert(w);
                }
            }
            let s = VisualSentence {
                image_id: "i".into(),
                words: words.clone(),
            };
            let flags = wc_labels(&s, 50);
            for w in 0..50u32 {
                assert_eq!(flags[w as usize] == 1, words.contains(&w));
            }
        }
    }

    #[test]
    fn sentence_length_uses_unique_count() {
        let words: Vec<u32> = (0..21).collect();
        assert_eq!(sl_label(&sentence(&words), &table3_sl_bins()), 2);
        assert_eq!(sl_label(&sentence(&[1, 2]), &table3_sl_bins()), 0);
        let long: Vec<u32> = (0..30).collect();
        assert_eq!(sl_label(&sentence(&long), &table3_sl_bins()), 5);
    }

    #[test]
    fn cb_bins_follow_the_default_edges() {
        let stats = SuperpixelStats {
            label: 0,
            area: 10,
            perimeter: 20,
            co: 0.20,
            icv: 0.09,
            centroid: (0.0, 0.0),
            bbox: (0, 0, 0, 0),
        };
        let (shape, color) = cb_labels(&stats, &table3_cb_shape_bins(), &table3_cb_color_bins());
        assert_eq!(shape, 1);
        assert_eq!(color, 2);
    }
}
